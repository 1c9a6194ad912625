#pragma once

#include "cryptaudit/ingest.hpp"
#include "cryptaudit/rules.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cryptaudit {

enum class ReportFormat { Json, Text };

std::optional<ReportFormat> parse_report_format(std::string_view text);

struct ProjectReport {
    std::string project_id;
    std::optional<ProjectMetadata> metadata;
    // Majority file language; "Unknown" when the project has no source files.
    std::string language = "Unknown";
    bool language_tie = false;
    int file_count = 0;
    int ir_unit_count = 0;
    bool crypto_enabled = false;
    bool misuse = false;
    std::vector<Finding> findings;
    std::vector<std::string> partial_files;
    std::int64_t duration_ms = 0;
    std::int64_t ir_ms = 0;
    std::int64_t graph_ms = 0;
    std::int64_t detect_ms = 0;
};

struct EmitOptions {
    // Zero the wall-clock fields so documents compare byte-for-byte.
    bool mask_timing = false;
};

std::string emit_project_report(const ProjectReport& report, ReportFormat format, EmitOptions opts = {});
nlohmann::ordered_json report_to_json(const ProjectReport& report, EmitOptions opts = {});
nlohmann::ordered_json finding_to_json(const Finding& f);

struct DimensionCell {
    int crypto_yes = 0;
    int crypto_no = 0;
    int misuse_yes = 0;
    int misuse_no = 0;

    bool operator==(const DimensionCell&) const = default;
};

using RulePair = std::pair<RuleId, RuleId>;

struct CorpusStats {
    int total_projects = 0;
    int crypto_enabled_count = 0;
    int misuse_count = 0;
    double misuse_rate = 0.0;
    std::map<RuleId, int> by_rule;
    std::map<RulePair, int> rule_cooccurrence;  // first < second
    std::map<std::string, DimensionCell> by_language;
    std::map<std::string, DimensionCell> by_category;
    std::map<std::string, DimensionCell> by_market;

    bool operator==(const CorpusStats&) const = default;
};

inline constexpr const char* kUnknownLabel = "Unknown";

/// Throws Error{DuplicateProjectId}.
CorpusStats aggregate_corpus(const std::vector<ProjectReport>& reports);
/// Associative merge of partial aggregates over disjoint project sets.
CorpusStats merge_stats(const CorpusStats& a, const CorpusStats& b);

nlohmann::ordered_json stats_to_json(const CorpusStats& stats);
std::string render_summary(const CorpusStats& stats);

}  // namespace cryptaudit

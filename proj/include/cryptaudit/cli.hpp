#pragma once

#include "cryptaudit/dependency.hpp"
#include "cryptaudit/heuristics.hpp"
#include "cryptaudit/ingest.hpp"
#include "cryptaudit/report.hpp"
#include "cryptaudit/rules.hpp"

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cryptaudit {

enum class FailOn { Never, Misuse, AnyFinding };

struct ScanConfig {
    fs::path target;
    bool corpus_mode = false;
    std::optional<fs::path> metadata_file;
    std::optional<fs::path> catalog_file;
    std::optional<fs::path> config_file;
    std::set<RuleId> enabled_rules = all_rules();
    ReportFormat output_format = ReportFormat::Text;
    std::optional<fs::path> emit_ir;
    std::optional<fs::path> emit_graph;
    std::optional<fs::path> output_file;
    MustScope must_scope = MustScope::Project;
    Thresholds thresholds;
    int parallelism = 1;
    FailOn fail_on = FailOn::Misuse;
    bool mask_timing = false;
};

/// `args` excludes the program name and starts with the subcommand. Throws
/// Error{Usage} carrying the help text. --config is read here so the
/// returned thresholds are final.
ScanConfig parse_args(const std::vector<std::string>& args);

/// Reads r4.min_iterations, r1.min_length and r1.min_entropy from a JSON file,
/// either as dotted keys or nested objects.
Thresholds load_thresholds(const fs::path& file, Thresholds base = {});

/// 1 when any report triggers under `fail_on`, else 0.
int exit_code_for(const std::vector<ProjectReport>& reports, FailOn fail_on);

/// Full pipeline. Reports go to `out` (or the --output file), timing and
/// warnings to `err`. Returns 0, 1, or 2 on an operational error.
int run_scan(const ScanConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + run_scan with usage errors mapped to exit 2.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cryptaudit

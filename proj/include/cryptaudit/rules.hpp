#pragma once

#include "cryptaudit/catalog.hpp"
#include "cryptaudit/dependency.hpp"
#include "cryptaudit/heuristics.hpp"
#include "cryptaudit/taint.hpp"

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cryptaudit {

enum class RuleId { R1 = 1, R2, R3, R4, R5, R6, R7, R8 };
enum class Severity { Misuse, Informational };
enum class Confidence { Definite, Potential };

std::string_view to_string(RuleId id);
std::string_view to_string(Severity s);
std::string_view to_string(Confidence c);
std::optional<RuleId> parse_rule_id(std::string_view text);
std::set<RuleId> all_rules();
/// "R1,R3" style list. Throws Error{Usage} on unknown ids or an empty list.
std::set<RuleId> parse_rule_list(std::string_view text);

struct Finding {
    RuleId rule_id = RuleId::R1;
    Severity severity = Severity::Misuse;
    Confidence confidence = Confidence::Definite;
    std::string project_id;
    std::string file;
    int line = 1;
    std::string message;
    std::optional<TaintChain> evidence;
    std::vector<std::pair<std::string, OriginValue>> resolved_origins;

    bool operator==(const Finding&) const = default;
};

/// Shared inputs of every checker.
struct RuleContext {
    AnalysisInput input;
    std::string project_id;
    std::vector<TaintChain> chains;
};

std::vector<Finding> check_fixed_secret(const RuleContext& ctx);          // R1
std::vector<Finding> check_fixed_iv_salt(const RuleContext& ctx);         // R2
std::vector<Finding> check_weak_hash(const RuleContext& ctx);             // R3
std::vector<Finding> check_kdf_config(const RuleContext& ctx);            // R4
std::vector<Finding> check_static_seed(const RuleContext& ctx);           // R5
std::vector<Finding> check_ecb_mode(const RuleContext& ctx);              // R6
std::vector<Finding> check_missing_integrity(const RuleContext& ctx);     // R7
std::vector<Finding> check_deprecated_primitive(const RuleContext& ctx);  // R8

/// Enabled checkers, deduplicated on (project, rule, file, line, message) and
/// sorted by (file, line, rule, message).
std::vector<Finding> evaluate_rules(const RuleContext& ctx, const std::set<RuleId>& enabled);

bool any_misuse(const std::vector<Finding>& findings);

/// Algorithm names treated as deprecated by R8.
const std::vector<std::string>& deprecated_algorithms();
/// True when `algorithm` (e.g. "des-cbc", "RC4") names a deprecated primitive.
bool is_deprecated_algorithm(std::string_view algorithm);

/// Block-cipher mode named in free text ("aes-256-cbc", "AES.MODE_GCM"), lowercase.
std::optional<std::string> mode_in_text(std::string_view text);
bool is_authenticated_mode(std::string_view mode);

}  // namespace cryptaudit

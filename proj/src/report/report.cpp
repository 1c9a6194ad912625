#include "cryptaudit/report.hpp"
#include "cryptaudit/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace cryptaudit {

using nlohmann::ordered_json;

std::optional<ReportFormat> parse_report_format(std::string_view text) {
    if (text == "json") return ReportFormat::Json;
    if (text == "text") return ReportFormat::Text;
    return std::nullopt;
}

ordered_json finding_to_json(const Finding& f) {
    ordered_json j;
    j["rule"] = std::string(to_string(f.rule_id));
    j["severity"] = std::string(to_string(f.severity));
    j["confidence"] = std::string(to_string(f.confidence));
    j["file"] = f.file;
    j["line"] = f.line;
    j["message"] = f.message;
    if (f.evidence) {
        ordered_json hops = ordered_json::array();
        for (const auto& h : f.evidence->hops) {
            hops.push_back({{"from", h.from}, {"to", h.to}, {"kind", std::string(to_string(h.kind))},
                            {"witness", h.witness}});
        }
        j["chain"] = std::move(hops);
    } else {
        j["chain"] = nullptr;
    }
    return j;
}

ordered_json report_to_json(const ProjectReport& r, EmitOptions opts) {
    ordered_json j;
    j["project_id"] = r.project_id;
    ordered_json meta = ordered_json::object();
    if (r.metadata) {
        meta["market"] = r.metadata->market;
        meta["category"] = r.metadata->category;
        meta["language"] = r.metadata->declared_language;
    }
    j["metadata"] = std::move(meta);
    j["language"] = r.language;
    j["language_tie"] = r.language_tie;
    j["file_count"] = r.file_count;
    j["ir_unit_count"] = r.ir_unit_count;
    j["crypto_enabled"] = r.crypto_enabled;
    j["misuse"] = r.misuse;
    ordered_json findings = ordered_json::array();
    for (const auto& f : r.findings) findings.push_back(finding_to_json(f));
    j["findings"] = std::move(findings);
    j["partial_files"] = r.partial_files;
    j["duration_ms"] = opts.mask_timing ? 0 : r.duration_ms;
    j["ir_ms"] = opts.mask_timing ? 0 : r.ir_ms;
    j["graph_ms"] = opts.mask_timing ? 0 : r.graph_ms;
    j["detect_ms"] = opts.mask_timing ? 0 : r.detect_ms;
    return j;
}

std::string emit_project_report(const ProjectReport& report, ReportFormat format, EmitOptions opts) {
    if (format == ReportFormat::Json) return report_to_json(report, opts).dump(2) + "\n";
    std::string out;
    for (const auto& f : report.findings) {
        out += fmt::format("{} {} {}:{} {}", to_string(f.rule_id), to_string(f.severity), f.file, f.line, f.message);
        if (f.confidence == Confidence::Potential) out += " (potential)";
        out += '\n';
    }
    return out;
}

namespace {

std::string label_or_unknown(const std::string& s) { return s.empty() ? kUnknownLabel : s; }

void add_cell(std::map<std::string, DimensionCell>& dim, const std::string& label, const ProjectReport& r) {
    auto& c = dim[label];
    (r.crypto_enabled ? c.crypto_yes : c.crypto_no) += 1;
    (r.misuse ? c.misuse_yes : c.misuse_no) += 1;
}

CorpusStats single(const ProjectReport& r) {
    CorpusStats s;
    s.total_projects = 1;
    s.crypto_enabled_count = r.crypto_enabled ? 1 : 0;
    s.misuse_count = r.misuse ? 1 : 0;
    std::set<RuleId> rules;
    for (const auto& f : r.findings) {
        if (f.severity == Severity::Misuse) rules.insert(f.rule_id);
    }
    for (auto a : rules) {
        s.by_rule[a] = 1;
        for (auto b : rules) {
            if (a < b) s.rule_cooccurrence[{a, b}] = 1;
        }
    }
    std::string language = r.language;
    if (r.metadata && !r.metadata->declared_language.empty()) language = r.metadata->declared_language;
    add_cell(s.by_language, label_or_unknown(language), r);
    add_cell(s.by_category, label_or_unknown(r.metadata ? r.metadata->category : ""), r);
    add_cell(s.by_market, label_or_unknown(r.metadata ? r.metadata->market : ""), r);
    s.misuse_rate = s.crypto_enabled_count > 0 ? static_cast<double>(s.misuse_count) / s.crypto_enabled_count : 0.0;
    return s;
}

template <typename K, typename V>
void add_counts(std::map<K, V>& into, const std::map<K, V>& from) {
    for (const auto& [k, v] : from) into[k] += v;
}

void add_cells(std::map<std::string, DimensionCell>& into, const std::map<std::string, DimensionCell>& from) {
    for (const auto& [k, v] : from) {
        auto& c = into[k];
        c.crypto_yes += v.crypto_yes;
        c.crypto_no += v.crypto_no;
        c.misuse_yes += v.misuse_yes;
        c.misuse_no += v.misuse_no;
    }
}

}  // namespace

CorpusStats merge_stats(const CorpusStats& a, const CorpusStats& b) {
    CorpusStats s = a;
    s.total_projects += b.total_projects;
    s.crypto_enabled_count += b.crypto_enabled_count;
    s.misuse_count += b.misuse_count;
    add_counts(s.by_rule, b.by_rule);
    add_counts(s.rule_cooccurrence, b.rule_cooccurrence);
    add_cells(s.by_language, b.by_language);
    add_cells(s.by_category, b.by_category);
    add_cells(s.by_market, b.by_market);
    s.misuse_rate = s.crypto_enabled_count > 0 ? static_cast<double>(s.misuse_count) / s.crypto_enabled_count : 0.0;
    return s;
}

CorpusStats aggregate_corpus(const std::vector<ProjectReport>& reports) {
    std::set<std::string> seen;
    CorpusStats s;
    for (const auto& r : reports) {
        if (!seen.insert(r.project_id).second) {
            throw Error(ErrorKind::DuplicateProjectId, fmt::format("duplicate project id '{}'", r.project_id));
        }
        s = merge_stats(s, single(r));
    }
    return s;
}

ordered_json stats_to_json(const CorpusStats& s) {
    ordered_json j;
    j["total_projects"] = s.total_projects;
    j["crypto_enabled_count"] = s.crypto_enabled_count;
    j["misuse_count"] = s.misuse_count;
    j["misuse_rate"] = s.misuse_rate;
    ordered_json by_rule = ordered_json::object();
    for (const auto& [r, n] : s.by_rule) by_rule[std::string(to_string(r))] = n;
    j["by_rule"] = std::move(by_rule);
    ordered_json co = ordered_json::object();
    for (const auto& [p, n] : s.rule_cooccurrence) co[fmt::format("{}+{}", to_string(p.first), to_string(p.second))] = n;
    j["rule_cooccurrence"] = std::move(co);
    auto dim = [](const std::map<std::string, DimensionCell>& m) {
        ordered_json d = ordered_json::object();
        for (const auto& [label, c] : m) {
            d[label] = {{"crypto_yes", c.crypto_yes},
                        {"crypto_no", c.crypto_no},
                        {"misuse_yes", c.misuse_yes},
                        {"misuse_no", c.misuse_no}};
        }
        return d;
    };
    j["by_language"] = dim(s.by_language);
    j["by_category"] = dim(s.by_category);
    j["by_market"] = dim(s.by_market);
    return j;
}

namespace {

void render_dimension(std::string& out, const char* title, const std::map<std::string, DimensionCell>& m) {
    std::vector<std::pair<std::string, DimensionCell>> rows(m.begin(), m.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second.misuse_yes != b.second.misuse_yes) return a.second.misuse_yes > b.second.misuse_yes;
        return a.first < b.first;
    });
    out += fmt::format("\n{}\n", title);
    out += fmt::format("{:<24} {:>10} {:>10} {:>10} {:>10}\n", "label", "crypto_yes", "crypto_no", "misuse_yes",
                       "misuse_no");
    for (const auto& [label, c] : rows) {
        out += fmt::format("{:<24} {:>10} {:>10} {:>10} {:>10}\n", label, c.crypto_yes, c.crypto_no, c.misuse_yes,
                           c.misuse_no);
    }
}

template <typename K>
void render_counts(std::string& out, const char* title, const char* key_header, const std::map<K, int>& m,
                   std::string (*label)(const K&)) {
    std::vector<std::pair<std::string, int>> rows;
    for (const auto& [k, n] : m) rows.emplace_back(label(k), n);
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    out += fmt::format("\n{}\n", title);
    out += fmt::format("{:<24} {:>10}\n", key_header, "projects");
    for (const auto& [l, n] : rows) out += fmt::format("{:<24} {:>10}\n", l, n);
}

std::string rule_label(const RuleId& r) { return std::string(to_string(r)); }
std::string pair_label(const RulePair& p) { return fmt::format("{}+{}", to_string(p.first), to_string(p.second)); }

}  // namespace

std::string render_summary(const CorpusStats& s) {
    std::string out = fmt::format("projects {}  crypto-enabled {}  misuse {}  misuse-rate {:.3f}\n", s.total_projects,
                                  s.crypto_enabled_count, s.misuse_count, s.misuse_rate);
    render_counts(out, "By rule", "rule", s.by_rule, &rule_label);
    render_counts(out, "Rule co-occurrence", "rules", s.rule_cooccurrence, &pair_label);
    render_dimension(out, "By language", s.by_language);
    render_dimension(out, "By category", s.by_category);
    render_dimension(out, "By market", s.by_market);
    return out;
}

}  // namespace cryptaudit

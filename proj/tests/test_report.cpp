#include "fixtures.hpp"

#include "cryptaudit/error.hpp"
#include "cryptaudit/report.hpp"

#include <doctest.h>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <random>

using namespace cryptaudit;

namespace {

Finding finding(RuleId rule, const std::string& file, int line, Severity s = Severity::Misuse) {
    Finding f;
    f.rule_id = rule;
    f.severity = s;
    f.file = file;
    f.line = line;
    f.message = fmt::format("{} at {}", to_string(rule), line);
    return f;
}

ProjectReport report(const std::string& id, bool crypto, std::vector<Finding> findings,
                     std::optional<ProjectMetadata> meta = std::nullopt, const std::string& language = "Python") {
    ProjectReport r;
    r.project_id = id;
    r.metadata = std::move(meta);
    r.language = language;
    r.findings = std::move(findings);
    r.crypto_enabled = crypto || !r.findings.empty();
    r.misuse = any_misuse(r.findings);
    return r;
}

// Five hand-labeled projects:
//   p1 misuse {R1, R3}      (R3 twice, an informational R7)
//   p2 misuse {R6, R8}
//   p3 misuse {R1, R3, R6}
//   p4 informational R3 only
//   p5 crypto, no findings
std::vector<ProjectReport> five() {
    return {
        report("p1", true,
               {finding(RuleId::R1, "a.py", 1), finding(RuleId::R3, "a.py", 2), finding(RuleId::R3, "a.py", 9),
                finding(RuleId::R7, "a.py", 4, Severity::Informational)},
               ProjectMetadata{"Smithery", "Developer Tools", "Python"}),
        report("p2", true, {finding(RuleId::R6, "d.ts", 5), finding(RuleId::R8, "d.ts", 5)},
               ProjectMetadata{"Mcpmarket", "Security", "TypeScript"}, "TypeScript"),
        report("p3", true,
               {finding(RuleId::R1, "x.js", 3), finding(RuleId::R3, "x.js", 7), finding(RuleId::R6, "x.js", 8)},
               ProjectMetadata{"Smithery", "Data Science & ML", ""}, "JavaScript"),
        report("p4", true, {finding(RuleId::R3, "c.py", 5, Severity::Informational)},
               ProjectMetadata{"Smithery", "Developer Tools", "Python"}),
        report("p5", true, {}, std::nullopt),
    };
}

std::string json_of(const CorpusStats& s) { return stats_to_json(s).dump(); }

}  // namespace

TEST_CASE("project report: json shape") {
    ProjectReport r = report("empty", false, {});
    r.duration_ms = 12;
    r.ir_ms = 5;
    const auto j = nlohmann::json::parse(emit_project_report(r, ReportFormat::Json));
    CHECK(j["misuse"] == false);
    CHECK(j["findings"] == nlohmann::json::array());
    for (const char* key : {"project_id", "metadata", "language", "language_tie", "file_count", "ir_unit_count",
                            "crypto_enabled", "partial_files", "duration_ms", "ir_ms", "graph_ms", "detect_ms"}) {
        CHECK_MESSAGE(j.contains(key), key);
    }
    CHECK(j["duration_ms"] == 12);
    const auto masked = nlohmann::json::parse(emit_project_report(r, ReportFormat::Json, EmitOptions{true}));
    CHECK(masked["duration_ms"] == 0);
    CHECK(masked["ir_ms"] == 0);
    CHECK(emit_project_report(r, ReportFormat::Text).empty());
}

TEST_CASE("project report: text line for the auth header token") {
    const auto a = fixtures::analyze("auth_headers");
    const std::string text = emit_project_report(a.report, ReportFormat::Text);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    CHECK(text.find("R3 misuse") != std::string::npos);
    CHECK(text.find("client.ts:15 ") != std::string::npos);
}

TEST_CASE("project report: findings keep (file, line, rule) order") {
    ProjectReport r = report("three", true, {});
    r.findings = {finding(RuleId::R2, "a.py", 3), finding(RuleId::R6, "a.py", 3), finding(RuleId::R1, "b.py", 1)};
    const std::string golden = R"({"rule":"R2","severity":"misuse","confidence":"definite","file":"a.py","line":3,"message":"R2 at 3","chain":null}
{"rule":"R6","severity":"misuse","confidence":"definite","file":"a.py","line":3,"message":"R6 at 3","chain":null}
{"rule":"R1","severity":"misuse","confidence":"definite","file":"b.py","line":1,"message":"R1 at 1","chain":null}
)";
    std::string got;
    const auto j = report_to_json(r);
    for (const auto& f : j["findings"]) got += f.dump() + "\n";
    CHECK(got == golden);

    r.findings[1].confidence = Confidence::Potential;
    CHECK(emit_project_report(r, ReportFormat::Text) ==
          "R2 misuse a.py:3 R2 at 3\nR6 misuse a.py:3 R6 at 3 (potential)\nR1 misuse b.py:1 R1 at 1\n");
}

TEST_CASE("corpus: misuse rate of 142 out of 720") {
    std::vector<ProjectReport> reports;
    for (int i = 0; i < 9403; ++i) {
        const bool crypto = i < 720;
        reports.push_back(report(fmt::format("s{}", i), crypto,
                                 i < 142 ? std::vector<Finding>{finding(RuleId::R3, "m.py", 1)} : std::vector<Finding>{}));
    }
    const auto s = aggregate_corpus(reports);
    CHECK(s.total_projects == 9403);
    CHECK(s.crypto_enabled_count == 720);
    CHECK(s.misuse_count == 142);
    CHECK(s.misuse_rate == doctest::Approx(0.197).epsilon(0.0005 / 0.197));
    CHECK(fmt::format("{:.3f}", s.misuse_rate) == "0.197");
    CHECK(render_summary(s).find("misuse-rate 0.197") != std::string::npos);
}

TEST_CASE("corpus: zero reports") {
    const auto s = aggregate_corpus({});
    CHECK(s == CorpusStats{});
    CHECK(s.misuse_rate == 0.0);
    const auto text = render_summary(s);
    CHECK(text.find("projects 0  crypto-enabled 0  misuse 0  misuse-rate 0.000") == 0);
    CHECK(text.find("By language\nlabel") != std::string::npos);
}

TEST_CASE("corpus: hand tally of five projects") {
    const auto s = aggregate_corpus(five());
    CHECK(s.total_projects == 5);
    CHECK(s.crypto_enabled_count == 5);
    CHECK(s.misuse_count == 3);
    CHECK(s.by_rule == std::map<RuleId, int>{{RuleId::R1, 2}, {RuleId::R3, 2}, {RuleId::R6, 2}, {RuleId::R8, 1}});
    CHECK(s.rule_cooccurrence == std::map<RulePair, int>{{{RuleId::R1, RuleId::R3}, 2},
                                                          {{RuleId::R1, RuleId::R6}, 1},
                                                          {{RuleId::R3, RuleId::R6}, 1},
                                                          {{RuleId::R6, RuleId::R8}, 1}});
    // p3 declares no language and falls back to the detected one; p5 has no metadata.
    CHECK(s.by_language.at("Python") == DimensionCell{3, 0, 1, 2});
    CHECK(s.by_language.at("TypeScript") == DimensionCell{1, 0, 1, 0});
    CHECK(s.by_language.at("JavaScript") == DimensionCell{1, 0, 1, 0});
    CHECK(s.by_category.at("Developer Tools") == DimensionCell{2, 0, 1, 1});
    CHECK(s.by_category.at(kUnknownLabel) == DimensionCell{1, 0, 0, 1});
    CHECK(s.by_market.at("Smithery") == DimensionCell{3, 0, 2, 1});
    CHECK(s.by_market.at(kUnknownLabel) == DimensionCell{1, 0, 0, 1});

    const auto j = stats_to_json(s);
    CHECK(j["rule_cooccurrence"]["R1+R3"] == 2);
    CHECK(j["by_rule"]["R8"] == 1);
}

TEST_CASE("corpus: summary snapshot") {
    const std::string golden =
        "projects 5  crypto-enabled 5  misuse 3  misuse-rate 0.600\n"
        "\n"
        "By rule\n"
        "rule                       projects\n"
        "R1                                2\n"
        "R3                                2\n"
        "R6                                2\n"
        "R8                                1\n"
        "\n"
        "Rule co-occurrence\n"
        "rules                      projects\n"
        "R1+R3                             2\n"
        "R1+R6                             1\n"
        "R3+R6                             1\n"
        "R6+R8                             1\n"
        "\n"
        "By language\n"
        "label                    crypto_yes  crypto_no misuse_yes  misuse_no\n"
        "JavaScript                        1          0          1          0\n"
        "Python                            3          0          1          2\n"
        "TypeScript                        1          0          1          0\n"
        "\n"
        "By category\n"
        "label                    crypto_yes  crypto_no misuse_yes  misuse_no\n"
        "Data Science & ML                 1          0          1          0\n"
        "Developer Tools                   2          0          1          1\n"
        "Security                          1          0          1          0\n"
        "Unknown                           1          0          0          1\n"
        "\n"
        "By market\n"
        "label                    crypto_yes  crypto_no misuse_yes  misuse_no\n"
        "Smithery                          3          0          2          1\n"
        "Mcpmarket                         1          0          1          0\n"
        "Unknown                           1          0          0          1\n";
    CHECK(render_summary(aggregate_corpus(five())) == golden);

    const auto one = render_summary(aggregate_corpus({five()[1]}));
    CHECK(one.find("TypeScript                        1") != std::string::npos);
}

TEST_CASE("corpus: duplicate ids are rejected") {
    auto r = five();
    r.push_back(r.front());
    try {
        aggregate_corpus(r);
        FAIL("expected DuplicateProjectId");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DuplicateProjectId);
    }
}

TEST_CASE("property: permutation invariance, associative merge, count bounds") {
    std::mt19937 rng(99);
    const RuleId rules[] = {RuleId::R1, RuleId::R2, RuleId::R3, RuleId::R4,
                            RuleId::R5, RuleId::R6, RuleId::R7, RuleId::R8};
    const char* markets[] = {"A", "B", ""};
    const char* langs[] = {"Python", "JavaScript", ""};
    for (int round = 0; round < 50; ++round) {
        std::vector<ProjectReport> reports;
        const int n = std::uniform_int_distribution<int>(0, 30)(rng);
        for (int i = 0; i < n; ++i) {
            std::vector<Finding> fs;
            const int k = std::uniform_int_distribution<int>(0, 4)(rng);
            for (int f = 0; f < k; ++f) {
                fs.push_back(finding(rules[rng() % 8], "f.py", f + 1,
                                     rng() % 3 == 0 ? Severity::Informational : Severity::Misuse));
            }
            ProjectMetadata meta{markets[rng() % 3], markets[rng() % 3], langs[rng() % 3]};
            reports.push_back(report(fmt::format("p{}", i), rng() % 2 == 0, fs,
                                     rng() % 4 == 0 ? std::nullopt : std::optional(meta), langs[rng() % 2]));
        }
        const auto whole = aggregate_corpus(reports);

        auto shuffled = reports;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(aggregate_corpus(shuffled) == whole);
        CHECK(json_of(aggregate_corpus(shuffled)) == json_of(whole));

        const size_t a = n == 0 ? 0 : rng() % (n + 1);
        const size_t b = a + (n == 0 ? 0 : rng() % (n - a + 1));
        const std::vector<ProjectReport> x(reports.begin(), reports.begin() + a);
        const std::vector<ProjectReport> y(reports.begin() + a, reports.begin() + b);
        const std::vector<ProjectReport> z(reports.begin() + b, reports.end());
        const auto sx = aggregate_corpus(x), sy = aggregate_corpus(y), sz = aggregate_corpus(z);
        CHECK(merge_stats(merge_stats(sx, sy), sz) == whole);
        CHECK(merge_stats(sx, merge_stats(sy, sz)) == whole);

        int rule_total = 0;
        for (const auto& [r, c] : whole.by_rule) rule_total += c;
        CHECK(rule_total >= whole.misuse_count);
        for (const auto* dim : {&whole.by_language, &whole.by_category, &whole.by_market}) {
            int crypto = 0, misuse = 0, total = 0;
            for (const auto& [label, c] : *dim) {
                crypto += c.crypto_yes;
                misuse += c.misuse_yes;
                total += c.crypto_yes + c.crypto_no;
                CHECK(c.crypto_yes + c.crypto_no == c.misuse_yes + c.misuse_no);
            }
            CHECK(crypto == whole.crypto_enabled_count);
            CHECK(misuse == whole.misuse_count);
            CHECK(total == whole.total_projects);
        }

        const std::string text = json_of(whole);
        CHECK(nlohmann::ordered_json::parse(text).dump() == text);
        CHECK(render_summary(whole) == render_summary(aggregate_corpus(shuffled)));
    }
}

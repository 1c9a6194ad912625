#include "fixtures.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

#include "cryptaudit/cli.hpp"
#include "cryptaudit/taint.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <functional>
#include <random>
#include <sstream>

using namespace cryptaudit;

namespace {

// Pinned limits.
constexpr double kFixtureBudgetSeconds = 5.0;
constexpr double kOracleBudgetSeconds = 30.0;
constexpr int kSyntheticProjects = 200;
constexpr int kMaxSyntheticUnits = 20;
constexpr unsigned kSyntheticSeed = 20240917;
constexpr double kReferenceMisuseRate = 0.197;
constexpr double kRateTolerance = 0.0005;
constexpr double kTimingShare = 0.80;
constexpr int kTimingProjects = 10;
constexpr int kTimingFilesPerProject = 5;
constexpr int kTimingFunctionsPerFile = 60;

struct Outcome {
    enum Status { Pass, Fail, Warn } status;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::vector<std::vector<IrUnit>> synthetic_set() {
    std::mt19937 rng(kSyntheticSeed);
    std::vector<std::vector<IrUnit>> out;
    for (int i = 0; i < kSyntheticProjects; ++i) out.push_back(synthetic::random_units(rng, kMaxSyntheticUnits));
    return out;
}

Outcome fixture_precision() {
    const auto start = Clock::now();
    int mismatched = 0;
    std::string which;
    for (const auto& [name, expected] : fixtures::labeled()) {
        auto want = expected;
        std::sort(want.begin(), want.end());
        if (fixtures::observed(fixtures::analyze(name).report.findings) != want) {
            ++mismatched;
            which += " " + name;
        }
    }
    const double secs = seconds_since(start);
    const bool ok = mismatched == 0 && secs < kFixtureBudgetSeconds;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt::format("{} fixtures, {} mismatched{}, {:.2f}s (limit {}s)", fixtures::labeled().size(), mismatched,
                        which, secs, kFixtureBudgetSeconds)};
}

Outcome graph_oracle() {
    const auto start = Clock::now();
    const auto& catalog = fixtures::default_catalog();
    int equal = 0, total = 0;
    size_t edges = 0;
    for (const auto& units : synthetic_set()) {
        for (auto scope : {MustScope::Project, MustScope::File}) {
            const auto g = build_graph(units, catalog, scope);
            const std::set<DepEdge> got(g.edges().begin(), g.edges().end());
            edges += got.size();
            ++total;
            if (got == oracle::brute_force_edges(units, catalog, scope)) ++equal;
        }
    }
    const double secs = seconds_since(start);
    const bool ok = equal == total && secs < kOracleBudgetSeconds;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt::format("{}/{} graphs equal ({} edges), {:.2f}s (limit {}s)", equal, total, edges, secs,
                        kOracleBudgetSeconds)};
}

Outcome taint_oracle() {
    const auto& catalog = fixtures::default_catalog();
    const std::vector<Binding> no_bindings;
    std::mt19937 rng(kSyntheticSeed + 1);
    int equal = 0, total = 0;
    size_t pairs = 0;
    for (const auto& units : synthetic_set()) {
        const auto g = build_graph(units, catalog);
        const AnalysisInput in{g, catalog, no_bindings, {}};
        std::vector<std::pair<std::set<std::string>, std::set<std::string>>> cases;
        cases.emplace_back(identify_sources(in), identify_sinks(g, catalog));
        std::set<std::string> sources, sinks;
        for (const auto& u : units) {
            if (rng() % 3 == 0) sources.insert(u.unit_id);
            if (rng() % 3 == 0) sinks.insert(u.unit_id);
        }
        cases.emplace_back(sources, sinks);
        for (const auto& [src, snk] : cases) {
            std::set<oracle::Pair> got;
            for (const auto& c : propagate(g, src, snk)) got.insert({c.source_unit, c.sink_unit});
            pairs += got.size();
            ++total;
            if (got == oracle::reachable_pairs(g.nodes(), g.edges(), src, snk)) ++equal;
        }
    }
    return {equal == total ? Outcome::Pass : Outcome::Fail,
            fmt::format("{}/{} source/sink sets equal ({} reachable pairs)", equal, total, pairs)};
}

Outcome must_may() {
    const auto a = fixtures::analyze("key_derivation");
    int must = 0, must_salt = 0, may_key = 0;
    for (const auto& e : a.graph.edges()) {
        if (e.kind == EdgeKind::Must) {
            ++must;
            if (e.witness == "salt") ++must_salt;
        } else if (e.witness == "key") {
            ++may_key;
        }
    }
    std::set<std::string> kdf_side;
    for (const auto& u : a.graph.nodes()) {
        if (u.scope.find("secure_derive_key") != std::string::npos) kdf_side.insert(u.unit_id);
    }
    int salt_findings = 0, r4_potential = 0;
    for (const auto& f : a.report.findings) {
        const bool on_salt_path = std::any_of(a.graph.nodes().begin(), a.graph.nodes().end(), [&](const IrUnit& u) {
            return kdf_side.count(u.unit_id) != 0 && u.file == f.file && u.line == f.line;
        });
        if (on_salt_path) ++salt_findings;
        if (f.rule_id == RuleId::R4 && f.confidence == Confidence::Potential) ++r4_potential;
    }
    const bool ok = must == 1 && must_salt == 1 && may_key >= 1 && salt_findings == 0 && r4_potential >= 1;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt::format("must={} (salt {}), may[key]={}, salt-path findings={}, R4 potential={}", must, must_salt,
                        may_key, salt_findings, r4_potential)};
}

Outcome aggregation() {
    std::vector<ProjectReport> reports(720);
    for (size_t i = 0; i < reports.size(); ++i) {
        reports[i].project_id = fmt::format("p{}", i);
        reports[i].crypto_enabled = true;
        reports[i].misuse = i < 142;
    }
    const double rate = aggregate_corpus(reports).misuse_rate;
    const bool ok = std::abs(rate - kReferenceMisuseRate) <= kRateTolerance;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt::format("misuse_rate={:.5f} (expected {} +/- {})", rate, kReferenceMisuseRate, kRateTolerance)};
}

std::string run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    run_cli(args, out, err);
    return out.str();
}

Outcome determinism() {
    fixtures::TempDir dir;
    const auto corpus = dir.path() / "corpus";
    fs::create_directories(corpus);
    for (const auto& e : fs::directory_iterator(fixtures::root())) {
        fs::copy(e.path(), corpus / e.path().filename(), fs::copy_options::recursive);
    }
    auto scan = [&](const char* jobs) {
        return run({"scan", corpus.string(), "--corpus", "--format", "json", "--no-timing", "--jobs", jobs});
    };
    const std::string first = scan("1"), second = scan("1"), parallel = scan("8");
    const bool ok = !first.empty() && first == second && first == parallel;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt::format("{} bytes; repeat {}, jobs 1 vs 8 {}", first.size(), first == second ? "identical" : "differs",
                        first == parallel ? "identical" : "differs")};
}

// A tool-server style module: mostly declarations, strings and arithmetic,
// with a sprinkling of crypto calls.
std::string synthetic_module(std::mt19937& rng, int functions) {
    std::string s = "import hashlib\nimport os\nimport requests\nfrom Crypto.Cipher import AES\n\n";
    for (int f = 0; f < functions; ++f) {
        s += fmt::format("def handler_{}(request, payload, options=None):\n", f);
        s += "    \"\"\"Handle one tool request.\n\n    Returns a dict with the tool output and metadata.\n    \"\"\"\n";
        for (int l = 0; l < 12; ++l) {
            switch (rng() % 6) {
                case 0: s += fmt::format("    total_{} = (payload.size * {} + {}) // 3 - len(options or [])\n", l, rng() % 97, rng() % 1000); break;
                case 1: s += fmt::format("    label_{} = 'section-{}-' + str(request.id) + \"/suffix\"\n", l, rng() % 50); break;
                case 2: s += fmt::format("    items_{} = [x * {} for x in range({}) if x % 2 == 0]\n", l, rng() % 9 + 1, rng() % 40); break;
                case 3: s += fmt::format("    config_{} = {{'name': 'n{}', 'depth': {}, 'enabled': True}}\n", l, rng() % 100, rng() % 7); break;
                case 4: s += fmt::format("    digest_{} = hashlib.sha256(payload.body).hexdigest()\n", l); break;
                default: s += fmt::format("    # step {} keeps the previous totals\n", l); break;
            }
        }
        // Most handlers use local names; some reuse the common ones.
        const std::string key = rng() % 4 == 0 ? "key" : fmt::format("key_{}", f);
        const std::string sealed = rng() % 4 == 0 ? "sealed" : fmt::format("sealed_{}", f);
        s += "    if options and options.get('encrypt'):\n";
        s += fmt::format("        {} = os.urandom(32)\n", key);
        s += fmt::format("        cipher = AES.new({}, AES.MODE_GCM)\n", key);
        s += fmt::format("        {} = cipher.encrypt_and_digest(payload.body)\n", sealed);
        s += fmt::format("        requests.post('https://api.example.com/v{}/upload', data={})\n", rng() % 3, sealed);
        s += "    return {'ok': True}\n\n";
    }
    return s;
}

Outcome stage_timing() {
    fixtures::TempDir dir;
    std::mt19937 rng(kSyntheticSeed + 2);
    for (int p = 0; p < kTimingProjects; ++p) {
        for (int f = 0; f < kTimingFilesPerProject; ++f) {
            dir.write(fmt::format("corpus/proj{:02}/tools_{}.py", p, f), synthetic_module(rng, kTimingFunctionsPerFile));
        }
    }
    const auto doc = nlohmann::json::parse(run({"scan", (dir.path() / "corpus").string(), "--corpus", "--format",
                                                "json", "--jobs", "1", "--fail-on", "never"}));
    int dominant = 0, total = 0;
    std::string samples;
    for (const auto& p : doc["projects"]) {
        ++total;
        const long ir = p["ir_ms"], graph = p["graph_ms"], detect = p["detect_ms"];
        if (ir > graph && ir > detect) ++dominant;
        if (total <= 3) samples += fmt::format(" {}:{}/{}/{}", p["project_id"].get<std::string>(), ir, graph, detect);
    }
    const double share = total == 0 ? 0.0 : static_cast<double>(dominant) / total;
    return {share >= kTimingShare ? Outcome::Pass : Outcome::Warn,
            fmt::format("IR dominant in {}/{} projects of {} files (need {:.0f}%); ir/graph/detect ms{}", dominant,
                        total, kTimingProjects * kTimingFilesPerProject, kTimingShare * 100, samples)};
}

Outcome wrapper_false_negative() {
    const auto a = fixtures::analyze("md5_wrapper");
    const bool found = std::any_of(a.report.findings.begin(), a.report.findings.end(),
                                   [](const Finding& f) { return f.rule_id == RuleId::R3; });
    return {found ? Outcome::Pass : Outcome::Fail,
            fmt::format("{} R3 finding(s) on the md5 wrapper fixture (README: Known limitations)",
                        std::count_if(a.report.findings.begin(), a.report.findings.end(),
                                      [](const Finding& f) { return f.rule_id == RuleId::R3; }))};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"fixture-precision", fixture_precision},
        {"graph-oracle-equivalence", graph_oracle},
        {"taint-oracle-equivalence", taint_oracle},
        {"must-may-discrimination", must_may},
        {"aggregation-arithmetic", aggregation},
        {"determinism", determinism},
        {"stage-timing", stage_timing},
        {"wrapper-false-negative", wrapper_false_negative},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {Outcome::Fail, fmt::format("threw: {}", e.what())};
        }
        const char* tag = o.status == Outcome::Pass ? "PASS" : o.status == Outcome::Warn ? "WARN" : "FAIL";
        if (o.status == Outcome::Fail) ++failed;
        fmt::print("{} {}: {}\n", tag, name, o.detail);
    }
    return failed == 0 ? 0 : 1;
}

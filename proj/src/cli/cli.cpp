#include "cryptaudit/cli.hpp"
#include "cryptaudit/error.hpp"
#include "cryptaudit/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace cryptaudit {

namespace {

std::optional<FailOn> parse_fail_on(std::string_view text) {
    if (text == "never") return FailOn::Never;
    if (text == "misuse") return FailOn::Misuse;
    if (text == "any" || text == "any_finding") return FailOn::AnyFinding;
    return std::nullopt;
}

int default_jobs() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

void write_file(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
    f << text;
    if (!f) throw Error(ErrorKind::Io, fmt::format("write to '{}' failed", path.string()));
}

// In corpus mode the emit paths name directories with one file per project.
fs::path emit_path(const fs::path& base, bool corpus, const std::string& project_id, const char* suffix) {
    return corpus ? base / (project_id + suffix) : base;
}

}  // namespace

Thresholds load_thresholds(const fs::path& file, Thresholds base) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::Usage, fmt::format("cannot read config '{}'", file.string()));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Usage, fmt::format("config '{}': {}", file.string(), e.what()));
    }
    auto get = [&](const char* group, const char* key) -> const nlohmann::json* {
        const std::string dotted = fmt::format("{}.{}", group, key);
        if (j.contains(dotted)) return &j[dotted];
        if (j.contains(group) && j[group].is_object() && j[group].contains(key)) return &j[group][key];
        return nullptr;
    };
    try {
        if (auto* v = get("r4", "min_iterations")) base.r4_min_iterations = v->get<long>();
        if (auto* v = get("r1", "min_length")) base.r1_min_length = v->get<int>();
        if (auto* v = get("r1", "min_entropy")) base.r1_min_entropy = v->get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Usage, fmt::format("config '{}': {}", file.string(), e.what()));
    }
    return base;
}

ScanConfig parse_args(const std::vector<std::string>& args) {
    CLI::App app{"Static analyzer for cryptographic misuse in tool-server codebases", "cryptaudit"};
    app.require_subcommand(1);
    auto* scan = app.add_subcommand("scan", "Scan a project, or a corpus of projects");

    ScanConfig cfg;
    cfg.parallelism = default_jobs();
    std::string target, metadata, catalog, config, rules, format = "text", emit_ir, emit_graph, output;
    std::string must_scope = "project", fail_on = "misuse";
    scan->add_option("target", target, "Project directory (or corpus root with --corpus)")->required();
    scan->add_flag("--corpus", cfg.corpus_mode, "Treat each subdirectory of target as a project");
    scan->add_option("--metadata", metadata, "Corpus metadata JSON (market, category, language)");
    scan->add_option("--catalog", catalog, "Crypto API catalog JSON (default: built-in, or $SCANNER_CATALOG)");
    scan->add_option("--config", config, "Threshold config JSON (r4.min_iterations, r1.min_length, r1.min_entropy)");
    scan->add_option("--rules", rules, "Comma-separated rule ids, e.g. R1,R3,R7");
    scan->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "text"}));
    scan->add_option("--emit-ir", emit_ir, "Write the IR JSON here (a directory in corpus mode)");
    scan->add_option("--emit-graph", emit_graph, "Write the dependency graph JSON here (a directory in corpus mode)");
    scan->add_option("--output", output, "Write the report here instead of standard output");
    scan->add_option("--must-scope", must_scope, "Def-use resolution scope")->check(CLI::IsMember({"file", "project"}));
    scan->add_option("--jobs", cfg.parallelism, "Projects analyzed in parallel")->check(CLI::PositiveNumber);
    scan->add_option("--fail-on", fail_on, "Exit 1 when this triggers")
        ->check(CLI::IsMember({"never", "misuse", "any"}));
    scan->add_flag("--no-timing", cfg.mask_timing, "Zero the timing fields in reports");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw Error(ErrorKind::Usage, app.help());
    } catch (const CLI::ParseError& e) {
        const std::string help = (scan->parsed() || !args.empty()) ? scan->help() : app.help();
        throw Error(ErrorKind::Usage, fmt::format("{}\n\n{}", e.what(), help));
    }

    cfg.target = target;
    if (!metadata.empty()) cfg.metadata_file = metadata;
    if (!catalog.empty()) {
        cfg.catalog_file = catalog;
    } else if (const char* env = std::getenv("SCANNER_CATALOG"); env != nullptr && *env != '\0') {
        cfg.catalog_file = env;
    }
    if (!rules.empty()) cfg.enabled_rules = parse_rule_list(rules);
    cfg.output_format = *parse_report_format(format);
    if (!emit_ir.empty()) cfg.emit_ir = emit_ir;
    if (!emit_graph.empty()) cfg.emit_graph = emit_graph;
    if (!output.empty()) cfg.output_file = output;
    cfg.must_scope = *parse_must_scope(must_scope);
    cfg.fail_on = *parse_fail_on(fail_on);
    if (!config.empty()) {
        cfg.config_file = config;
        cfg.thresholds = load_thresholds(config);
    }
    return cfg;
}

int exit_code_for(const std::vector<ProjectReport>& reports, FailOn fail_on) {
    for (const auto& r : reports) {
        if (fail_on == FailOn::Misuse && r.misuse) return 1;
        if (fail_on == FailOn::AnyFinding && !r.findings.empty()) return 1;
    }
    return 0;
}

int run_scan(const ScanConfig& config, std::ostream& out, std::ostream& err) {
    CryptoApiCatalog catalog;
    std::vector<ProjectDescriptor> projects;
    try {
        catalog = load_catalog(config.catalog_file);
        projects = discover_projects(config.target, config.corpus_mode, config.metadata_file);
    } catch (const Error& e) {
        err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return 2;
    }

    AnalysisOptions options;
    options.rules = config.enabled_rules;
    options.must_scope = config.must_scope;
    options.thresholds = config.thresholds;

    std::vector<ProjectReport> reports(projects.size());
    std::vector<std::vector<std::string>> warnings(projects.size());
    std::vector<std::string> failures(projects.size());
    std::atomic<size_t> next{0};

    auto worker = [&] {
        for (size_t i = next++; i < projects.size(); i = next++) {
            const auto& p = projects[i];
            try {
                ProjectAnalysis a = analyze_project(p, catalog, options);
                if (config.emit_ir) {
                    write_file(emit_path(*config.emit_ir, config.corpus_mode, p.project_id, ".ir.json"),
                               serialize_ir(a.graph.nodes()));
                }
                if (config.emit_graph) {
                    write_file(emit_path(*config.emit_graph, config.corpus_mode, p.project_id, ".graph.json"),
                               graph_to_json(a.graph));
                }
                reports[i] = std::move(a.report);
                warnings[i] = std::move(a.warnings);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(config.parallelism, static_cast<int>(projects.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    bool failed = false;
    for (size_t i = 0; i < projects.size(); ++i) {
        for (const auto& w : warnings[i]) err << "warning: " << projects[i].project_id << ": " << w << '\n';
        if (!failures[i].empty()) {
            err << "error: " << projects[i].project_id << ": " << failures[i] << '\n';
            failed = true;
            continue;
        }
        const auto& r = reports[i];
        err << fmt::format("timing {}: ir_ms={} graph_ms={} detect_ms={} total_ms={}\n", r.project_id, r.ir_ms,
                           r.graph_ms, r.detect_ms, r.duration_ms);
    }
    if (failed) return 2;

    const EmitOptions emit{config.mask_timing};
    std::string doc;
    if (!config.corpus_mode) {
        doc = emit_project_report(reports.front(), config.output_format, emit);
    } else {
        CorpusStats stats;
        try {
            stats = aggregate_corpus(reports);
        } catch (const Error& e) {
            err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
            return 2;
        }
        if (config.output_format == ReportFormat::Json) {
            nlohmann::ordered_json j;
            j["projects"] = nlohmann::ordered_json::array();
            for (const auto& r : reports) j["projects"].push_back(report_to_json(r, emit));
            j["stats"] = stats_to_json(stats);
            doc = j.dump(2) + "\n";
        } else {
            for (const auto& r : reports) {
                doc += fmt::format("== {} ({} findings)\n", r.project_id, r.findings.size());
                doc += emit_project_report(r, ReportFormat::Text, emit);
            }
            doc += "\n" + render_summary(stats);
        }
    }

    if (config.output_file) {
        try {
            write_file(*config.output_file, doc);
        } catch (const Error& e) {
            err << "error: " << e.what() << '\n';
            return 2;
        }
    } else {
        out << doc;
    }
    return exit_code_for(reports, config.fail_on);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    ScanConfig config;
    try {
        config = parse_args(args);
    } catch (const Error& e) {
        const bool help = std::find_if(args.begin(), args.end(), [](const std::string& a) {
                              return a == "-h" || a == "--help";
                          }) != args.end();
        (help ? out : err) << e.what() << '\n';
        return help ? 0 : 2;
    }
    return run_scan(config, out, err);
}

}  // namespace cryptaudit

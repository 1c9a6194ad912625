#include "cryptaudit/pipeline.hpp"
#include "cryptaudit/error.hpp"
#include "cryptaudit/taint.hpp"

#include <fmt/format.h>

#include <chrono>

namespace cryptaudit {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ms_since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

}  // namespace

bool has_crypto_role(const std::vector<IrUnit>& units, const CryptoApiCatalog& catalog) {
    for (const auto& u : units) {
        const auto* spec = catalog.find(u.call_name, unit_language(u));
        if (spec != nullptr && spec->role != CryptoRole::None) return true;
    }
    return false;
}

ProjectAnalysis analyze_sources(const std::string& project_id, const std::vector<SourceFile>& files,
                                const CryptoApiCatalog& catalog, const AnalysisOptions& options) {
    const auto started = Clock::now();
    ProjectAnalysis out;
    ProjectReport& r = out.report;
    r.project_id = project_id;
    r.file_count = static_cast<int>(files.size());
    if (!files.empty()) {
        const LanguageLabel label = majority_language(files);
        r.language = std::string(to_string(label.language));
        r.language_tie = label.tie;
    }

    std::vector<IrUnit> units;
    for (const auto& f : files) {
        try {
            FileIr ir = lower_file(f);
            if (ir.partial) r.partial_files.push_back(f.relative_path);
            units.insert(units.end(), std::make_move_iterator(ir.units.begin()),
                         std::make_move_iterator(ir.units.end()));
            out.bindings.insert(out.bindings.end(), std::make_move_iterator(ir.bindings.begin()),
                                std::make_move_iterator(ir.bindings.end()));
        } catch (const Error& e) {
            r.partial_files.push_back(f.relative_path);
            out.warnings.push_back(fmt::format("{}: {}", f.relative_path, e.what()));
        }
    }
    r.ir_unit_count = static_cast<int>(units.size());
    r.ir_ms = ms_since(started);

    const auto graph_started = Clock::now();
    out.graph = build_graph(std::move(units), catalog, options.must_scope);
    r.graph_ms = ms_since(graph_started);

    const auto detect_started = Clock::now();
    const AnalysisInput input{out.graph, catalog, out.bindings, options.thresholds};
    RuleContext ctx{input, project_id, {}};
    ctx.chains = propagate(out.graph, identify_sources(input), identify_sinks(out.graph, catalog));
    r.findings = evaluate_rules(ctx, options.rules);
    r.detect_ms = ms_since(detect_started);

    r.misuse = any_misuse(r.findings);
    r.crypto_enabled = !r.findings.empty() || has_crypto_role(out.graph.nodes(), catalog);
    r.duration_ms = ms_since(started);
    return out;
}

ProjectAnalysis analyze_project(const ProjectDescriptor& project, const CryptoApiCatalog& catalog,
                                const AnalysisOptions& options) {
    const auto started = Clock::now();
    Enumeration files = enumerate_source_files(project);
    const std::int64_t walk_ms = ms_since(started);
    ProjectAnalysis out = analyze_sources(project.project_id, files.files, catalog, options);
    out.report.metadata = project.metadata;
    // Reading the tree is part of IR generation.
    out.report.ir_ms += walk_ms;
    out.report.duration_ms += walk_ms;
    out.warnings.insert(out.warnings.begin(), files.warnings.begin(), files.warnings.end());
    return out;
}

}  // namespace cryptaudit

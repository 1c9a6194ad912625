#pragma once

#include "cryptaudit/catalog.hpp"
#include "cryptaudit/dependency.hpp"
#include "cryptaudit/heuristics.hpp"
#include "cryptaudit/ingest.hpp"
#include "cryptaudit/ir.hpp"
#include "cryptaudit/report.hpp"
#include "cryptaudit/rules.hpp"

#include <set>
#include <string>
#include <vector>

namespace cryptaudit {

struct AnalysisOptions {
    std::set<RuleId> rules = all_rules();
    MustScope must_scope = MustScope::Project;
    Thresholds thresholds;
};

struct ProjectAnalysis {
    ProjectReport report;
    std::vector<Binding> bindings;
    DependencyGraph graph;  // nodes are the project's IR in file order
    std::vector<std::string> warnings;
};

/// IR -> graph -> taint -> rules over already-loaded sources. Files that fail
/// to lower are listed as partial and contribute no units.
ProjectAnalysis analyze_sources(const std::string& project_id, const std::vector<SourceFile>& files,
                                const CryptoApiCatalog& catalog, const AnalysisOptions& options);

ProjectAnalysis analyze_project(const ProjectDescriptor& project, const CryptoApiCatalog& catalog,
                                const AnalysisOptions& options);

/// Any unit matching a spec with a crypto role.
bool has_crypto_role(const std::vector<IrUnit>& units, const CryptoApiCatalog& catalog);

}  // namespace cryptaudit

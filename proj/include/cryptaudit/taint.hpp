#pragma once

#include "cryptaudit/catalog.hpp"
#include "cryptaudit/dependency.hpp"
#include "cryptaudit/heuristics.hpp"
#include "cryptaudit/ir.hpp"

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cryptaudit {

enum class OriginKind { Literal, ExternalInput, DynamicRandom, Environment, Unresolved };
enum class Sensitivity { Credential, Generic };

std::string_view to_string(OriginKind kind);
std::string_view to_string(Sensitivity s);

struct OriginValue {
    OriginKind kind = OriginKind::Unresolved;
    std::optional<std::string> literal_text;
    std::vector<std::string> resolution_path;

    bool operator==(const OriginValue&) const = default;
};

struct TaintChain {
    std::string source_unit;
    std::string sink_unit;
    std::vector<DepEdge> hops;
    Sensitivity sensitivity = Sensitivity::Generic;

    bool has_may_hop() const;
    bool operator==(const TaintChain&) const = default;
};

/// Everything the taint and rule passes read about one project. Bindings are
/// optional; without them origin resolution only follows call producers.
struct AnalysisInput {
    const DependencyGraph& graph;
    const CryptoApiCatalog& catalog;
    const std::vector<Binding>& bindings;
    Thresholds thresholds;
};

/// Units reading external input (catalog source markers), units passing a
/// secret-looking constant, and units consuming a parameter of their
/// enclosing function (tool inputs arrive as parameters).
std::set<std::string> identify_sources(const AnalysisInput& in);
std::set<std::string> identify_sources(const DependencyGraph& graph, const CryptoApiCatalog& catalog);

std::set<std::string> identify_sinks(const DependencyGraph& graph, const CryptoApiCatalog& catalog);

/// One chain per reachable (source, sink) pair along the shortest path; ties
/// prefer fewer may hops, then the lexicographically smallest unit sequence.
std::vector<TaintChain> propagate(const DependencyGraph& graph, const std::set<std::string>& sources,
                                  const std::set<std::string>& sinks);

/// Credential tagging needs the catalog-free unit data only.
bool unit_mentions_credential(const IrUnit& unit);

std::optional<Argument> find_argument(const IrUnit& unit, const ArgPosition& locator);
/// First locator of `role` in the spec that the unit actually passes. Keyword
/// locators also match keys inside dict-literal options arguments.
std::optional<Argument> locate_param(const IrUnit& unit, const CryptoApiSpec& spec, std::string_view role);
std::optional<Argument> locate(const IrUnit& unit, const std::vector<ArgPosition>& locators);

OriginValue resolve_to_origin(const AnalysisInput& in, const IrUnit& unit, const Argument& arg);
OriginValue resolve_to_origin(const DependencyGraph& graph, const CryptoApiCatalog& catalog, const IrUnit& unit,
                              const Argument& arg);

/// Visible binding of `name` for code at (file, scope, line, column).
const Binding* find_binding(const std::vector<Binding>& bindings, std::string_view name, const IrUnit& at);

inline constexpr int kMaxResolutionDepth = 16;

}  // namespace cryptaudit

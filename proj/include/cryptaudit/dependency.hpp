#pragma once

#include "cryptaudit/catalog.hpp"
#include "cryptaudit/ir.hpp"

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cryptaudit {

enum class EdgeKind { Must, May };
enum class MustScope { File, Project };

std::string_view to_string(EdgeKind kind);
std::string_view to_string(MustScope scope);
std::optional<MustScope> parse_must_scope(std::string_view text);

struct DepEdge {
    std::string from;
    std::string to;
    EdgeKind kind = EdgeKind::Must;
    std::string witness;

    auto operator<=>(const DepEdge&) const = default;
};

struct ResourceFingerprint {
    std::string kind;  // path, url, topic, identifier
    std::string canonical;

    bool operator==(const ResourceFingerprint&) const = default;
};

class DependencyGraph {
public:
    DependencyGraph() = default;
    DependencyGraph(std::vector<IrUnit> nodes, std::vector<DepEdge> edges);

    const std::vector<IrUnit>& nodes() const { return nodes_; }
    const std::vector<DepEdge>& edges() const { return edges_; }

    /// Index into nodes(), or -1.
    int index_of(std::string_view unit_id) const;
    const IrUnit* unit(std::string_view unit_id) const;
    /// Edge indices leaving / entering a node, in edge order.
    const std::vector<size_t>& out_edges(std::string_view unit_id) const;
    const std::vector<size_t>& in_edges(std::string_view unit_id) const;
    /// Node indices of one lexical scope, in node order.
    const std::vector<size_t>& scope_nodes(std::string_view file, std::string_view scope) const;

private:
    std::vector<IrUnit> nodes_;
    std::vector<DepEdge> edges_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<size_t>> out_;
    std::vector<std::vector<size_t>> in_;
    std::unordered_map<std::string, std::vector<size_t>> by_scope_;
};

/// Def-Use edges. A use takes the nearest preceding definition of the same
/// name in its own file; with MustScope::Project every definition in another
/// file adds an edge as well.
std::vector<DepEdge> build_must_edges(const std::vector<IrUnit>& units, MustScope scope = MustScope::Project);

/// First constant argument that looks like a URL, a catalog identifier, or a
/// path, normalized.
std::optional<ResourceFingerprint> extract_fingerprint(const IrUnit& unit, const CryptoApiCatalog* catalog = nullptr);

/// Names a unit touches for may-pairing: its plain variable arguments and its
/// produced variable.
std::vector<std::string> shared_names(const IrUnit& unit);

std::vector<DepEdge> build_may_edges(const std::vector<IrUnit>& units, const CryptoApiCatalog& catalog);

DependencyGraph build_graph(std::vector<IrUnit> units, const CryptoApiCatalog& catalog,
                            MustScope scope = MustScope::Project);

std::string graph_to_json(const DependencyGraph& graph);

}  // namespace cryptaudit

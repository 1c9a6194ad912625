#include "oracles.hpp"

#include <deque>
#include <map>

namespace oracle {

namespace {

bool before(const IrUnit& a, const IrUnit& b) {
    return a.line < b.line || (a.line == b.line && a.column < b.column);
}

bool has_variable_arg(const IrUnit& u, const std::string& v) {
    for (const auto& a : u.arguments) {
        if (a.tag == ArgTag::Variable && a.value == v) return true;
    }
    return false;
}

std::set<std::string> names_of(const IrUnit& u) {
    std::set<std::string> out;
    for (const auto& a : u.arguments) {
        if (a.tag == ArgTag::Variable && a.value.rfind("expr:", 0) != 0) out.insert(a.value);
    }
    if (u.produced_as) out.insert(*u.produced_as);
    return out;
}

}  // namespace

std::set<DepEdge> brute_force_edges(const std::vector<IrUnit>& units, const CryptoApiCatalog& catalog,
                                    MustScope scope) {
    std::set<DepEdge> edges;

    // Step 1: for every use c and definition d of one of its variables.
    for (const auto& c : units) {
        for (const auto& d : units) {
            if (&c == &d || !d.produced_as) continue;
            const std::string& v = *d.produced_as;
            if (!has_variable_arg(c, v)) continue;
            if (d.file != c.file) {
                if (scope == MustScope::Project) edges.insert({d.unit_id, c.unit_id, EdgeKind::Must, v});
                continue;
            }
            if (!before(d, c)) continue;
            bool shadowed = false;
            for (const auto& other : units) {
                if (&other == &d || &other == &c || other.file != c.file || other.produced_as != v) continue;
                if (before(d, other) && before(other, c)) shadowed = true;
            }
            if (!shadowed) edges.insert({d.unit_id, c.unit_id, EdgeKind::Must, v});
        }
    }

    // Step 2: ordered pairs in a risky category pair sharing a resource.
    for (const auto& ci : units) {
        for (const auto& cj : units) {
            if (&ci == &cj) continue;
            const auto si = semantic_category(ci, catalog);
            const auto sj = semantic_category(cj, catalog);
            bool risky = false;
            for (const auto& [a, b] : catalog.risky_pairs) risky = risky || (a == si && b == sj);
            if (!risky) continue;
            const auto fi = extract_fingerprint(ci, &catalog);
            const auto fj = extract_fingerprint(cj, &catalog);
            if (fi && fj && *fi == *fj) {
                edges.insert({ci.unit_id, cj.unit_id, EdgeKind::May, fi->canonical});
                continue;
            }
            const auto ni = names_of(ci);
            const auto nj = names_of(cj);
            for (const auto& n : ni) {
                if (nj.count(n)) {
                    edges.insert({ci.unit_id, cj.unit_id, EdgeKind::May, n});
                    break;
                }
            }
        }
    }
    return edges;
}

std::set<Pair> reachable_pairs(const std::vector<IrUnit>& nodes, const std::vector<DepEdge>& edges,
                               const std::set<std::string>& sources, const std::set<std::string>& sinks) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& n : nodes) adj[n.unit_id];
    for (const auto& e : edges) adj[e.from].push_back(e.to);
    std::set<Pair> out;
    for (const auto& s : sources) {
        std::set<std::string> seen{s};
        std::deque<std::string> queue{s};
        while (!queue.empty()) {
            const std::string at = queue.front();
            queue.pop_front();
            if (sinks.count(at)) out.insert({s, at});
            for (const auto& next : adj[at]) {
                if (seen.insert(next).second) queue.push_back(next);
            }
        }
    }
    return out;
}

}  // namespace oracle

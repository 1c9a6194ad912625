#include "cryptaudit/dependency.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>

namespace cryptaudit {

std::string_view to_string(EdgeKind kind) { return kind == EdgeKind::Must ? "must" : "may"; }

std::string_view to_string(MustScope scope) { return scope == MustScope::File ? "file" : "project"; }

std::optional<MustScope> parse_must_scope(std::string_view text) {
    if (text == "file") return MustScope::File;
    if (text == "project") return MustScope::Project;
    return std::nullopt;
}

namespace {

std::string scope_key(std::string_view file, std::string_view scope) {
    std::string k(file);
    k += '\n';
    k += scope;
    return k;
}

}  // namespace

DependencyGraph::DependencyGraph(std::vector<IrUnit> nodes, std::vector<DepEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    for (size_t i = 0; i < nodes_.size(); ++i) {
        index_.emplace(nodes_[i].unit_id, static_cast<int>(i));
        by_scope_[scope_key(nodes_[i].file, nodes_[i].scope)].push_back(i);
    }
    out_.resize(nodes_.size());
    in_.resize(nodes_.size());
    for (size_t e = 0; e < edges_.size(); ++e) {
        const int f = index_of(edges_[e].from);
        const int t = index_of(edges_[e].to);
        if (f >= 0) out_[static_cast<size_t>(f)].push_back(e);
        if (t >= 0) in_[static_cast<size_t>(t)].push_back(e);
    }
}

const std::vector<size_t>& DependencyGraph::scope_nodes(std::string_view file, std::string_view scope) const {
    static const std::vector<size_t> kNone;
    auto it = by_scope_.find(scope_key(file, scope));
    return it == by_scope_.end() ? kNone : it->second;
}

int DependencyGraph::index_of(std::string_view unit_id) const {
    auto it = index_.find(std::string(unit_id));
    return it == index_.end() ? -1 : it->second;
}

const IrUnit* DependencyGraph::unit(std::string_view unit_id) const {
    const int i = index_of(unit_id);
    return i < 0 ? nullptr : &nodes_[static_cast<size_t>(i)];
}

const std::vector<size_t>& DependencyGraph::out_edges(std::string_view unit_id) const {
    static const std::vector<size_t> kNone;
    const int i = index_of(unit_id);
    return i < 0 ? kNone : out_[static_cast<size_t>(i)];
}

const std::vector<size_t>& DependencyGraph::in_edges(std::string_view unit_id) const {
    static const std::vector<size_t> kNone;
    const int i = index_of(unit_id);
    return i < 0 ? kNone : in_[static_cast<size_t>(i)];
}

namespace {

bool precedes(const IrUnit& a, const IrUnit& b) { return std::tie(a.line, a.column) < std::tie(b.line, b.column); }

std::vector<std::string> variable_values(const IrUnit& u) {
    std::vector<std::string> out;
    for (const auto& a : u.arguments) {
        if (a.tag == ArgTag::Variable) out.push_back(a.value);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

const std::regex& url_re() {
    static const std::regex re(R"(^[A-Za-z][A-Za-z0-9+.\-]*://\S+$)");
    return re;
}

const std::regex& dotted_file_re() {
    static const std::regex re(R"(^[\w\-.]*[\w\-]\.[A-Za-z][A-Za-z0-9]{0,7}$)");
    return re;
}

// Edges by unit index; converted to DepEdge once at the end so that sorting
// never compares unit id strings.
struct RawEdge {
    size_t from;
    size_t to;
    EdgeKind kind;
    std::string witness;
};

std::vector<DepEdge> finalize(const std::vector<IrUnit>& units, std::vector<RawEdge> raw) {
    std::vector<size_t> order(units.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return units[a].unit_id < units[b].unit_id; });
    std::vector<size_t> rank(units.size());
    for (size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;

    auto key = [&](const RawEdge& e) { return std::tie(rank[e.from], rank[e.to], e.kind, e.witness); };
    std::sort(raw.begin(), raw.end(), [&](const RawEdge& a, const RawEdge& b) { return key(a) < key(b); });
    raw.erase(std::unique(raw.begin(), raw.end(), [&](const RawEdge& a, const RawEdge& b) { return key(a) == key(b); }),
              raw.end());
    std::vector<DepEdge> out;
    out.reserve(raw.size());
    for (auto& e : raw) out.push_back({units[e.from].unit_id, units[e.to].unit_id, e.kind, std::move(e.witness)});
    return out;
}

bool has_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::vector<RawEdge> raw_must_edges(const std::vector<IrUnit>& units, MustScope scope) {
    std::map<std::string, std::vector<size_t>> defs;
    for (size_t i = 0; i < units.size(); ++i) {
        if (units[i].produced_as) defs[*units[i].produced_as].push_back(i);
    }
    std::vector<RawEdge> edges;
    for (size_t c = 0; c < units.size(); ++c) {
        const IrUnit& use = units[c];
        for (const auto& v : variable_values(use)) {
            auto it = defs.find(v);
            if (it == defs.end()) continue;
            std::optional<size_t> nearest;
            for (size_t d : it->second) {
                if (d == c) continue;
                const IrUnit& def = units[d];
                if (def.file == use.file) {
                    if (precedes(def, use) && (!nearest || precedes(units[*nearest], def))) nearest = d;
                } else if (scope == MustScope::Project) {
                    edges.push_back({d, c, EdgeKind::Must, v});
                }
            }
            if (nearest) edges.push_back({*nearest, c, EdgeKind::Must, v});
        }
    }
    return edges;
}

}  // namespace

std::optional<ResourceFingerprint> extract_fingerprint(const IrUnit& unit, const CryptoApiCatalog* catalog) {
    for (const auto& a : unit.arguments) {
        if (a.tag != ArgTag::Constant) continue;
        const std::string v = trim(a.value);
        if (v.empty()) continue;
        if (v.find("://") != std::string::npos && std::regex_match(v, url_re())) {
            return ResourceFingerprint{"url", lower(v)};
        }
        if (catalog != nullptr) {
            for (const auto& [re, kind] : catalog->identifier_regexes()) {
                if (std::regex_search(v, re)) return ResourceFingerprint{kind, v};
            }
        }
        if (has_space(v)) continue;
        if (v.find('/') != std::string::npos || v.find('\\') != std::string::npos ||
            (v.find('.') != std::string::npos && std::regex_match(v, dotted_file_re()))) {
            return ResourceFingerprint{"path", lower(v)};
        }
    }
    return std::nullopt;
}

std::vector<std::string> shared_names(const IrUnit& unit) {
    std::vector<std::string> out;
    for (const auto& a : unit.arguments) {
        if (a.tag == ArgTag::Variable && a.value.rfind(kExprPrefix, 0) != 0) out.push_back(a.value);
    }
    if (unit.produced_as) out.push_back(*unit.produced_as);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

std::vector<RawEdge> raw_may_edges(const std::vector<IrUnit>& units, const CryptoApiCatalog& catalog) {
    const size_t n = units.size();
    std::vector<SemanticCategory> sem(n);
    std::vector<std::optional<ResourceFingerprint>> fp(n);
    std::vector<std::vector<std::string>> names(n);
    for (size_t i = 0; i < n; ++i) {
        sem[i] = semantic_category(units[i], catalog);
        fp[i] = extract_fingerprint(units[i], &catalog);
        names[i] = shared_names(units[i]);
    }

    // Index consumers by category so only risky pairs are examined.
    std::map<SemanticCategory, std::vector<size_t>> by_cat;
    for (size_t i = 0; i < n; ++i) by_cat[sem[i]].push_back(i);

    std::vector<RawEdge> edges;
    for (const auto& [a, b] : catalog.risky_pairs) {
        auto ia = by_cat.find(a);
        auto ib = by_cat.find(b);
        if (ia == by_cat.end() || ib == by_cat.end()) continue;
        std::map<std::pair<std::string, std::string>, std::vector<size_t>> by_fp;
        std::map<std::string, std::vector<size_t>> by_name;
        for (size_t j : ib->second) {
            if (fp[j]) by_fp[{fp[j]->kind, fp[j]->canonical}].push_back(j);
            for (const auto& nm : names[j]) by_name[nm].push_back(j);
        }
        for (size_t i : ia->second) {
            std::map<size_t, std::string> witness;
            if (fp[i]) {
                auto it = by_fp.find({fp[i]->kind, fp[i]->canonical});
                if (it != by_fp.end()) {
                    for (size_t j : it->second) witness.emplace(j, fp[i]->canonical);
                }
            }
            // names[i] is sorted, so the first shared name is the smallest.
            for (const auto& nm : names[i]) {
                auto it = by_name.find(nm);
                if (it == by_name.end()) continue;
                for (size_t j : it->second) witness.emplace(j, nm);
            }
            for (const auto& [j, w] : witness) {
                if (j == i) continue;
                edges.push_back({i, j, EdgeKind::May, w});
            }
        }
    }
    return edges;
}

}  // namespace

std::vector<DepEdge> build_must_edges(const std::vector<IrUnit>& units, MustScope scope) {
    return finalize(units, raw_must_edges(units, scope));
}

std::vector<DepEdge> build_may_edges(const std::vector<IrUnit>& units, const CryptoApiCatalog& catalog) {
    return finalize(units, raw_may_edges(units, catalog));
}

DependencyGraph build_graph(std::vector<IrUnit> units, const CryptoApiCatalog& catalog, MustScope scope) {
    std::vector<RawEdge> raw = raw_must_edges(units, scope);
    auto may = raw_may_edges(units, catalog);
    raw.insert(raw.end(), std::make_move_iterator(may.begin()), std::make_move_iterator(may.end()));
    std::erase_if(raw, [](const RawEdge& e) { return e.from == e.to; });
    auto edges = finalize(units, std::move(raw));
    return DependencyGraph(std::move(units), std::move(edges));
}

std::string graph_to_json(const DependencyGraph& graph) {
    nlohmann::ordered_json doc;
    doc["nodes"] = nlohmann::ordered_json::array();
    for (const auto& u : graph.nodes()) doc["nodes"].push_back(u.unit_id);
    doc["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : graph.edges()) {
        nlohmann::ordered_json j;
        j["from"] = e.from;
        j["to"] = e.to;
        j["kind"] = to_string(e.kind);
        j["witness"] = e.witness;
        doc["edges"].push_back(std::move(j));
    }
    return doc.dump(2);
}

}  // namespace cryptaudit

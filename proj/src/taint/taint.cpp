#include "cryptaudit/taint.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>

namespace cryptaudit {

std::string_view to_string(OriginKind kind) {
    switch (kind) {
        case OriginKind::Literal: return "literal";
        case OriginKind::ExternalInput: return "external_input";
        case OriginKind::DynamicRandom: return "dynamic_random";
        case OriginKind::Environment: return "environment";
        case OriginKind::Unresolved: return "unresolved";
    }
    return "unresolved";
}

std::string_view to_string(Sensitivity s) { return s == Sensitivity::Credential ? "credential" : "generic"; }

bool TaintChain::has_may_hop() const {
    return std::any_of(hops.begin(), hops.end(), [](const DepEdge& e) { return e.kind == EdgeKind::May; });
}

namespace {

const std::vector<Binding> kNoBindings;

bool is_expr(std::string_view v) { return v.rfind(kExprPrefix, 0) == 0; }

bool is_receiver_name(std::string_view v) { return v == "self" || v == "cls" || v == "this"; }

bool scope_visible(std::string_view binding_scope, std::string_view at_scope) {
    if (binding_scope == at_scope || binding_scope == "<module>") return true;
    return at_scope.size() > binding_scope.size() && at_scope.substr(0, binding_scope.size()) == binding_scope &&
           at_scope.substr(binding_scope.size(), 2) == "::";
}

bool env_text(std::string_view v) {
    return v.find("process.env") != std::string_view::npos || v.find("os.environ") != std::string_view::npos ||
           v.find("getenv") != std::string_view::npos || v.find("import.meta.env") != std::string_view::npos;
}

bool encoding_name(std::string_view v) {
    static const char* kNames[] = {"utf-8", "utf8", "ascii", "latin-1", "latin1", "hex", "base64", "binary", "utf-16"};
    std::string lower(v);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return std::any_of(std::begin(kNames), std::end(kNames), [&](const char* n) { return lower == n; });
}

// Value-preserving conversions; their single argument is the origin.
bool conversion_call(std::string_view call_name) {
    static const char* kNames[] = {"int",    "str",    "float",   "bytes",      "bytearray", "bool",
                                   "Number", "String", "parseInt", "parseFloat", "BigInt",    "Buffer.from"};
    return std::any_of(std::begin(kNames), std::end(kNames), [&](const char* n) { return call_name == n; });
}

// Text of a string-literal receiver in a call name like "\"abc\".encode".
std::optional<std::string> literal_receiver(std::string_view call_name) {
    if (call_name.empty()) return std::nullopt;
    size_t i = 0;
    while (i < call_name.size() && (call_name[i] == 'b' || call_name[i] == 'r')) ++i;
    if (i >= call_name.size()) return std::nullopt;
    const char q = call_name[i];
    if (q != '"' && q != '\'' && q != '`') return std::nullopt;
    const auto end = call_name.find(q, i + 1);
    if (end == std::string_view::npos) return std::nullopt;
    return std::string(call_name.substr(i + 1, end - i - 1));
}

struct Site {
    std::string file;
    std::string scope;
    int line = 1;
    int column = 0;
    const IrUnit* unit = nullptr;
};

Site site_of(const IrUnit& u) { return {u.file, u.scope, u.line, u.column, &u}; }

const Binding* find_binding_at(const std::vector<Binding>& bindings, std::string_view name, const Site& at) {
    const Binding* best = nullptr;
    size_t best_depth = 0;
    for (const auto& b : bindings) {
        if (b.name != name || b.file != at.file || !scope_visible(b.scope, at.scope)) continue;
        const bool same_scope = b.scope == at.scope;
        if (same_scope && std::tie(b.line, b.column) > std::tie(at.line, at.column)) continue;
        // Innermost scope wins, then the latest binding in it.
        const size_t depth = b.scope.size();
        if (best == nullptr || depth > best_depth ||
            (depth == best_depth && std::tie(b.line, b.column) > std::tie(best->line, best->column))) {
            best = &b;
            best_depth = depth;
        }
    }
    return best;
}

class Resolver {
public:
    explicit Resolver(const AnalysisInput& in) : in_(in) {}

    OriginValue argument(const Site& at, const Argument& a, int depth) {
        switch (a.tag) {
            case ArgTag::Constant: return literal(a.value);
            case ArgTag::FunctionReturn: return nested_call(at, a.value, depth);
            case ArgTag::ListLiteral:
            case ArgTag::DictLiteral: return unresolved();
            case ArgTag::Variable: break;
        }
        if (env_text(a.value)) return make(OriginKind::Environment);
        if (is_expr(a.value)) return unresolved();
        return name(at, a.value, depth);
    }

    OriginValue producer(const IrUnit& d, int depth) {
        if (depth > kMaxResolutionDepth || !visited_.insert(d.unit_id).second) return unresolved();
        path_.push_back(d.unit_id);
        if (auto byname = classify_name(d.call_name, unit_language(d))) return *byname;
        const auto* spec = in_.catalog.find(d.call_name, unit_language(d));
        if (spec != nullptr && spec->role != CryptoRole::None) return unresolved();
        if (auto lit = literal_receiver(d.call_name)) return literal(*lit);
        if (d.arguments.empty()) return unresolved();
        if (conversion_call(d.call_name) && d.arguments.size() == 1 && d.arguments[0].tag == ArgTag::Variable) {
            return argument(site_of(d), d.arguments[0], depth + 1);
        }
        // A constant-only helper call resolves to its dominating constant.
        if (!std::all_of(d.arguments.begin(), d.arguments.end(),
                         [](const Argument& a) { return a.tag == ArgTag::Constant; })) {
            return unresolved();
        }
        if (d.arguments.size() == 1) return literal(d.arguments[0].value);
        const Argument* first = nullptr;
        for (const auto& a : d.arguments) {
            if (a.position == ArgPosition{0}) first = &a;
        }
        if (first == nullptr) return unresolved();
        for (const auto& a : d.arguments) {
            if (&a != first && !encoding_name(a.value)) return unresolved();
        }
        return literal(first->value);
    }

    std::vector<std::string> path() const { return path_; }

private:
    OriginValue make(OriginKind k) {
        OriginValue v;
        v.kind = k;
        v.resolution_path = path_;
        return v;
    }
    OriginValue unresolved() { return make(OriginKind::Unresolved); }
    OriginValue literal(const std::string& text) {
        OriginValue v = make(OriginKind::Literal);
        v.literal_text = text;
        return v;
    }

    // Classification by callee name alone: randomness and input readers.
    std::optional<OriginValue> classify_name(std::string_view call_name, Language lang) {
        // Method chains inherit the origin of their root call.
        const auto paren = call_name.find("()");
        const std::string_view root = paren == std::string_view::npos ? call_name : call_name.substr(0, paren);
        const auto* spec = in_.catalog.find(root, lang);
        if (spec != nullptr && spec->role == CryptoRole::Prng) return make(OriginKind::DynamicRandom);
        if (auto kind = in_.catalog.source_kind(root)) {
            return make(*kind == SourceKind::Environment ? OriginKind::Environment : OriginKind::ExternalInput);
        }
        return std::nullopt;
    }

    OriginValue nested_call(const Site& at, const std::string& call_name, int depth) {
        // The nested call's own unit follows the outer anchor in the same scope.
        const IrUnit* best = nullptr;
        for (size_t i : in_.graph.scope_nodes(at.file, at.scope)) {
            const IrUnit& u = in_.graph.nodes()[i];
            if (u.call_name != call_name) continue;
            if (std::tie(u.line, u.column) < std::tie(at.line, at.column)) continue;
            if (best == nullptr || std::tie(u.line, u.column) < std::tie(best->line, best->column)) best = &u;
        }
        if (best != nullptr) return producer(*best, depth + 1);
        if (auto byname = classify_name(call_name, detect_language(at.file, {}))) return *byname;
        if (auto lit = literal_receiver(call_name)) return literal(*lit);
        return unresolved();
    }

    OriginValue name(const Site& at, const std::string& v, int depth) {
        if (depth > kMaxResolutionDepth) return unresolved();
        if (at.unit != nullptr) {
            const IrUnit* chosen = nullptr;
            for (size_t e : in_.graph.in_edges(at.unit->unit_id)) {
                const auto& edge = in_.graph.edges()[e];
                if (edge.kind != EdgeKind::Must || edge.witness != v) continue;
                const IrUnit* d = in_.graph.unit(edge.from);
                if (d == nullptr) continue;
                if (chosen == nullptr || (d->file == at.file && chosen->file != at.file)) chosen = d;
            }
            if (chosen != nullptr) return producer(*chosen, depth + 1);
        }
        std::string key = v;
        if (v.rfind("this.", 0) == 0 || v.rfind("self.", 0) == 0) {
            key = v.substr(5);
            if (key.find('.') != std::string::npos) return unresolved();
        } else if (v.find('.') != std::string::npos) {
            return unresolved();
        }
        const Binding* b = find_binding_at(in_.bindings, key, at);
        if (b == nullptr) return unresolved();
        const std::string bkey = "binding:" + b->file + ":" + std::to_string(b->line) + ":" + std::to_string(b->column);
        if (!visited_.insert(bkey).second) return unresolved();
        if (b->kind == Binding::Kind::Parameter) {
            return is_receiver_name(b->name) ? unresolved() : make(OriginKind::ExternalInput);
        }
        if (!b->value) return unresolved();
        Site next{b->file, b->scope, b->line, b->column, nullptr};
        return argument(next, *b->value, depth + 1);
    }

    const AnalysisInput& in_;
    std::set<std::string> visited_;
    std::vector<std::string> path_;
};

}  // namespace

const Binding* find_binding(const std::vector<Binding>& bindings, std::string_view name, const IrUnit& at) {
    return find_binding_at(bindings, name, site_of(at));
}

std::optional<Argument> find_argument(const IrUnit& unit, const ArgPosition& locator) {
    for (const auto& a : unit.arguments) {
        if (a.position == locator) return a;
    }
    const std::string* key = std::get_if<std::string>(&locator);
    if (key == nullptr) return std::nullopt;
    for (const auto& a : unit.arguments) {
        if (a.tag != ArgTag::DictLiteral) continue;
        const auto obj = nlohmann::ordered_json::parse(a.value, nullptr, false);
        if (!obj.is_object()) continue;
        size_t i = 0;
        for (const auto& [k, v] : obj.items()) {
            if (k == *key && v.is_string()) {
                Argument out;
                out.position = *key;
                out.value = v.get<std::string>();
                out.tag = a.element_tags && i < a.element_tags->size() ? (*a.element_tags)[i] : ArgTag::Variable;
                return out;
            }
            ++i;
        }
    }
    return std::nullopt;
}

std::optional<Argument> locate(const IrUnit& unit, const std::vector<ArgPosition>& locators) {
    for (const auto& l : locators) {
        if (auto a = find_argument(unit, l)) return a;
    }
    return std::nullopt;
}

std::optional<Argument> locate_param(const IrUnit& unit, const CryptoApiSpec& spec, std::string_view role) {
    auto it = spec.params.find(std::string(role));
    if (it == spec.params.end()) return std::nullopt;
    return locate(unit, it->second);
}

OriginValue resolve_to_origin(const AnalysisInput& in, const IrUnit& unit, const Argument& arg) {
    Resolver r(in);
    return r.argument(site_of(unit), arg, 0);
}

OriginValue resolve_to_origin(const DependencyGraph& graph, const CryptoApiCatalog& catalog, const IrUnit& unit,
                              const Argument& arg) {
    return resolve_to_origin(AnalysisInput{graph, catalog, kNoBindings, {}}, unit, arg);
}

bool unit_mentions_credential(const IrUnit& unit) {
    if (mentions_credential(unit.call_name)) return true;
    if (unit.produced_as && is_credential_name(*unit.produced_as)) return true;
    for (const auto& a : unit.arguments) {
        if (const auto* kw = std::get_if<std::string>(&a.position); kw != nullptr && is_credential_name(*kw)) return true;
        if (a.tag != ArgTag::Constant && mentions_credential(a.value)) return true;
    }
    return false;
}

std::set<std::string> identify_sources(const AnalysisInput& in) {
    std::set<std::string> out;
    for (const auto& u : in.graph.nodes()) {
        if (in.catalog.source_kind(u.call_name)) {
            out.insert(u.unit_id);
            continue;
        }
        for (const auto& a : u.arguments) {
            if (a.tag == ArgTag::Constant) {
                if (looks_like_secret(a.value, in.thresholds, in.catalog.provider_prefixes)) {
                    out.insert(u.unit_id);
                    break;
                }
                continue;
            }
            if (a.tag != ArgTag::Variable || is_expr(a.value) || a.value.find('.') != std::string::npos) continue;
            const Binding* b = find_binding(in.bindings, a.value, u);
            if (b == nullptr) continue;
            if (b->kind == Binding::Kind::Parameter && !is_receiver_name(b->name)) {
                out.insert(u.unit_id);
                break;
            }
            if (b->kind == Binding::Kind::Assignment && b->value && b->value->tag == ArgTag::Constant &&
                looks_like_secret(b->value->value, in.thresholds, in.catalog.provider_prefixes)) {
                out.insert(u.unit_id);
                break;
            }
        }
    }
    return out;
}

std::set<std::string> identify_sources(const DependencyGraph& graph, const CryptoApiCatalog& catalog) {
    return identify_sources(AnalysisInput{graph, catalog, kNoBindings, {}});
}

std::set<std::string> identify_sinks(const DependencyGraph& graph, const CryptoApiCatalog& catalog) {
    std::set<std::string> out;
    for (const auto& u : graph.nodes()) {
        const auto* spec = catalog.find(u.call_name, unit_language(u));
        if ((spec != nullptr && is_crypto_sink_role(spec->role)) || catalog.is_sink_marker(u.call_name)) {
            out.insert(u.unit_id);
        }
    }
    return out;
}

std::vector<TaintChain> propagate(const DependencyGraph& graph, const std::set<std::string>& sources,
                                  const std::set<std::string>& sinks) {
    const auto& nodes = graph.nodes();
    const auto& edges = graph.edges();
    std::vector<TaintChain> out;

    struct Best {
        int may = 0;
        std::vector<std::string> seq;  // unit ids from the source
        std::vector<size_t> hops;
    };

    for (const auto& src : sources) {
        const int s = graph.index_of(src);
        if (s < 0) continue;
        std::map<int, Best> best;
        best[s] = Best{0, {src}, {}};
        std::vector<int> frontier{s};
        while (!frontier.empty()) {
            std::map<int, Best> next;
            for (int p : frontier) {
                const Best& bp = best.at(p);
                for (size_t e : graph.out_edges(nodes[static_cast<size_t>(p)].unit_id)) {
                    const int t = graph.index_of(edges[e].to);
                    if (t < 0 || best.count(t) > 0) continue;
                    Best cand{bp.may + (edges[e].kind == EdgeKind::May ? 1 : 0), bp.seq, bp.hops};
                    cand.seq.push_back(edges[e].to);
                    cand.hops.push_back(e);
                    auto it = next.find(t);
                    if (it == next.end()) {
                        next.emplace(t, std::move(cand));
                        continue;
                    }
                    // Edges sharing endpoints: the must edge sorts first, so only
                    // a strictly better candidate replaces.
                    if (std::tie(cand.may, cand.seq) < std::tie(it->second.may, it->second.seq)) {
                        it->second = std::move(cand);
                    }
                }
            }
            frontier.clear();
            for (auto& [t, b] : next) {
                frontier.push_back(t);
                best.emplace(t, std::move(b));
            }
        }
        const IrUnit& source_unit = nodes[static_cast<size_t>(s)];
        const bool source_cred = unit_mentions_credential(source_unit);
        for (const auto& [t, b] : best) {
            const std::string& tid = nodes[static_cast<size_t>(t)].unit_id;
            if (sinks.count(tid) == 0) continue;
            TaintChain c;
            c.source_unit = src;
            c.sink_unit = tid;
            bool cred = source_cred;
            for (size_t e : b.hops) {
                c.hops.push_back(edges[e]);
                if (is_credential_name(edges[e].witness)) cred = true;
            }
            c.sensitivity = cred ? Sensitivity::Credential : Sensitivity::Generic;
            out.push_back(std::move(c));
        }
    }
    std::sort(out.begin(), out.end(), [](const TaintChain& a, const TaintChain& b) {
        return std::tie(a.source_unit, a.sink_unit) < std::tie(b.source_unit, b.sink_unit);
    });
    return out;
}

}  // namespace cryptaudit

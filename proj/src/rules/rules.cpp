#include "cryptaudit/rules.hpp"
#include "cryptaudit/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <map>

namespace cryptaudit {

std::string_view to_string(RuleId id) {
    static constexpr std::string_view kNames[] = {"R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8"};
    return kNames[static_cast<int>(id) - 1];
}

std::string_view to_string(Severity s) { return s == Severity::Misuse ? "misuse" : "informational"; }

std::string_view to_string(Confidence c) { return c == Confidence::Definite ? "definite" : "potential"; }

std::optional<RuleId> parse_rule_id(std::string_view text) {
    for (auto r : all_rules()) {
        if (to_string(r) == text) return r;
    }
    if (text.size() == 2 && (text[0] == 'r') && text[1] >= '1' && text[1] <= '8') {
        return static_cast<RuleId>(text[1] - '0');
    }
    return std::nullopt;
}

std::set<RuleId> all_rules() {
    return {RuleId::R1, RuleId::R2, RuleId::R3, RuleId::R4, RuleId::R5, RuleId::R6, RuleId::R7, RuleId::R8};
}

std::set<RuleId> parse_rule_list(std::string_view text) {
    std::set<RuleId> out;
    size_t start = 0;
    while (start <= text.size()) {
        const size_t comma = std::min(text.find(',', start), text.size());
        std::string item(text.substr(start, comma - start));
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                   item.end());
        if (!item.empty()) {
            auto id = parse_rule_id(item);
            if (!id) throw Error(ErrorKind::Usage, fmt::format("unknown rule '{}'", item));
            out.insert(*id);
        }
        start = comma + 1;
    }
    if (out.empty()) throw Error(ErrorKind::Usage, "rule list is empty");
    return out;
}

bool any_misuse(const std::vector<Finding>& findings) {
    return std::any_of(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::Misuse; });
}

const std::vector<std::string>& deprecated_algorithms() {
    static const std::vector<std::string> kList = {"des", "3des-1key", "rc4", "rc2", "blowfish-64"};
    return kList;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string trimmed_lower(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return lower(s.substr(b, e - b));
}

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace

bool is_deprecated_algorithm(std::string_view algorithm) {
    const std::string a = trimmed_lower(algorithm);
    if (a.empty()) return false;
    if (a == "des" || (starts_with(a, "des-") && !starts_with(a, "des-ede"))) return true;
    if (a == "3des-1key") return true;
    if (a == "rc4" || starts_with(a, "rc4-") || a == "arc4") return true;
    if (a == "rc2" || starts_with(a, "rc2-")) return true;
    if (a == "blowfish-64" || a == "blowfish" || a == "bf" || starts_with(a, "bf-")) return true;
    return false;
}

std::optional<std::string> mode_in_text(std::string_view text) {
    static const std::vector<std::string> kModes = {"ecb", "cbc", "ctr", "cfb", "cfb8", "ofb", "gcm",
                                                    "ccm", "ocb", "ocb3", "eax", "siv", "poly1305", "xts"};
    for (const auto& w : words(text)) {
        if (std::find(kModes.begin(), kModes.end(), w) != kModes.end()) return w;
    }
    return std::nullopt;
}

bool is_authenticated_mode(std::string_view mode) {
    return mode == "gcm" || mode == "ccm" || mode == "ocb" || mode == "ocb3" || mode == "eax" || mode == "siv" ||
           mode == "poly1305";
}

namespace {

struct UnitInfo {
    const IrUnit* unit = nullptr;
    const CryptoApiSpec* spec = nullptr;
};

std::vector<UnitInfo> unit_infos(const RuleContext& ctx) {
    std::vector<UnitInfo> out;
    for (const auto& u : ctx.input.graph.nodes()) {
        out.push_back({&u, ctx.input.catalog.find(u.call_name, unit_language(u))});
    }
    return out;
}

Finding make_finding(const RuleContext& ctx, RuleId id, const IrUnit& at, std::string message) {
    Finding f;
    f.rule_id = id;
    f.project_id = ctx.project_id;
    f.file = at.file;
    f.line = at.line;
    f.message = std::move(message);
    return f;
}

void attach_chain(Finding& f, const TaintChain& chain) {
    f.confidence = chain.has_may_hop() ? Confidence::Potential : Confidence::Definite;
    f.evidence = chain;
}

std::string origin_label(const Argument& a) { return position_text(a.position); }

// Text the algorithm/mode decision is made on: the resolved literal if any,
// else the argument's own text.
std::string decision_text(const Argument& a, const OriginValue& o) {
    if (o.kind == OriginKind::Literal && o.literal_text) return *o.literal_text;
    return a.value;
}

bool edge_connected(const DependencyGraph& g, const std::string& a, const std::string& b) {
    for (size_t e : g.out_edges(a)) {
        if (g.edges()[e].to == b) return true;
    }
    for (size_t e : g.in_edges(a)) {
        if (g.edges()[e].from == b) return true;
    }
    return false;
}

// Units chained off a call's result in the same statement group, e.g. the
// update/digest calls after createHash.
std::vector<const IrUnit*> chain_group(const DependencyGraph& g, const IrUnit& head) {
    std::vector<const IrUnit*> out{&head};
    const std::string prefix = head.call_name + "()";
    const IrUnit* stop = nullptr;
    for (const auto& u : g.nodes()) {
        if (&u == &head || u.file != head.file || u.scope != head.scope || u.call_name != head.call_name) continue;
        if (std::tie(u.line, u.column) <= std::tie(head.line, head.column)) continue;
        if (stop == nullptr || std::tie(u.line, u.column) < std::tie(stop->line, stop->column)) stop = &u;
    }
    for (const auto& u : g.nodes()) {
        if (&u == &head || u.file != head.file || u.scope != head.scope) continue;
        if (!starts_with(u.call_name, prefix)) continue;
        if (std::tie(u.line, u.column) < std::tie(head.line, head.column)) continue;
        if (stop != nullptr && std::tie(u.line, u.column) >= std::tie(stop->line, stop->column)) continue;
        out.push_back(&u);
    }
    return out;
}

bool binding_mentions_credential(const RuleContext& ctx, const IrUnit& u) {
    for (const auto& a : u.arguments) {
        if (a.tag != ArgTag::Variable || starts_with(a.value, kExprPrefix)) continue;
        const Binding* b = find_binding(ctx.input.bindings, a.value, u);
        if (b == nullptr) continue;
        if (is_credential_name(b->name)) return true;
        if (b->value && b->value->tag != ArgTag::Constant && mentions_credential(b->value->value)) return true;
    }
    return false;
}


}  // namespace

std::vector<Finding> check_fixed_secret(const RuleContext& ctx) {
    std::vector<Finding> out;
    const auto& in = ctx.input;
    auto secret = [&](const std::string& s) { return looks_like_secret(s, in.thresholds, in.catalog.provider_prefixes); };

    // Chains leaving each unit, to tell whether a secret reaches a sink.
    std::map<std::string, const TaintChain*> reach;
    for (const auto& c : ctx.chains) {
        auto it = reach.find(c.source_unit);
        if (it == reach.end() || (it->second->has_may_hop() && !c.has_may_hop())) reach[c.source_unit] = &c;
    }
    const auto sinks = identify_sinks(in.graph, in.catalog);

    for (const auto& [u, spec] : unit_infos(ctx)) {
        // (a) key material of a crypto sink resolving to a literal.
        if (spec != nullptr && (spec->role == CryptoRole::SymmetricCipher || spec->role == CryptoRole::Kdf ||
                                spec->role == CryptoRole::Mac)) {
            for (const char* role : {"key", "password"}) {
                auto arg = locate_param(*u, *spec, role);
                if (!arg) continue;
                const OriginValue o = resolve_to_origin(in, *u, *arg);
                if (o.kind != OriginKind::Literal) continue;
                Finding f = make_finding(ctx, RuleId::R1, *u, fmt::format("hard-coded {} passed to {}", role, u->call_name));
                f.resolved_origins.emplace_back(origin_label(*arg), o);
                out.push_back(std::move(f));
            }
        }
        // (b) secret-looking constants named as credentials or reaching a sink.
        for (const auto& a : u->arguments) {
            std::vector<std::pair<std::string, std::string>> candidates;  // (name, text)
            if (a.tag == ArgTag::Constant) {
                candidates.emplace_back(position_text(a.position), a.value);
            } else if (a.tag == ArgTag::DictLiteral && a.element_tags) {
                const auto obj = nlohmann::ordered_json::parse(a.value, nullptr, false);
                size_t i = 0;
                for (const auto& [k, v] : obj.items()) {
                    if (i < a.element_tags->size() && (*a.element_tags)[i] == ArgTag::Constant && v.is_string()) {
                        candidates.emplace_back(k, v.get<std::string>());
                    }
                    ++i;
                }
            }
            for (const auto& [name, text] : candidates) {
                if (!secret(text)) continue;
                const bool named = is_credential_name(name);
                const bool at_sink = sinks.count(u->unit_id) > 0;
                auto r = reach.find(u->unit_id);
                if (!named && !at_sink && r == reach.end()) continue;
                Finding f = make_finding(ctx, RuleId::R1, *u,
                                         fmt::format("hard-coded secret in argument {} of {}", name, u->call_name));
                if (!named && !at_sink) attach_chain(f, *r->second);
                out.push_back(std::move(f));
            }
        }
    }

    // Secret constants bound to names: credential-named, or consumed by a unit
    // that reaches a sink.
    for (const auto& b : in.bindings) {
        if (b.kind != Binding::Kind::Assignment || !b.value || b.value->tag != ArgTag::Constant) continue;
        if (!secret(b.value->value)) continue;
        const TaintChain* via = nullptr;
        bool named = is_credential_name(b.name);
        if (!named) {
            for (const auto& u : in.graph.nodes()) {
                if (u.file != b.file) continue;
                bool uses = false;
                for (const auto& a : u.arguments) {
                    if (a.tag == ArgTag::Variable && a.value == b.name && find_binding(in.bindings, a.value, u) == &b) {
                        uses = true;
                    }
                }
                if (!uses) continue;
                auto r = reach.find(u.unit_id);
                if (r != reach.end() && (via == nullptr || (via->has_may_hop() && !r->second->has_may_hop()))) {
                    via = r->second;
                }
            }
            if (via == nullptr) continue;
        }
        Finding f;
        f.rule_id = RuleId::R1;
        f.project_id = ctx.project_id;
        f.file = b.file;
        f.line = b.line;
        f.message = fmt::format("hard-coded secret assigned to {}", b.name);
        if (via != nullptr) attach_chain(f, *via);
        OriginValue o;
        o.kind = OriginKind::Literal;
        o.literal_text = b.value->value;
        f.resolved_origins.emplace_back(b.name, o);
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<Finding> check_fixed_iv_salt(const RuleContext& ctx) {
    std::vector<Finding> out;
    for (const auto& [u, spec] : unit_infos(ctx)) {
        // Keyword names only count on calls with a crypto role.
        if (spec == nullptr || spec->role == CryptoRole::None) continue;
        for (const char* role : {"iv", "salt"}) {
            std::optional<Argument> arg = locate_param(*u, *spec, role);
            if (!arg && std::string_view(role) == "iv") arg = locate(*u, {std::string("iv"), std::string("nonce")});
            if (!arg && std::string_view(role) == "salt") arg = locate(*u, {std::string("salt")});
            if (!arg) continue;
            const OriginValue o = resolve_to_origin(ctx.input, *u, *arg);
            if (o.kind != OriginKind::Literal) continue;
            Finding f = make_finding(ctx, RuleId::R2, *u, fmt::format("constant {} passed to {}", role, u->call_name));
            f.resolved_origins.emplace_back(origin_label(*arg), o);
            out.push_back(std::move(f));
        }
    }
    return out;
}

std::vector<Finding> check_weak_hash(const RuleContext& ctx) {
    std::vector<Finding> out;
    const auto& g = ctx.input.graph;
    for (const auto& [u, spec] : unit_infos(ctx)) {
        if (spec == nullptr || spec->role != CryptoRole::Hash || spec->weak_algorithms.empty()) continue;
        std::string algo;
        std::vector<std::pair<std::string, OriginValue>> origins;
        if (spec->algorithm_param) {
            auto arg = find_argument(*u, *spec->algorithm_param);
            if (!arg) continue;
            const OriginValue o = resolve_to_origin(ctx.input, *u, *arg);
            const std::string text = trimmed_lower(decision_text(*arg, o));
            if (std::find(spec->weak_algorithms.begin(), spec->weak_algorithms.end(), text) ==
                spec->weak_algorithms.end()) {
                continue;
            }
            algo = text;
            origins.emplace_back(origin_label(*arg), o);
        } else {
            algo = spec->weak_algorithms.front();
        }

        const auto group = chain_group(g, *u);
        std::set<std::string> members;
        for (const auto* m : group) members.insert(m->unit_id);

        // Credential context: a credential chain into the group, credential
        // names in the group's own data, or output reaching a transmit sink.
        const TaintChain* evidence = nullptr;
        for (const auto& c : ctx.chains) {
            if (c.sensitivity != Sensitivity::Credential || members.count(c.sink_unit) == 0) continue;
            if (evidence == nullptr || (evidence->has_may_hop() && !c.has_may_hop())) evidence = &c;
        }
        std::optional<TaintChain> local;
        if (evidence == nullptr) {
            for (const auto* m : group) {
                if (!unit_mentions_credential(*m) && !binding_mentions_credential(ctx, *m)) continue;
                local = TaintChain{m->unit_id, m->unit_id, {}, Sensitivity::Credential};
                break;
            }
        }
        if (evidence == nullptr && !local) {
            for (const auto* m : group) {
                for (size_t e : g.out_edges(m->unit_id)) {
                    const auto& edge = g.edges()[e];
                    const IrUnit* t = g.unit(edge.to);
                    if (t == nullptr) continue;
                    const auto cat = semantic_category(*t, ctx.input.catalog);
                    if (cat != SemanticCategory::Transmit && cat != SemanticCategory::Upload) continue;
                    if (!local || (local->has_may_hop() && edge.kind == EdgeKind::Must)) {
                        local = TaintChain{m->unit_id, t->unit_id, {edge}, Sensitivity::Credential};
                    }
                }
            }
        }
        if (local) evidence = &*local;
        const bool credential = evidence != nullptr;
        Finding f = make_finding(ctx, RuleId::R3, *u,
                                 credential ? fmt::format("weak hash {} used on credential data via {}", algo, u->call_name)
                                            : fmt::format("weak hash {} used via {} (checksum-style use)", algo, u->call_name));
        f.severity = credential ? Severity::Misuse : Severity::Informational;
        if (evidence != nullptr) attach_chain(f, *evidence);
        f.resolved_origins = std::move(origins);
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<Finding> check_kdf_config(const RuleContext& ctx) {
    std::vector<Finding> out;
    const auto& in = ctx.input;
    for (const auto& [u, spec] : unit_infos(ctx)) {
        if (spec == nullptr || spec->role != CryptoRole::Kdf) continue;
        auto arg = locate_param(*u, *spec, "iterations");
        if (!arg) continue;
        const OriginValue o = resolve_to_origin(in, *u, *arg);
        if (o.kind != OriginKind::Literal || !o.literal_text) continue;
        std::string digits;
        for (char c : *o.literal_text) {
            if (c != '_') digits.push_back(c);
        }
        long value = 0;
        try {
            size_t used = 0;
            value = std::stol(digits, &used, 0);
            if (used != digits.size()) continue;
        } catch (const std::exception&) {
            continue;
        }
        if (value >= in.thresholds.r4_min_iterations) continue;
        Finding f = make_finding(ctx, RuleId::R4, *u,
                                 fmt::format("{} iterations {} below minimum {}", u->call_name, value,
                                             in.thresholds.r4_min_iterations));
        f.resolved_origins.emplace_back(origin_label(*arg), o);
        out.push_back(std::move(f));
    }

    // Credential material reaching a cipher key without a KDF on the way.
    for (const auto& c : ctx.chains) {
        if (c.sensitivity != Sensitivity::Credential) continue;
        const IrUnit* sink = in.graph.unit(c.sink_unit);
        const IrUnit* source = in.graph.unit(c.source_unit);
        if (sink == nullptr || source == nullptr) continue;
        const auto* spec = in.catalog.find(sink->call_name, unit_language(*sink));
        if (spec == nullptr || spec->role != CryptoRole::SymmetricCipher) continue;
        auto key = locate_param(*sink, *spec, "key");
        if (!key || key->tag != ArgTag::Variable) continue;
        if (c.hops.empty() ? !is_credential_name(key->value) : c.hops.back().witness != key->value) continue;
        bool via_kdf = false;
        auto is_kdf = [&](const std::string& id) {
            const IrUnit* x = in.graph.unit(id);
            const auto* s = x == nullptr ? nullptr : in.catalog.find(x->call_name, unit_language(*x));
            return s != nullptr && s->role == CryptoRole::Kdf;
        };
        via_kdf = is_kdf(c.source_unit);
        for (const auto& h : c.hops) via_kdf = via_kdf || is_kdf(h.to);
        if (via_kdf) continue;
        Finding f = make_finding(ctx, RuleId::R4, *source,
                                 fmt::format("credential reaches {} key without key derivation", sink->call_name));
        attach_chain(f, c);
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<Finding> check_static_seed(const RuleContext& ctx) {
    std::vector<Finding> out;
    for (const auto& [u, spec] : unit_infos(ctx)) {
        if (spec == nullptr) continue;
        auto arg = locate_param(*u, *spec, "seed");
        if (!arg) continue;
        const OriginValue o = resolve_to_origin(ctx.input, *u, *arg);
        if (o.kind != OriginKind::Literal) continue;
        Finding f = make_finding(ctx, RuleId::R5, *u, fmt::format("static seed passed to {}", u->call_name));
        f.resolved_origins.emplace_back(origin_label(*arg), o);
        out.push_back(std::move(f));
    }
    return out;
}

namespace {

struct ModeInfo {
    std::optional<std::string> mode;
    std::vector<std::pair<std::string, OriginValue>> origins;
};

ModeInfo cipher_mode(const RuleContext& ctx, const IrUnit& u, const CryptoApiSpec& spec) {
    ModeInfo info;
    std::optional<Argument> arg = locate_param(u, spec, "mode");
    if (!arg) arg = find_argument(u, std::string("mode"));
    if (arg) {
        const OriginValue o = resolve_to_origin(ctx.input, u, *arg);
        info.origins.emplace_back(origin_label(*arg), o);
        info.mode = mode_in_text(decision_text(*arg, o));
        if (!info.mode) info.mode = mode_in_text(arg->value);
    }
    if (!info.mode && spec.algorithm_param) {
        if (auto alg = find_argument(u, *spec.algorithm_param)) {
            const OriginValue o = resolve_to_origin(ctx.input, u, *alg);
            info.mode = mode_in_text(decision_text(*alg, o));
            if (info.mode) info.origins.emplace_back(origin_label(*alg), o);
        }
    }
    return info;
}

}  // namespace

std::vector<Finding> check_ecb_mode(const RuleContext& ctx) {
    std::vector<Finding> out;
    for (const auto& [u, spec] : unit_infos(ctx)) {
        if (spec == nullptr || spec->role != CryptoRole::SymmetricCipher) continue;
        ModeInfo m = cipher_mode(ctx, *u, *spec);
        if (m.mode != "ecb") continue;
        Finding f = make_finding(ctx, RuleId::R6, *u, fmt::format("ECB mode used by {}", u->call_name));
        f.resolved_origins = std::move(m.origins);
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<Finding> check_missing_integrity(const RuleContext& ctx) {
    std::vector<Finding> out;
    const auto& g = ctx.input.graph;
    const auto infos = unit_infos(ctx);

    std::vector<const IrUnit*> macs;
    for (const auto& [u, spec] : infos) {
        if (spec != nullptr && spec->role == CryptoRole::Mac) macs.push_back(u);
    }
    // Scopes holding a cipher whose mode is known; their finalize calls are
    // judged through that cipher instead.
    std::set<std::pair<std::string, std::string>> mode_scopes;
    std::map<const IrUnit*, ModeInfo> modes;
    for (const auto& [u, spec] : infos) {
        if (spec == nullptr || spec->role != CryptoRole::SymmetricCipher) continue;
        ModeInfo m = cipher_mode(ctx, *u, *spec);
        if (m.mode) mode_scopes.insert({u->file, u->scope});
        modes.emplace(u, std::move(m));
    }

    for (const auto& [u, spec] : infos) {
        if (spec == nullptr || spec->role != CryptoRole::SymmetricCipher) continue;
        const ModeInfo& m = modes.at(u);
        std::string what;
        if (m.mode) {
            if (*m.mode == "ecb" || is_authenticated_mode(*m.mode)) continue;
            what = fmt::format("{} in {} mode without authentication", u->call_name, *m.mode);
        } else if (pattern_matches("*.final", u->call_name) && mode_scopes.count({u->file, u->scope}) == 0) {
            what = fmt::format("{} without auth tag retrieval", u->call_name);
        } else {
            continue;
        }
        bool suppressed = false;
        bool elsewhere = false;
        for (const auto* mac : macs) {
            if ((mac->file == u->file && mac->scope == u->scope) || edge_connected(g, u->unit_id, mac->unit_id)) {
                suppressed = true;
                break;
            }
            elsewhere = true;
        }
        if (suppressed) continue;
        Finding f = make_finding(ctx, RuleId::R7, *u, what);
        if (elsewhere) f.confidence = Confidence::Potential;
        f.resolved_origins = m.origins;
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<Finding> check_deprecated_primitive(const RuleContext& ctx) {
    std::vector<Finding> out;
    for (const auto& [u, spec] : unit_infos(ctx)) {
        if (spec == nullptr) continue;
        if (spec->deprecated) {
            out.push_back(make_finding(ctx, RuleId::R8, *u, fmt::format("deprecated primitive {}", u->call_name)));
            continue;
        }
        if (!spec->algorithm_param || spec->role == CryptoRole::Hash) continue;
        auto arg = find_argument(*u, *spec->algorithm_param);
        if (!arg) continue;
        const OriginValue o = resolve_to_origin(ctx.input, *u, *arg);
        const std::string text = decision_text(*arg, o);
        if (!is_deprecated_algorithm(text)) continue;
        Finding f = make_finding(ctx, RuleId::R8, *u,
                                 fmt::format("deprecated algorithm {} in {}", trimmed_lower(text), u->call_name));
        f.resolved_origins.emplace_back(origin_label(*arg), o);
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<Finding> evaluate_rules(const RuleContext& ctx, const std::set<RuleId>& enabled) {
    using Checker = std::vector<Finding> (*)(const RuleContext&);
    static const std::map<RuleId, Checker> kCheckers = {
        {RuleId::R1, check_fixed_secret},     {RuleId::R2, check_fixed_iv_salt},
        {RuleId::R3, check_weak_hash},        {RuleId::R4, check_kdf_config},
        {RuleId::R5, check_static_seed},      {RuleId::R6, check_ecb_mode},
        {RuleId::R7, check_missing_integrity}, {RuleId::R8, check_deprecated_primitive},
    };
    std::vector<Finding> all;
    for (auto id : enabled) {
        auto found = kCheckers.at(id)(ctx);
        all.insert(all.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
    }
    std::stable_sort(all.begin(), all.end(), [](const Finding& a, const Finding& b) {
        return std::tie(a.file, a.line, a.rule_id, a.message) < std::tie(b.file, b.line, b.rule_id, b.message);
    });
    // Same key: keep the first, which is the definite one when both exist.
    std::vector<Finding> out;
    for (auto& f : all) {
        if (!out.empty() && out.back().project_id == f.project_id && out.back().rule_id == f.rule_id &&
            out.back().file == f.file && out.back().line == f.line && out.back().message == f.message) {
            if (out.back().confidence == Confidence::Potential && f.confidence == Confidence::Definite) {
                out.back() = std::move(f);
            }
            continue;
        }
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace cryptaudit

#include "cryptaudit/catalog.hpp"
#include "cryptaudit/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace cryptaudit {

using json = nlohmann::json;

std::string_view to_string(CryptoRole role) {
    switch (role) {
        case CryptoRole::Hash: return "hash";
        case CryptoRole::SymmetricCipher: return "symmetric_cipher";
        case CryptoRole::Kdf: return "kdf";
        case CryptoRole::Prng: return "prng";
        case CryptoRole::KeyMaterial: return "key_material";
        case CryptoRole::Mac: return "mac";
        case CryptoRole::Signature: return "signature";
        case CryptoRole::None: return "none";
    }
    return "none";
}

std::string_view to_string(SemanticCategory cat) {
    switch (cat) {
        case SemanticCategory::Protect: return "protect";
        case SemanticCategory::Upload: return "upload";
        case SemanticCategory::Mask: return "mask";
        case SemanticCategory::Persist: return "persist";
        case SemanticCategory::Transmit: return "transmit";
        case SemanticCategory::Input: return "input";
        case SemanticCategory::Random: return "random";
        case SemanticCategory::Derive: return "derive";
        case SemanticCategory::Other: return "other";
    }
    return "other";
}

std::optional<CryptoRole> parse_role(std::string_view text) {
    for (auto r : {CryptoRole::Hash, CryptoRole::SymmetricCipher, CryptoRole::Kdf, CryptoRole::Prng,
                   CryptoRole::KeyMaterial, CryptoRole::Mac, CryptoRole::Signature, CryptoRole::None}) {
        if (to_string(r) == text) return r;
    }
    return std::nullopt;
}

std::optional<SemanticCategory> parse_category(std::string_view text) {
    for (auto c : {SemanticCategory::Protect, SemanticCategory::Upload, SemanticCategory::Mask,
                   SemanticCategory::Persist, SemanticCategory::Transmit, SemanticCategory::Input,
                   SemanticCategory::Random, SemanticCategory::Derive, SemanticCategory::Other}) {
        if (to_string(c) == text) return c;
    }
    return std::nullopt;
}

bool is_crypto_sink_role(CryptoRole role) {
    return role == CryptoRole::Hash || role == CryptoRole::SymmetricCipher || role == CryptoRole::Kdf ||
           role == CryptoRole::Mac;
}

bool pattern_matches(std::string_view pattern, std::string_view call_name) {
    if (pattern.size() > 2 && pattern.substr(0, 2) == "*.") {
        const auto suffix = pattern.substr(2);
        if (call_name == suffix) return true;
        return call_name.size() > suffix.size() && call_name.substr(call_name.size() - suffix.size()) == suffix &&
               call_name[call_name.size() - suffix.size() - 1] == '.';
    }
    return pattern == call_name;
}

namespace {

bool language_applies(const std::optional<Language>& spec_lang, Language lang) {
    if (!spec_lang) return true;
    if (*spec_lang == lang) return true;
    // TypeScript code uses the JavaScript API surface.
    return *spec_lang == Language::JavaScript && lang == Language::TypeScript;
}

// Higher is more specific.
std::tuple<int, size_t, int> specificity(const CryptoApiSpec& s, std::string_view call_name) {
    const bool exact = s.pattern == call_name;
    return {exact ? 1 : 0, s.pattern.size(), s.language ? 1 : 0};
}

[[noreturn]] void malformed(std::string_view where, std::string_view what) {
    throw Error(ErrorKind::MalformedCatalog, fmt::format("{}: {}", where, what));
}

ArgPosition parse_locator(const json& j, std::string_view where) {
    if (j.is_number_integer()) {
        const int v = j.get<int>();
        if (v < 0) malformed(where, "negative argument position");
        return v;
    }
    if (j.is_string() && !j.get<std::string>().empty()) return j.get<std::string>();
    malformed(where, "argument locator must be a non-negative integer or a keyword name");
}

std::string trim_lower(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

CryptoApiSpec parse_spec(const json& j, size_t index) {
    const std::string where = fmt::format("spec {}", index);
    if (!j.is_object()) malformed(where, "not an object");
    CryptoApiSpec s;
    auto str = [&](const char* key, bool required) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            if (required) malformed(where, fmt::format("missing field '{}'", key));
            return std::nullopt;
        }
        if (!it->is_string()) malformed(where, fmt::format("field '{}' must be a string", key));
        return it->get<std::string>();
    };
    s.pattern = *str("pattern", true);
    if (s.pattern.empty() || s.pattern == "*.") malformed(where, "empty pattern");

    const std::string lang = str("language", false).value_or("any");
    if (trim_lower(lang) != "any") {
        auto l = parse_language(lang);
        if (!l || *l == Language::Unknown) malformed(where, fmt::format("unknown language '{}'", lang));
        s.language = *l;
    }
    const auto role = parse_role(*str("role", true));
    if (!role) malformed(where, "unknown role");
    s.role = *role;
    const auto cat = parse_category(str("semantic_category", false).value_or("other"));
    if (!cat) malformed(where, "unknown semantic_category");
    s.category = *cat;

    if (auto it = j.find("algorithm_param"); it != j.end() && !it->is_null()) {
        s.algorithm_param = parse_locator(*it, where);
    }
    if (auto it = j.find("weak_algorithms"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) malformed(where, "weak_algorithms must be an array");
        for (const auto& w : *it) {
            if (!w.is_string()) malformed(where, "weak_algorithms entries must be strings");
            s.weak_algorithms.push_back(trim_lower(w.get<std::string>()));
        }
    }
    if (auto it = j.find("deprecated"); it != j.end() && !it->is_null()) {
        if (!it->is_boolean()) malformed(where, "deprecated must be a boolean");
        s.deprecated = it->get<bool>();
    }
    if (auto it = j.find("params"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) malformed(where, "params must be an object");
        for (const auto& [name, locs] : it->items()) {
            if (!locs.is_array()) malformed(where, fmt::format("params.{} must be an array", name));
            auto& out = s.params[name];
            for (const auto& l : locs) out.push_back(parse_locator(l, where));
        }
    }
    return s;
}

std::vector<std::string> string_list(const json& doc, const char* key) {
    std::vector<std::string> out;
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return out;
    if (!it->is_array()) malformed(key, "must be an array");
    for (size_t i = 0; i < it->size(); ++i) {
        const auto& v = (*it)[i];
        if (!v.is_string() || v.get<std::string>().empty()) {
            malformed(fmt::format("{} {}", key, i), "entries must be non-empty strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

void check_ambiguity(const std::vector<CryptoApiSpec>& specs) {
    std::set<std::pair<std::string, int>> seen;
    for (const auto& s : specs) {
        const int lang = s.language ? static_cast<int>(*s.language) : -1;
        if (!seen.insert({s.pattern, lang}).second) {
            throw Error(ErrorKind::AmbiguousPattern,
                        fmt::format("pattern '{}' declared twice for the same language", s.pattern));
        }
    }
}

void add_marker_specs(CryptoApiCatalog& cat) {
    std::set<std::string> have;
    for (const auto& s : cat.specs) have.insert(s.pattern);
    auto add = [&](const std::string& p, SemanticCategory c) {
        if (!have.insert(p).second) return;
        CryptoApiSpec s;
        s.pattern = p;
        s.category = c;
        cat.specs.push_back(std::move(s));
    };
    for (const auto& m : cat.sink_markers) add(m, SemanticCategory::Other);
    for (const auto& m : cat.source_markers) add(m, SemanticCategory::Input);
}

}  // namespace

namespace {

std::string_view tail_segment(std::string_view name) {
    const auto dot = name.rfind('.');
    return dot == std::string_view::npos ? name : name.substr(dot + 1);
}

}  // namespace

void CryptoApiCatalog::compile() {
    by_tail_.clear();
    for (size_t i = 0; i < specs.size(); ++i) by_tail_[std::string(tail_segment(specs[i].pattern))].push_back(i);
    indexed_specs_ = specs.size();
    compiled_.clear();
    for (size_t i = 0; i < identifier_patterns.size(); ++i) {
        try {
            compiled_.emplace_back(std::regex(identifier_patterns[i].regex, std::regex::ECMAScript),
                                   identifier_patterns[i].kind);
        } catch (const std::regex_error&) {
            malformed(fmt::format("identifier_patterns {}", i), "invalid regex");
        }
    }
}

const CryptoApiSpec* CryptoApiCatalog::find(std::string_view call_name, Language language) const {
    const CryptoApiSpec* best = nullptr;
    if (indexed_specs_ == specs.size() && !specs.empty()) {
        auto it = by_tail_.find(std::string(tail_segment(call_name)));
        if (it == by_tail_.end()) return nullptr;
        for (size_t i : it->second) {
            const auto& s = specs[i];
            if (!language_applies(s.language, language) || !pattern_matches(s.pattern, call_name)) continue;
            if (best == nullptr || specificity(s, call_name) > specificity(*best, call_name)) best = &s;
        }
        return best;
    }
    for (const auto& s : specs) {
        if (!language_applies(s.language, language) || !pattern_matches(s.pattern, call_name)) continue;
        if (best == nullptr || specificity(s, call_name) > specificity(*best, call_name)) best = &s;
    }
    return best;
}

bool CryptoApiCatalog::is_sink_marker(std::string_view call_name) const {
    return std::any_of(sink_markers.begin(), sink_markers.end(),
                       [&](const std::string& p) { return pattern_matches(p, call_name); });
}

std::optional<SourceKind> CryptoApiCatalog::source_kind(std::string_view call_name) const {
    for (const auto& p : source_markers) {
        if (!pattern_matches(p, call_name)) continue;
        std::string lower = trim_lower(p);
        return lower.find("env") != std::string::npos ? SourceKind::Environment : SourceKind::ExternalInput;
    }
    return std::nullopt;
}

bool CryptoApiCatalog::is_risky(SemanticCategory a, SemanticCategory b) const {
    return std::find(risky_pairs.begin(), risky_pairs.end(), std::make_pair(a, b)) != risky_pairs.end();
}

CryptoApiCatalog parse_catalog(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::MalformedCatalog, fmt::format("invalid JSON: {}", e.what()));
    }
    if (!doc.is_object()) throw Error(ErrorKind::MalformedCatalog, "catalog must be a JSON object");

    CryptoApiCatalog cat;
    if (auto it = doc.find("specs"); it != doc.end()) {
        if (!it->is_array()) malformed("specs", "must be an array");
        for (size_t i = 0; i < it->size(); ++i) cat.specs.push_back(parse_spec((*it)[i], i));
    }
    check_ambiguity(cat.specs);
    cat.source_markers = string_list(doc, "source_markers");
    cat.sink_markers = string_list(doc, "sink_markers");
    cat.provider_prefixes = string_list(doc, "provider_prefixes");

    if (auto it = doc.find("risky_pairs"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) malformed("risky_pairs", "must be an array");
        for (size_t i = 0; i < it->size(); ++i) {
            const auto& p = (*it)[i];
            const std::string where = fmt::format("risky_pairs {}", i);
            if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string()) {
                malformed(where, "must be a pair of category names");
            }
            auto a = parse_category(p[0].get<std::string>());
            auto b = parse_category(p[1].get<std::string>());
            if (!a || !b) malformed(where, "unknown semantic_category");
            cat.risky_pairs.emplace_back(*a, *b);
        }
    }
    if (auto it = doc.find("identifier_patterns"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) malformed("identifier_patterns", "must be an array");
        for (size_t i = 0; i < it->size(); ++i) {
            const auto& p = (*it)[i];
            if (!p.is_object() || !p.contains("regex") || !p["regex"].is_string()) {
                malformed(fmt::format("identifier_patterns {}", i), "needs a regex string");
            }
            std::string kind = p.value("kind", "identifier");
            if (kind != "topic" && kind != "identifier") {
                malformed(fmt::format("identifier_patterns {}", i), "kind must be topic or identifier");
            }
            cat.identifier_patterns.push_back({p["regex"].get<std::string>(), kind});
        }
    }
    if (auto it = doc.find("name_hints"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) malformed("name_hints", "must be an array");
        for (size_t i = 0; i < it->size(); ++i) {
            const auto& h = (*it)[i];
            const std::string where = fmt::format("name_hints {}", i);
            if (!h.is_object() || !h.contains("token") || !h["token"].is_string()) malformed(where, "needs a token");
            auto c = parse_category(h.value("semantic_category", ""));
            if (!c) malformed(where, "unknown semantic_category");
            cat.name_hints.push_back({trim_lower(h["token"].get<std::string>()), *c});
        }
    }
    cat.compile();
    return cat;
}

namespace {

template <typename T>
void append_unique(std::vector<T>& into, const std::vector<T>& from) {
    for (const auto& v : from) {
        if (std::find(into.begin(), into.end(), v) == into.end()) into.push_back(v);
    }
}

}  // namespace

CryptoApiCatalog load_catalog(const std::optional<fs::path>& path) {
    CryptoApiCatalog cat = parse_catalog(default_catalog_json());
    if (path) {
        std::ifstream in(*path, std::ios::binary);
        if (!in) throw Error(ErrorKind::MalformedCatalog, fmt::format("cannot read catalog '{}'", path->string()));
        std::stringstream ss;
        ss << in.rdbuf();
        CryptoApiCatalog user = parse_catalog(ss.str());

        std::set<std::string> shadowed;
        for (const auto& s : user.specs) shadowed.insert(s.pattern);
        std::erase_if(cat.specs, [&](const CryptoApiSpec& s) { return shadowed.count(s.pattern) > 0; });
        cat.specs.insert(cat.specs.end(), user.specs.begin(), user.specs.end());
        append_unique(cat.source_markers, user.source_markers);
        append_unique(cat.sink_markers, user.sink_markers);
        append_unique(cat.risky_pairs, user.risky_pairs);
        append_unique(cat.provider_prefixes, user.provider_prefixes);
        for (const auto& p : user.identifier_patterns) cat.identifier_patterns.push_back(p);
        for (const auto& h : user.name_hints) cat.name_hints.push_back(h);
    }
    add_marker_specs(cat);
    cat.compile();
    return cat;
}

std::optional<CryptoApiSpec> lookup(std::string_view call_name, Language language, const CryptoApiCatalog& catalog) {
    if (const auto* s = catalog.find(call_name, language)) return *s;
    return std::nullopt;
}

std::vector<std::string> name_tokens(std::string_view call_name) {
    const auto dot = call_name.rfind('.');
    std::string_view last = dot == std::string_view::npos ? call_name : call_name.substr(dot + 1);
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (size_t i = 0; i < last.size(); ++i) {
        const auto c = static_cast<unsigned char>(last[i]);
        if (!std::isalnum(c)) {
            flush();
            continue;
        }
        if (std::isupper(c) && !cur.empty() &&
            (!std::isupper(static_cast<unsigned char>(last[i - 1])) ||
             (i + 1 < last.size() && std::islower(static_cast<unsigned char>(last[i + 1]))))) {
            flush();
        }
        cur.push_back(static_cast<char>(std::tolower(c)));
    }
    flush();
    return out;
}

SemanticCategory semantic_category(const IrUnit& unit, const CryptoApiCatalog& catalog) {
    if (const auto* s = catalog.find(unit.call_name, unit_language(unit))) return s->category;
    const auto tokens = name_tokens(unit.call_name);
    for (const auto& h : catalog.name_hints) {
        if (std::find(tokens.begin(), tokens.end(), h.token) != tokens.end()) return h.category;
    }
    return SemanticCategory::Other;
}

}  // namespace cryptaudit

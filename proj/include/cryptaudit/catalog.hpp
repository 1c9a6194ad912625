#pragma once

#include "cryptaudit/ingest.hpp"
#include "cryptaudit/ir.hpp"

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cryptaudit {

enum class CryptoRole { Hash, SymmetricCipher, Kdf, Prng, KeyMaterial, Mac, Signature, None };

enum class SemanticCategory { Protect, Upload, Mask, Persist, Transmit, Input, Random, Derive, Other };

std::string_view to_string(CryptoRole role);
std::string_view to_string(SemanticCategory cat);
std::optional<CryptoRole> parse_role(std::string_view text);
std::optional<SemanticCategory> parse_category(std::string_view text);

/// Roles that make a unit a cryptographic sink.
bool is_crypto_sink_role(CryptoRole role);

struct CryptoApiSpec {
    std::string pattern;
    std::optional<Language> language;  // nullopt = Any
    CryptoRole role = CryptoRole::None;
    SemanticCategory category = SemanticCategory::Other;
    std::optional<ArgPosition> algorithm_param;
    std::vector<std::string> weak_algorithms;
    bool deprecated = false;
    /// Parameter roles ("key", "iv", "salt", "iterations", "mode", "seed",
    /// "password") to the locators that may carry them, in priority order.
    std::map<std::string, std::vector<ArgPosition>> params;

    bool operator==(const CryptoApiSpec&) const = default;
};

enum class SourceKind { ExternalInput, Environment };

struct IdentifierPattern {
    std::string regex;
    std::string kind;  // "topic" or "identifier"
};

struct NameHint {
    std::string token;
    SemanticCategory category = SemanticCategory::Other;
};

class CryptoApiCatalog {
public:
    std::vector<CryptoApiSpec> specs;
    std::vector<std::string> source_markers;
    std::vector<std::string> sink_markers;
    std::vector<std::pair<SemanticCategory, SemanticCategory>> risky_pairs;
    std::vector<std::string> provider_prefixes;
    std::vector<IdentifierPattern> identifier_patterns;
    std::vector<NameHint> name_hints;

    /// Best spec for a call name: exact pattern beats suffix pattern, longer
    /// suffix beats shorter, a language-specific entry beats Any.
    const CryptoApiSpec* find(std::string_view call_name, Language language) const;

    bool is_sink_marker(std::string_view call_name) const;
    std::optional<SourceKind> source_kind(std::string_view call_name) const;
    bool is_risky(SemanticCategory a, SemanticCategory b) const;

    /// Compiled identifier regexes, built on load.
    const std::vector<std::pair<std::regex, std::string>>& identifier_regexes() const { return compiled_; }
    /// Rebuilds the regexes and the lookup index; call after editing specs.
    void compile();

private:
    std::vector<std::pair<std::regex, std::string>> compiled_;
    // Spec indices by last dotted segment of the pattern.
    std::unordered_map<std::string, std::vector<size_t>> by_tail_;
    size_t indexed_specs_ = 0;
};

/// `*.name` matches "name" and any call ending in ".name"; anything else
/// must match exactly.
bool pattern_matches(std::string_view pattern, std::string_view call_name);

/// Built-in catalog JSON text.
std::string_view default_catalog_json();

/// Parses one catalog document. Throws Error{MalformedCatalog} with the entry
/// index, Error{AmbiguousPattern} on duplicate (pattern, language) entries.
CryptoApiCatalog parse_catalog(std::string_view json_text);

/// Default catalog, extended and shadowed by the file at `path` when given.
CryptoApiCatalog load_catalog(const std::optional<fs::path>& path);

std::optional<CryptoApiSpec> lookup(std::string_view call_name, Language language, const CryptoApiCatalog& catalog);

SemanticCategory semantic_category(const IrUnit& unit, const CryptoApiCatalog& catalog);

/// Lowercased identifier words of the final call segment ("getAuthTag" ->
/// get, auth, tag).
std::vector<std::string> name_tokens(std::string_view call_name);

}  // namespace cryptaudit

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cryptaudit {

struct Thresholds {
    long r4_min_iterations = 10000;
    int r1_min_length = 20;
    double r1_min_entropy = 3.5;
    /// Provider-prefixed strings need only this many characters.
    int r1_prefixed_min_length = 16;
};

/// Shannon entropy in bits per character over bytes.
double shannon_entropy(std::string_view s);

/// Hard-coded secret heuristic: long, high-entropy, no whitespace, not a URL;
/// or starting with a known provider prefix.
bool looks_like_secret(std::string_view text, const Thresholds& t, const std::vector<std::string>& provider_prefixes);

/// Case-insensitive credential lexicon match on an identifier, ignoring '_'
/// and '-' so apiKey, api_key and API-KEY all match.
bool is_credential_name(std::string_view name);

/// Same match anywhere inside free text, e.g. a rendered expression.
bool mentions_credential(std::string_view text);

}  // namespace cryptaudit

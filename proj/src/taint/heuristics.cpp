#include "cryptaudit/heuristics.hpp"

#include <array>
#include <cctype>
#include <cmath>

namespace cryptaudit {

namespace {

constexpr std::array<std::string_view, 9> kLexicon = {"password", "passwd", "pwd",         "secret",    "token",
                                                      "api_key",  "apikey", "private_key", "credential"};

std::string normalize(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (c == '_' || c == '-') continue;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

bool looks_like_url(std::string_view s) {
    const auto p = s.find("://");
    if (p == std::string_view::npos || p == 0) return false;
    for (size_t i = 0; i < p; ++i) {
        if (!std::isalpha(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

}  // namespace

double shannon_entropy(std::string_view s) {
    if (s.empty()) return 0.0;
    std::array<size_t, 256> counts{};
    for (unsigned char c : s) ++counts[c];
    double h = 0.0;
    const double n = static_cast<double>(s.size());
    for (size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

bool looks_like_secret(std::string_view text, const Thresholds& t, const std::vector<std::string>& provider_prefixes) {
    for (const auto& prefix : provider_prefixes) {
        if (!prefix.empty() && text.substr(0, prefix.size()) == prefix &&
            static_cast<int>(text.size()) >= t.r1_prefixed_min_length) {
            return true;
        }
    }
    if (static_cast<int>(text.size()) < t.r1_min_length) return false;
    for (unsigned char c : text) {
        if (std::isspace(c)) return false;
    }
    if (looks_like_url(text)) return false;
    return shannon_entropy(text) >= t.r1_min_entropy;
}

bool is_credential_name(std::string_view name) { return mentions_credential(name); }

bool mentions_credential(std::string_view text) {
    const std::string n = normalize(text);
    for (auto word : kLexicon) {
        if (n.find(normalize(word)) != std::string::npos) return true;
    }
    return false;
}

}  // namespace cryptaudit

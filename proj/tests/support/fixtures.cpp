#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <random>
#include <tuple>

#include <fmt/format.h>

namespace fixtures {

fs::path root() { return fs::path(CRYPTAUDIT_FIXTURES); }

bool Expected::operator<(const Expected& o) const {
    return std::tie(file, line, rule, severity, confidence) < std::tie(o.file, o.line, o.rule, o.severity, o.confidence);
}

const std::map<std::string, std::vector<Expected>>& labeled() {
    using R = RuleId;
    constexpr auto M = Severity::Misuse;
    constexpr auto I = Severity::Informational;
    constexpr auto D = Confidence::Definite;
    constexpr auto P = Confidence::Potential;
    static const std::map<std::string, std::vector<Expected>> kLabels = {
        {"gemini_config", {{R::R1, M, D, "config.py", 4}}},
        {"gemini_configure", {{R::R1, M, D, "extract.py", 4}}},
        {"des_ecb", {{R::R6, M, D, "des.ts", 5}, {R::R8, M, D, "des.ts", 5}}},
        {"auth_headers", {{R::R3, M, D, "client.ts", 15}}},
        {"md5_checksum", {{R::R3, I, D, "checksum.py", 5}}},
        {"md5_password", {{R::R3, M, D, "store.py", 4}}},
        // Truncation path only; the PBKDF2 salt path stays clean.
        {"key_derivation", {{R::R4, M, P, "server.py", 34}}},
        {"md5_wrapper", {{R::R3, I, D, "atlas.ts", 13}}},
        {"clean", {}},
    };
    return kLabels;
}

std::vector<Expected> observed(const std::vector<Finding>& findings) {
    std::vector<Expected> out;
    for (const auto& f : findings) out.push_back({f.rule_id, f.severity, f.confidence, f.file, f.line});
    std::sort(out.begin(), out.end());
    return out;
}

const CryptoApiCatalog& default_catalog() {
    static const CryptoApiCatalog kCatalog = load_catalog(std::nullopt);
    return kCatalog;
}

ProjectAnalysis analyze(const std::string& fixture, const AnalysisOptions& options) {
    const auto projects = discover_projects(root() / fixture, false, std::nullopt);
    return analyze_project(projects.front(), default_catalog(), options);
}

SourceFile source(const std::string& relative_path, const std::string& content) {
    SourceFile f;
    f.path = relative_path;
    f.relative_path = relative_path;
    f.language = detect_language(relative_path, content);
    f.content = content;
    f.size_bytes = content.size();
    return f;
}

ProjectAnalysis analyze_snippet(const std::string& relative_path, const std::string& content,
                                const AnalysisOptions& options) {
    return analyze_sources("snippet", {source(relative_path, content)}, default_catalog(), options);
}

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() / fmt::format("cryptaudit-test-{}-{}", rd(), counter++);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

fs::path TempDir::write(const std::string& relative, const std::string& content) const {
    const fs::path p = path_ / relative;
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
    return p;
}

}  // namespace fixtures

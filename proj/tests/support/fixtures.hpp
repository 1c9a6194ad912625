#pragma once

#include "cryptaudit/pipeline.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fixtures {

using namespace cryptaudit;

fs::path root();

struct Expected {
    RuleId rule;
    Severity severity;
    Confidence confidence;
    std::string file;
    int line;

    bool operator<(const Expected& o) const;
    bool operator==(const Expected&) const = default;
};

// Hand-labeled finding sets for the listing fixtures under tests/fixtures.
const std::map<std::string, std::vector<Expected>>& labeled();

std::vector<Expected> observed(const std::vector<Finding>& findings);

const CryptoApiCatalog& default_catalog();

ProjectAnalysis analyze(const std::string& fixture, const AnalysisOptions& options = {});

SourceFile source(const std::string& relative_path, const std::string& content);

// One in-memory file run through the full pipeline.
ProjectAnalysis analyze_snippet(const std::string& relative_path, const std::string& content,
                                const AnalysisOptions& options = {});

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path write(const std::string& relative, const std::string& content) const;

private:
    fs::path path_;
};

}  // namespace fixtures

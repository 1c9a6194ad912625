#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cryptaudit {

namespace fs = std::filesystem;

enum class Language { Python, JavaScript, TypeScript, Unknown };

std::string_view to_string(Language lang);
std::optional<Language> parse_language(std::string_view text);

struct ProjectMetadata {
    std::string market;
    std::string category;
    std::string declared_language;

    bool operator==(const ProjectMetadata&) const = default;
};

struct ProjectDescriptor {
    fs::path root_path;
    std::string project_id;
    std::optional<ProjectMetadata> metadata;
};

struct SourceFile {
    fs::path path;
    /// Path relative to the project root, always with '/' separators. This is
    /// the form that appears in IR and findings.
    std::string relative_path;
    Language language = Language::Unknown;
    std::string content;
    std::uintmax_t size_bytes = 0;
};

struct Enumeration {
    std::vector<SourceFile> files;
    std::vector<std::string> warnings;
};

inline constexpr std::uintmax_t kMaxSourceBytes = 2u * 1024u * 1024u;

/// Extension-based detection. `content` is accepted for future shebang
/// sniffing and currently ignored.
Language detect_language(const fs::path& path, std::string_view content);

bool is_skipped_directory(std::string_view name);

/// Parses the corpus metadata file (JSON array of records keyed by
/// project_id). Throws Error{MalformedMetadata} naming the offending record.
std::map<std::string, ProjectMetadata> load_metadata(const fs::path& file);

std::vector<ProjectDescriptor> discover_projects(const fs::path& root, bool corpus_mode,
                                                 const std::optional<fs::path>& metadata_file);

Enumeration enumerate_source_files(const ProjectDescriptor& project);

struct LanguageLabel {
    Language language = Language::Unknown;
    bool tie = false;
};

/// Majority language by file count; ties resolve to the enum order
/// (Python, JavaScript, TypeScript) and are flagged.
LanguageLabel majority_language(const std::vector<SourceFile>& files);

}  // namespace cryptaudit

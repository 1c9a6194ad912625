#include "cryptaudit/ingest.hpp"

#include "cryptaudit/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

namespace cryptaudit {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonexistentRoot: return "NonexistentRoot";
        case ErrorKind::MalformedMetadata: return "MalformedMetadata";
        case ErrorKind::UnsupportedLanguage: return "UnsupportedLanguage";
        case ErrorKind::FatalParseError: return "FatalParseError";
        case ErrorKind::MalformedCatalog: return "MalformedCatalog";
        case ErrorKind::AmbiguousPattern: return "AmbiguousPattern";
        case ErrorKind::DuplicateProjectId: return "DuplicateProjectId";
        case ErrorKind::MalformedIr: return "MalformedIr";
        case ErrorKind::Usage: return "UsageError";
        case ErrorKind::Io: return "IoError";
    }
    return "Error";
}

std::string_view to_string(Language lang) {
    switch (lang) {
        case Language::Python: return "Python";
        case Language::JavaScript: return "JavaScript";
        case Language::TypeScript: return "TypeScript";
        case Language::Unknown: return "Unknown";
    }
    return "Unknown";
}

std::optional<Language> parse_language(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "python") return Language::Python;
    if (lower == "javascript" || lower == "js") return Language::JavaScript;
    if (lower == "typescript" || lower == "ts") return Language::TypeScript;
    if (lower == "unknown") return Language::Unknown;
    return std::nullopt;
}

Language detect_language(const fs::path& path, std::string_view /*content*/) {
    const std::string ext = path.extension().string();
    if (ext == ".py") return Language::Python;
    if (ext == ".js" || ext == ".mjs" || ext == ".cjs") return Language::JavaScript;
    if (ext == ".ts" || ext == ".tsx") return Language::TypeScript;
    return Language::Unknown;
}

bool is_skipped_directory(std::string_view name) {
    static constexpr std::array<std::string_view, 8> kSkip = {
        "node_modules", ".git", "vendor", "dist", "build", "__pycache__", "venv", ".venv"};
    return std::find(kSkip.begin(), kSkip.end(), name) != kSkip.end();
}

namespace {

bool valid_utf8(std::string_view s) {
    size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            extra = 1;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) return false;
        for (size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
            cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            return false;
        }
        i += extra + 1;
    }
    return true;
}

std::string generic_relative(const fs::path& file, const fs::path& root) {
    return file.lexically_relative(root).generic_string();
}

}  // namespace

std::map<std::string, ProjectMetadata> load_metadata(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::MalformedMetadata,
                    fmt::format("cannot read metadata file '{}'", file.string()));
    }
    std::stringstream buf;
    buf << in.rdbuf();

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::MalformedMetadata,
                    fmt::format("{}: invalid JSON at byte {}: {}", file.string(), e.byte, e.what()));
    }
    if (!doc.is_array()) {
        throw Error(ErrorKind::MalformedMetadata,
                    fmt::format("{}: top-level value must be an array of records", file.string()));
    }

    std::map<std::string, ProjectMetadata> out;
    for (size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        auto fail = [&](std::string_view what) {
            throw Error(ErrorKind::MalformedMetadata,
                        fmt::format("{}: record {}: {}", file.string(), i, what));
        };
        if (!rec.is_object()) fail("record is not an object");
        auto id = rec.find("project_id");
        if (id == rec.end() || !id->is_string() || id->get<std::string>().empty()) {
            fail("missing or empty string field 'project_id'");
        }
        ProjectMetadata meta;
        auto field = [&](const char* key, std::string& dst) {
            auto it = rec.find(key);
            if (it == rec.end() || it->is_null()) return;
            if (!it->is_string()) fail(fmt::format("field '{}' must be a string", key));
            dst = it->get<std::string>();
        };
        field("market", meta.market);
        field("category", meta.category);
        field("language", meta.declared_language);
        const auto key = id->get<std::string>();
        if (out.count(key) != 0) fail(fmt::format("duplicate project_id '{}'", key));
        out.emplace(key, std::move(meta));
    }
    return out;
}

std::vector<ProjectDescriptor> discover_projects(const fs::path& root, bool corpus_mode,
                                                 const std::optional<fs::path>& metadata_file) {
    std::error_code ec;
    if (!fs::exists(root, ec) || !fs::is_directory(root, ec)) {
        throw Error(ErrorKind::NonexistentRoot,
                    fmt::format("target '{}' does not exist or is not a directory", root.string()));
    }

    std::map<std::string, ProjectMetadata> metadata;
    if (metadata_file) metadata = load_metadata(*metadata_file);

    auto make = [&](const fs::path& dir) {
        ProjectDescriptor d;
        d.root_path = dir;
        d.project_id = dir.filename().string();
        if (d.project_id.empty() || d.project_id == ".") {
            d.project_id = fs::weakly_canonical(dir, ec).filename().string();
        }
        if (auto it = metadata.find(d.project_id); it != metadata.end()) d.metadata = it->second;
        return d;
    };

    std::vector<ProjectDescriptor> out;
    if (!corpus_mode) {
        out.push_back(make(root));
        return out;
    }
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        if (entry.is_directory(ec)) out.push_back(make(entry.path()));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.project_id < b.project_id; });
    return out;
}

Enumeration enumerate_source_files(const ProjectDescriptor& project) {
    Enumeration result;
    std::error_code ec;
    const fs::path root = project.root_path;

    std::vector<fs::path> candidates;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) {
        result.warnings.push_back(fmt::format("cannot walk '{}': {}", root.string(), ec.message()));
        return result;
    }
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            result.warnings.push_back(fmt::format("walk error under '{}': {}", root.string(), ec.message()));
            ec.clear();
            continue;
        }
        const auto& entry = *it;
        if (entry.is_symlink(ec)) {
            // Symlinks may point outside the project root.
            if (entry.is_directory(ec)) it.disable_recursion_pending();
            continue;
        }
        if (entry.is_directory(ec)) {
            if (is_skipped_directory(entry.path().filename().string())) it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file(ec)) continue;
        if (detect_language(entry.path(), {}) == Language::Unknown) continue;
        candidates.push_back(entry.path());
    }

    for (const auto& path : candidates) {
        const auto rel = generic_relative(path, root);
        const auto size = fs::file_size(path, ec);
        if (ec) {
            result.warnings.push_back(fmt::format("{}: cannot stat: {}", rel, ec.message()));
            ec.clear();
            continue;
        }
        if (size > kMaxSourceBytes) {
            result.warnings.push_back(fmt::format("{}: skipped, {} bytes exceeds size cap", rel, size));
            continue;
        }
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            result.warnings.push_back(fmt::format("{}: unreadable", rel));
            continue;
        }
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (!valid_utf8(content)) {
            result.warnings.push_back(fmt::format("{}: skipped, not valid UTF-8", rel));
            continue;
        }
        if (content.rfind("\xEF\xBB\xBF", 0) == 0) content.erase(0, 3);

        SourceFile file;
        file.path = path;
        file.relative_path = rel;
        file.language = detect_language(path, content);
        file.size_bytes = size;
        file.content = std::move(content);
        result.files.push_back(std::move(file));
    }

    std::sort(result.files.begin(), result.files.end(),
              [](const auto& a, const auto& b) { return a.relative_path < b.relative_path; });
    return result;
}

LanguageLabel majority_language(const std::vector<SourceFile>& files) {
    std::array<int, 3> counts{};
    for (const auto& f : files) {
        switch (f.language) {
            case Language::Python: ++counts[0]; break;
            case Language::JavaScript: ++counts[1]; break;
            case Language::TypeScript: ++counts[2]; break;
            case Language::Unknown: break;
        }
    }
    const auto best = std::max_element(counts.begin(), counts.end());
    if (*best == 0) return {};
    const auto n = std::count(counts.begin(), counts.end(), *best);
    static constexpr std::array<Language, 3> kOrder = {Language::Python, Language::JavaScript,
                                                       Language::TypeScript};
    return {kOrder[static_cast<size_t>(best - counts.begin())], n > 1};
}

}  // namespace cryptaudit

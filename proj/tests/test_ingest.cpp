#include "fixtures.hpp"

#include "cryptaudit/error.hpp"
#include "cryptaudit/ingest.hpp"

#include <doctest.h>

using namespace cryptaudit;
using fixtures::TempDir;

TEST_CASE("detect_language maps extensions") {
    CHECK(detect_language("tool.py", "") == Language::Python);
    CHECK(detect_language("index.ts", "") == Language::TypeScript);
    CHECK(detect_language("view.tsx", "") == Language::TypeScript);
    CHECK(detect_language("a.mjs", "") == Language::JavaScript);
    CHECK(detect_language("a.cjs", "") == Language::JavaScript);
    CHECK(detect_language("b.js", "") == Language::JavaScript);
    CHECK(detect_language("Makefile", "") == Language::Unknown);
    CHECK(detect_language("README.md", "#!/usr/bin/env python") == Language::Unknown);
}

TEST_CASE("discover_projects in single and corpus mode") {
    TempDir t;
    t.write("corpus/zeta/a.py", "x = 1\n");
    t.write("corpus/alpha/a.js", "f()\n");
    t.write("corpus/mid/a.ts", "f()\n");

    auto single = discover_projects(t.path() / "corpus" / "alpha", false, std::nullopt);
    REQUIRE(single.size() == 1);
    CHECK(single[0].project_id == "alpha");
    CHECK_FALSE(single[0].metadata.has_value());

    auto corpus = discover_projects(t.path() / "corpus", true, std::nullopt);
    REQUIRE(corpus.size() == 3);
    CHECK(corpus[0].project_id == "alpha");
    CHECK(corpus[1].project_id == "mid");
    CHECK(corpus[2].project_id == "zeta");
    for (const auto& p : corpus) CHECK_FALSE(p.metadata.has_value());

    // Unchanged tree, same answer.
    auto again = discover_projects(t.path() / "corpus", true, std::nullopt);
    REQUIRE(again.size() == corpus.size());
    for (size_t i = 0; i < again.size(); ++i) CHECK(again[i].root_path == corpus[i].root_path);
}

TEST_CASE("metadata joins by directory name") {
    TempDir t;
    const char* names[] = {"p1", "p2", "p3", "p4", "p5"};
    for (const char* n : names) t.write(std::string("corpus/") + n + "/main.py", "print(1)\n");
    const auto meta = t.write("meta.json", R"([
      {"project_id": "p1", "market": "Smithery", "category": "Developer Tools", "language": "Python"},
      {"project_id": "p2", "market": "Mcpmarket", "category": "Data Science & ML", "language": "Python"},
      {"project_id": "p3", "market": "Glama", "category": "Security & Testing", "language": "Python"},
      {"project_id": "p4", "market": "Smithery", "category": "Developer Tools", "language": "Python", "stars": 4},
      {"project_id": "p5", "market": "Mcpmarket", "category": "Finance", "language": "Python"},
      {"project_id": "elsewhere", "market": "x", "category": "y", "language": "Go"}
    ])");
    auto corpus = discover_projects(t.path() / "corpus", true, meta);
    REQUIRE(corpus.size() == 5);
    const char* categories[] = {"Developer Tools", "Data Science & ML", "Security & Testing", "Developer Tools",
                                "Finance"};
    for (size_t i = 0; i < 5; ++i) {
        REQUIRE(corpus[i].metadata.has_value());
        CHECK(corpus[i].metadata->category == categories[i]);
    }
    CHECK(corpus[0].metadata->market == "Smithery");
}

TEST_CASE("discovery errors") {
    TempDir t;
    CHECK_THROWS_AS(discover_projects(t.path() / "missing", false, std::nullopt), Error);
    try {
        discover_projects(t.path() / "missing", false, std::nullopt);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonexistentRoot);
    }

    t.write("corpus/p/a.py", "");
    const auto bad = t.write("bad.json", R"([{"project_id": "p"}, {"market": "x"}])");
    try {
        discover_projects(t.path() / "corpus", true, bad);
        FAIL("expected MalformedMetadata");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MalformedMetadata);
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
    const auto not_json = t.write("nj.json", "{not json");
    CHECK_THROWS_AS(load_metadata(not_json), Error);
}

TEST_CASE("enumerate_source_files filters and sorts") {
    TempDir t;
    t.write("p/b.js", "f()\n");
    t.write("p/a.py", "f()\n");
    t.write("p/README.md", "# hi\n");
    t.write("p/src/deep/c.ts", "f()\n");
    t.write("p/src/d.mjs", "f()\n");
    t.write("p/node_modules/x.js", "f()\n");
    t.write("p/.git/hooks/h.py", "f()\n");
    t.write("p/__pycache__/m.py", "f()\n");
    t.write("p/venv/lib/s.py", "f()\n");
    t.write("p/dist/bundle.js", "f()\n");

    ProjectDescriptor d{t.path() / "p", "p", std::nullopt};
    const auto files = enumerate_source_files(d).files;
    REQUIRE(files.size() == 4);
    CHECK(files[0].relative_path == "a.py");
    CHECK(files[1].relative_path == "b.js");
    CHECK(files[2].relative_path == "src/d.mjs");
    CHECK(files[3].relative_path == "src/deep/c.ts");
    for (const auto& f : files) {
        CHECK(f.language == detect_language(f.path, f.content));
        CHECK(f.language != Language::Unknown);
        CHECK(f.size_bytes == f.content.size());
        // Never outside the root.
        CHECK(fs::relative(f.path, d.root_path).string().rfind("..", 0) != 0);
    }
}

TEST_CASE("node_modules-only project has no sources") {
    TempDir t;
    t.write("p/node_modules/x.js", "f()\n");
    ProjectDescriptor d{t.path() / "p", "p", std::nullopt};
    CHECK(enumerate_source_files(d).files.empty());
}

TEST_CASE("oversized and undecodable files are skipped with a warning") {
    TempDir t;
    t.write("p/big.py", std::string(kMaxSourceBytes + 1, 'x'));
    t.write("p/bin.py", std::string("\xff\xfe\x00" "bad", 6));
    t.write("p/ok.py", "f()\n");
    ProjectDescriptor d{t.path() / "p", "p", std::nullopt};
    const auto e = enumerate_source_files(d);
    REQUIRE(e.files.size() == 1);
    CHECK(e.files[0].relative_path == "ok.py");
    CHECK(e.warnings.size() == 2);
}

TEST_CASE("majority language with tie flag") {
    std::vector<SourceFile> files = {fixtures::source("a.py", ""), fixtures::source("b.py", ""),
                                     fixtures::source("c.ts", "")};
    auto l = majority_language(files);
    CHECK(l.language == Language::Python);
    CHECK_FALSE(l.tie);
    files.push_back(fixtures::source("d.ts", ""));
    l = majority_language(files);
    CHECK(l.language == Language::Python);
    CHECK(l.tie);
}

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

#include "cryptaudit/dependency.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace cryptaudit;
using fixtures::default_catalog;

namespace {

IrUnit unit(const std::string& id, const std::string& name, int line, std::vector<Argument> args,
            std::optional<std::string> produced = std::nullopt, const std::string& file = "m.py") {
    IrUnit u;
    u.unit_id = id;
    u.call_name = name;
    u.file = file;
    u.line = line;
    u.scope = "<module>";
    u.arguments = std::move(args);
    u.produced_as = std::move(produced);
    if (u.produced_as) u.parent_context = ParentContext::AssignmentRhs;
    return u;
}

Argument var(const std::string& v, int pos = 0) { return {pos, ArgTag::Variable, v, std::nullopt}; }
Argument lit(const std::string& v, int pos = 0) { return {pos, ArgTag::Constant, v, std::nullopt}; }

std::set<DepEdge> edge_set(const DependencyGraph& g) { return {g.edges().begin(), g.edges().end()}; }

}  // namespace

TEST_CASE("must edges from def-use") {
    const std::vector<IrUnit> units = {
        unit("m.py#0", "get_random_bytes", 1, {lit("16")}, "salt"),
        unit("m.py#1", "PBKDF2", 2, {var("password"), var("salt", 1)}),
    };
    const auto edges = build_must_edges(units);
    REQUIRE(edges.size() == 1);
    CHECK(edges[0] == DepEdge{"m.py#0", "m.py#1", EdgeKind::Must, "salt"});

    CHECK(build_must_edges({unit("m.py#0", "f", 1, {lit("1")}), unit("m.py#1", "g", 2, {})}).empty());

    const std::vector<IrUnit> chain = {
        unit("m.py#0", "f", 1, {}, "x"),
        unit("m.py#1", "g", 2, {var("x")}, "y"),
        unit("m.py#2", "h", 3, {var("y")}),
    };
    const auto ce = build_must_edges(chain);
    CHECK(std::set<DepEdge>(ce.begin(), ce.end()) ==
          std::set<DepEdge>{{"m.py#0", "m.py#1", EdgeKind::Must, "x"}, {"m.py#1", "m.py#2", EdgeKind::Must, "y"}});
}

TEST_CASE("nearest same-file definition wins, other files all count") {
    const std::vector<IrUnit> units = {
        unit("m.py#0", "f", 1, {}, "k"),
        unit("m.py#1", "g", 5, {}, "k"),
        unit("m.py#2", "use", 9, {var("k")}),
        unit("m.py#3", "late", 12, {}, "k"),
        unit("o.py#0", "other", 1, {}, "k", "o.py"),
    };
    const auto project = build_must_edges(units, MustScope::Project);
    CHECK(std::set<DepEdge>(project.begin(), project.end()) ==
          std::set<DepEdge>{{"m.py#1", "m.py#2", EdgeKind::Must, "k"}, {"o.py#0", "m.py#2", EdgeKind::Must, "k"}});
    const auto file = build_must_edges(units, MustScope::File);
    CHECK(file == std::vector<DepEdge>{{"m.py#1", "m.py#2", EdgeKind::Must, "k"}});
    // Sorted by (from, to).
    CHECK(std::is_sorted(project.begin(), project.end()));
}

TEST_CASE("fingerprints") {
    const auto& c = default_catalog();
    auto fp = [&](std::vector<Argument> args) { return extract_fingerprint(unit("m.py#0", "f", 1, std::move(args)), &c); };
    CHECK(fp({lit("user.db")}) == ResourceFingerprint{"path", "user.db"});
    CHECK(fp({lit("User.DB ")}) == ResourceFingerprint{"path", "user.db"});
    CHECK_FALSE(fp({lit("16"), lit("3.5")}).has_value());
    CHECK(fp({lit("HTTPS://Api.Example.com/V1")}) == ResourceFingerprint{"url", "https://api.example.com/v1"});
    CHECK(fp({lit("/tmp/Out.bin")}) == ResourceFingerprint{"path", "/tmp/out.bin"});
    CHECK(fp({lit("hello world"), lit("data/x.json")}) == ResourceFingerprint{"path", "data/x.json"});
    CHECK_FALSE(fp({var("user.db")}).has_value());
    CHECK_FALSE(fp({lit("   ")}).has_value());
    const auto arn = fp({lit("arn:aws:s3:::my-bucket")});
    REQUIRE(arn.has_value());
    CHECK(arn->kind == "identifier");
}

TEST_CASE("may edges need a risky pair and a shared resource") {
    const auto& c = default_catalog();
    const std::vector<IrUnit> units = {
        unit("m.py#0", "encrypt", 1, {var("data"), var("key", 1)}),
        unit("m.py#1", "upload", 2, {lit("user.db")}),
        unit("m.py#2", "encrypt", 3, {lit("user.db")}),
        unit("m.py#3", "format_table", 4, {lit("user.db")}),
    };
    const auto edges = build_may_edges(units, c);
    CHECK(std::set<DepEdge>(edges.begin(), edges.end()) ==
          std::set<DepEdge>{{"m.py#2", "m.py#1", EdgeKind::May, "user.db"}});

    const std::vector<IrUnit> derive = {
        unit("m.py#0", "get_key", 1, {var("password")}, "key"),
        unit("m.py#1", "encrypt_cbc", 5, {var("key"), var("data", 1)}),
    };
    const auto d = build_may_edges(derive, c);
    CHECK(d == std::vector<DepEdge>{{"m.py#0", "m.py#1", EdgeKind::May, "key"}});
}

TEST_CASE("build_graph basics") {
    const auto& c = default_catalog();
    const auto empty = build_graph({}, c);
    CHECK(empty.nodes().empty());
    CHECK(empty.edges().empty());

    // x = f(x) must not point at itself.
    const auto self = build_graph({unit("m.py#0", "f", 1, {var("x")}, "x"), unit("m.py#1", "f", 2, {var("x")}, "x")}, c);
    for (const auto& e : self.edges()) CHECK(e.from != e.to);
    CHECK(self.unit("m.py#1") != nullptr);
    CHECK(self.index_of("nope") == -1);
    CHECK(self.out_edges("nope").empty());
}

TEST_CASE("must/may fixture graph") {
    const auto a = fixtures::analyze("key_derivation");
    int must = 0;
    bool may_key = false;
    for (const auto& e : a.graph.edges()) {
        if (e.kind == EdgeKind::Must) {
            ++must;
            CHECK(e.witness == "salt");
        } else {
            may_key = may_key || e.witness == "key";
        }
    }
    CHECK(must == 1);
    CHECK(may_key);
}

TEST_CASE("property: build_graph equals the brute-force oracle") {
    const auto& c = default_catalog();
    std::mt19937 rng(20240611);
    int must = 0, may_name = 0, may_fp = 0;
    for (int round = 0; round < 300; ++round) {
        const auto units = synthetic::random_units(rng, 20);
        for (auto scope : {MustScope::Project, MustScope::File}) {
            const auto g = build_graph(units, c, scope);
            CAPTURE(round);
            REQUIRE(edge_set(g) == oracle::brute_force_edges(units, c, scope));
            for (const auto& e : g.edges()) {
                if (e.kind == EdgeKind::Must) ++must;
                else if (e.witness.find('.') != std::string::npos || e.witness.find('/') != std::string::npos) ++may_fp;
                else ++may_name;
            }
        }
    }
    // The generator must exercise every edge source.
    CHECK(must > 100);
    CHECK(may_name > 100);
    CHECK(may_fp > 10);
}

TEST_CASE("property: graph invariants") {
    const auto& c = default_catalog();
    std::mt19937 rng(99);
    for (int round = 0; round < 200; ++round) {
        const auto units = synthetic::random_units(rng, 20);
        const auto g = build_graph(units, c);
        std::set<DepEdge> seen;
        for (const auto& e : g.edges()) {
            CHECK(g.unit(e.from) != nullptr);
            CHECK(g.unit(e.to) != nullptr);
            CHECK(e.from != e.to);
            CHECK(seen.insert(e).second);
            if (e.kind == EdgeKind::Must) {
                CHECK(g.unit(e.from)->produced_as == std::optional<std::string>(e.witness));
                bool uses = false;
                for (const auto& a : g.unit(e.to)->arguments) uses = uses || (a.tag == ArgTag::Variable && a.value == e.witness);
                CHECK(uses);
            } else {
                CHECK(c.is_risky(semantic_category(*g.unit(e.from), c), semantic_category(*g.unit(e.to), c)));
            }
        }
        for (const auto& n : g.nodes()) {
            for (size_t i : g.out_edges(n.unit_id)) CHECK(g.edges()[i].from == n.unit_id);
            for (size_t i : g.in_edges(n.unit_id)) CHECK(g.edges()[i].to == n.unit_id);
        }
    }
}

TEST_CASE("property: adding a unit never removes an edge") {
    const auto& c = default_catalog();
    std::mt19937 rng(5);
    for (int round = 0; round < 100; ++round) {
        auto units = synthetic::random_units(rng, 12);
        const auto before = edge_set(build_graph(units, c, MustScope::File));
        auto extra = synthetic::random_units(rng, 1).front();
        extra.unit_id = "z.py#0";
        extra.file = "z.py";
        units.push_back(extra);
        // A new unit in its own file cannot shadow a same-file definition.
        const auto after = edge_set(build_graph(units, c, MustScope::File));
        for (const auto& e : before) CHECK(after.count(e) == 1);
    }
}

TEST_CASE("graph JSON shape") {
    const auto a = fixtures::analyze("key_derivation");
    const auto doc = nlohmann::json::parse(graph_to_json(a.graph));
    CHECK(doc["nodes"].size() == a.graph.nodes().size());
    CHECK(doc["edges"].size() == a.graph.edges().size());
    for (const auto& e : doc["edges"]) {
        CHECK(e.contains("from"));
        CHECK(e.contains("to"));
        CHECK((e["kind"] == "must" || e["kind"] == "may"));
        CHECK(e.contains("witness"));
    }
}

#include "fixtures.hpp"
#include "synthetic.hpp"

#include "cryptaudit/ast.hpp"
#include "cryptaudit/error.hpp"
#include "cryptaudit/ir.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <set>

using namespace cryptaudit;
using fixtures::source;

namespace {

std::vector<IrUnit> lower(const std::string& name, const std::string& code) { return lower_file(source(name, code)).units; }

size_t count_calls(const ast::Node& n) {
    size_t c = n.kind == ast::NodeKind::Call ? 1 : 0;
    for (const auto& ch : n.children) c += count_calls(*ch);
    return c;
}

bool parents_consistent(const ast::Node& n) {
    for (const auto& ch : n.children) {
        if (ch->parent != &n || !parents_consistent(*ch)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("parse_to_ast builds parent links") {
    auto h = ast::parse_to_ast(source("m.py", "x = 1\n"));
    CHECK(h.root().parent == nullptr);
    CHECK(parents_consistent(h.root()));
    CHECK_FALSE(h.partial());
    const ast::Node* assign = nullptr;
    ast::walk(h.root(), [&](const ast::Node& n) {
        if (n.kind == ast::NodeKind::Assign) assign = &n;
    });
    REQUIRE(assign != nullptr);
    const ast::Node* literal = assign->children.back().get();
    CHECK(literal->kind == ast::NodeKind::Number);
    CHECK(literal->parent == assign);

    auto s = ast::parse_to_ast(source("m.py", "salt = get_random_bytes(16)\n"));
    const ast::Node* call = nullptr;
    ast::walk(s.root(), [&](const ast::Node& n) {
        if (n.kind == ast::NodeKind::Call) call = &n;
    });
    REQUIRE(call != nullptr);
    CHECK(call->parent->kind == ast::NodeKind::Assign);
}

TEST_CASE("degraded mode on syntax errors") {
    auto h = ast::parse_to_ast(source("bad.py", "def f(:\n    pass\nhashlib.md5(b'x')\n"));
    CHECK(h.partial());
    CHECK(parents_consistent(h.root()));
    const FileIr ir = lower_file(source("bad.py", "def f(:\n    pass\nhashlib.md5(b'x')\n"));
    CHECK(ir.partial);
    bool found = false;
    for (const auto& u : ir.units) found = found || u.call_name == "hashlib.md5";
    CHECK(found);

    const FileIr js = lower_file(source("bad.js", "function (a, {\ncrypto.createHash('md5');\n"));
    CHECK(js.partial);
}

TEST_CASE("unsupported language") {
    SourceFile f = source("notes.txt", "hello");
    CHECK_THROWS_AS(ast::parse_to_ast(f), Error);
}

TEST_CASE("extract_ir reference snippets") {
    auto u = lower("k.py", "salt = get_random_bytes(16)\n");
    REQUIRE(u.size() == 1);
    CHECK(u[0].call_name == "get_random_bytes");
    CHECK(u[0].produced_as == std::optional<std::string>("salt"));
    CHECK(u[0].parent_context == ParentContext::AssignmentRhs);
    REQUIRE(u[0].arguments.size() == 1);
    CHECK(u[0].arguments[0].tag == ArgTag::Constant);
    CHECK(u[0].arguments[0].value == "16");
    CHECK(u[0].scope == "<module>");
    CHECK(u[0].line == 1);

    auto h = lower("h.js", "crypto.createHash(\"md5\")\n");
    REQUIRE(h.size() == 1);
    CHECK(h[0].call_name == "crypto.createHash");
    CHECK(h[0].arguments[0].tag == ArgTag::Constant);
    CHECK(h[0].arguments[0].value == "md5");
    CHECK(h[0].parent_context == ParentContext::ExpressionStatement);
    CHECK_FALSE(h[0].produced_as.has_value());

    CHECK(lower("e.py", "").empty());
    CHECK(lower("e.ts", "").empty());
}

TEST_CASE("argument classification") {
    auto u = lower("a.py",
                   "def f(key, data):\n"
                   "    g(16, key, md5(data), [1, 'a'], {'k': v}, a + b, f'{key}x', mode='x', flag=True)\n");
    REQUIRE(u.size() == 2);
    const IrUnit& g = u[0].call_name == "g" ? u[0] : u[1];
    REQUIRE(g.arguments.size() == 9);
    CHECK(g.scope == "f");
    CHECK(g.arguments[0].tag == ArgTag::Constant);
    CHECK(g.arguments[1].tag == ArgTag::Variable);
    CHECK(g.arguments[1].value == "key");
    CHECK(g.arguments[2].tag == ArgTag::FunctionReturn);
    CHECK(g.arguments[2].value == "md5");
    CHECK(g.arguments[3].tag == ArgTag::ListLiteral);
    REQUIRE(g.arguments[3].element_tags.has_value());
    CHECK(*g.arguments[3].element_tags == std::vector<ArgTag>{ArgTag::Constant, ArgTag::Constant});
    CHECK(g.arguments[4].tag == ArgTag::DictLiteral);
    REQUIRE(g.arguments[4].element_tags.has_value());
    CHECK(*g.arguments[4].element_tags == std::vector<ArgTag>{ArgTag::Variable});
    CHECK(g.arguments[5].tag == ArgTag::Variable);
    CHECK(g.arguments[5].value.rfind(std::string(kExprPrefix), 0) == 0);
    CHECK(g.arguments[6].tag == ArgTag::Variable);
    CHECK(g.arguments[6].value.rfind(std::string(kExprPrefix), 0) == 0);
    CHECK(g.arguments[7].position == ArgPosition(std::string("mode")));
    CHECK(g.arguments[7].value == "x");
    CHECK(g.arguments[8].tag == ArgTag::Constant);
    CHECK(g.arguments[0].position == ArgPosition(0));

    // Same structure, same digest.
    auto again = lower("a.py", "h(a + b)\nh(a  +  b)\n");
    REQUIRE(again.size() == 2);
    CHECK(again[0].arguments[0].value == again[1].arguments[0].value);
}

TEST_CASE("string constants are unescaped") {
    auto u = lower("s.py", "f('a\\'b', \"tab\\t\", b'\\x00k')\n");
    REQUIRE(u.size() == 1);
    CHECK(u[0].arguments[0].value == "a'b");
    CHECK(u[0].arguments[1].value == "tab\t");
    auto j = lower("s.js", "f('it\\'s', `plain`)\n");
    REQUIRE(j.size() == 1);
    CHECK(j[0].arguments[0].value == "it's");
    CHECK(j[0].arguments[1].tag == ArgTag::Constant);
    CHECK(j[0].arguments[1].value == "plain");
}

TEST_CASE("chained calls and import aliases") {
    auto u = lower("c.ts", "import crypto from 'crypto';\nconst t = crypto.createHash('md5').update(x).digest('hex');\n");
    REQUIRE(u.size() == 3);
    std::vector<std::string> names;
    for (const auto& x : u) names.push_back(x.call_name);
    CHECK(std::find(names.begin(), names.end(), "crypto.createHash") != names.end());
    CHECK(std::find(names.begin(), names.end(), "crypto.createHash().update") != names.end());
    CHECK(std::find(names.begin(), names.end(), "crypto.createHash().update().digest") != names.end());

    auto p = lower("p.py", "import hashlib as h\nfrom Crypto.Cipher import AES\nh.md5(x)\nAES.new(k, AES.MODE_ECB)\n");
    REQUIRE(p.size() == 2);
    CHECK(p[0].call_name == "hashlib.md5");
    CHECK(p[1].call_name == "Crypto.Cipher.AES.new");

    auto r = lower("r.js", "const { createHash } = require('crypto');\ncreateHash('sha1');\n");
    bool found = false;
    for (const auto& x : r) found = found || x.call_name == "crypto.createHash";
    CHECK(found);
}

TEST_CASE("scopes and produced_as") {
    auto u = lower("s.py",
                   "class C:\n"
                   "    def m(self):\n"
                   "        def inner():\n"
                   "            k = derive()\n"
                   "        return k\n"
                   "self.x = f()\n"
                   "a, b = g()\n"
                   "return_value = [h()]\n");
    REQUIRE(u.size() == 4);
    CHECK(u[0].scope == "C::m::inner");
    CHECK(u[0].produced_as == std::optional<std::string>("k"));
    // Only simple-name targets produce a name.
    CHECK_FALSE(u[1].produced_as.has_value());
    CHECK_FALSE(u[2].produced_as.has_value());
    CHECK_FALSE(u[3].produced_as.has_value());
    CHECK(u[3].parent_context != ParentContext::AssignmentRhs);
}

TEST_CASE("IR invariants on fixtures") {
    for (const auto& entry : fs::recursive_directory_iterator(fixtures::root())) {
        if (!entry.is_regular_file()) continue;
        const Language lang = detect_language(entry.path(), "");
        if (lang == Language::Unknown) continue;
        std::ifstream in(entry.path());
        std::string code((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        SourceFile f = source(entry.path().filename().string(), code);
        CAPTURE(entry.path());
        auto handle = ast::parse_to_ast(f);
        const auto units = extract_ir(handle, f);
        CHECK(units.size() == count_calls(handle.root()));
        std::set<std::string> ids;
        for (const auto& u : units) {
            CHECK_FALSE(u.call_name.empty());
            CHECK(u.line >= 1);
            CHECK(u.column >= 0);
            CHECK(ids.insert(u.unit_id).second);
            CHECK(u.produced_as.has_value() == (u.parent_context == ParentContext::AssignmentRhs));
            if (u.produced_as) {
                const auto& symbols = handle.symbols();
                int scope = -1;
                for (size_t i = 0; i < symbols.scope_count(); ++i) {
                    if (symbols.scope(static_cast<int>(i)).chain == u.scope) scope = static_cast<int>(i);
                }
                REQUIRE(scope >= 0);
                const auto* b = symbols.lookup(scope, *u.produced_as, {u.line, 1 << 20});
                REQUIRE(b != nullptr);
                CHECK(b->pos.line == u.line);
            }
            for (const auto& a : u.arguments) CHECK(parse_arg_tag(to_string(a.tag)) == a.tag);
        }
        CHECK(serialize_ir(units) == serialize_ir(extract_ir(ast::parse_to_ast(f), f)));
    }
}

TEST_CASE("serialize_ir golden and round trip") {
    CHECK(serialize_ir({}) == "[]");

    IrUnit u;
    u.unit_id = "k.py#0";
    u.call_name = "get_random_bytes";
    u.file = "k.py";
    u.line = 3;
    u.column = 11;
    u.scope = "secure_derive_key";
    u.produced_as = "salt";
    u.parent_context = ParentContext::AssignmentRhs;
    u.arguments.push_back({0, ArgTag::Constant, "16", std::nullopt});
    u.arguments.push_back({std::string("opts"), ArgTag::ListLiteral, "[\"a\"]", std::vector<ArgTag>{ArgTag::Constant}});
    const std::string golden =
        R"([{"unit_id":"k.py#0","call_name":"get_random_bytes","file":"k.py","line":3,"column":11,)"
        R"("scope":"secure_derive_key","produced_as":"salt","parent_context":"assignment_rhs","arguments":[)"
        R"({"position":0,"tag":"constant","value":"16","element_tags":null},)"
        R"({"position":"opts","tag":"list_literal","value":"[\"a\"]","element_tags":["constant"]}]}])";
    CHECK(nlohmann::json::parse(serialize_ir({u})) == nlohmann::json::parse(golden));

    std::mt19937 rng(7);
    std::vector<IrUnit> units;
    while (units.size() < 20) {
        auto more = synthetic::random_units(rng, 20);
        units.insert(units.end(), more.begin(), more.end());
    }
    units.resize(20);
    std::stable_sort(units.begin(), units.end(), [](const IrUnit& a, const IrUnit& b) {
        return std::tie(a.file, a.line, a.column) < std::tie(b.file, b.line, b.column);
    });
    const std::string text = serialize_ir(units);
    CHECK(deserialize_ir(text) == units);
    CHECK(serialize_ir(deserialize_ir(text)) == text);
}

TEST_CASE("deserialize_ir rejects malformed documents") {
    CHECK_THROWS_AS(deserialize_ir("{"), Error);
    CHECK_THROWS_AS(deserialize_ir(R"([{"unit_id": 3}])"), Error);
    CHECK_THROWS_AS(deserialize_ir(
                        R"([{"unit_id":"a#0","call_name":"f","file":"a","line":1,"column":0,"scope":"<module>",)"
                        R"("produced_as":null,"parent_context":"assignment_rhs","arguments":[)"
                        R"({"position":0,"tag":"bogus","value":"x","element_tags":null}]}])"),
                    Error);
}

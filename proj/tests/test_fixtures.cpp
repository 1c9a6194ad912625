#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>

using namespace cryptaudit;

namespace {

const IrUnit* unit_named(const ProjectAnalysis& a, const std::string& call_name) {
    for (const auto& u : a.graph.nodes()) {
        if (u.call_name == call_name) return &u;
    }
    return nullptr;
}

}  // namespace

TEST_CASE("listing fixtures produce exactly their labeled findings") {
    for (const auto& [name, expected] : fixtures::labeled()) {
        CAPTURE(name);
        auto want = expected;
        std::sort(want.begin(), want.end());
        const auto a = fixtures::analyze(name);
        CHECK(fixtures::observed(a.report.findings) == want);
        CHECK(a.report.partial_files.empty());
        CHECK(a.warnings.empty());
        const bool misuse = std::any_of(want.begin(), want.end(), [](const auto& e) { return e.severity == Severity::Misuse; });
        CHECK(a.report.misuse == misuse);
    }
}

TEST_CASE("labels hold under file-scoped def-use as well") {
    for (const auto& [name, expected] : fixtures::labeled()) {
        CAPTURE(name);
        auto want = expected;
        std::sort(want.begin(), want.end());
        CHECK(fixtures::observed(fixtures::analyze(name, AnalysisOptions{all_rules(), MustScope::File, {}})
                                     .report.findings) == want);
    }
}

TEST_CASE("key derivation: must edge on the salt, may edges on the key") {
    const auto a = fixtures::analyze("key_derivation");
    const IrUnit* salt = unit_named(a, "Crypto.Random.get_random_bytes");
    const IrUnit* kdf = unit_named(a, "Crypto.Protocol.KDF.PBKDF2");
    REQUIRE(salt != nullptr);
    REQUIRE(kdf != nullptr);

    int must = 0;
    for (const auto& e : a.graph.edges()) {
        if (e.kind != EdgeKind::Must) continue;
        ++must;
        CHECK(e.from == salt->unit_id);
        CHECK(e.to == kdf->unit_id);
        CHECK(e.witness == "salt");
    }
    CHECK(must == 1);
    CHECK(std::any_of(a.graph.edges().begin(), a.graph.edges().end(),
                      [](const DepEdge& e) { return e.kind == EdgeKind::May && e.witness == "key"; }));

    // The weak derivation is reported behind its may hop; the PBKDF2 path is not.
    const auto& f = a.report.findings.at(0);
    REQUIRE(f.evidence.has_value());
    CHECK(f.evidence->has_may_hop());
    CHECK(f.evidence->sensitivity == Sensitivity::Credential);
    for (const auto& h : f.evidence->hops) CHECK(h.from != kdf->unit_id);
}

TEST_CASE("md5 wrapper: the constructor fires, the wrapper's credential use is missed") {
    const auto a = fixtures::analyze("md5_wrapper");
    REQUIRE(a.report.findings.size() == 1);
    const auto& f = a.report.findings[0];
    CHECK(f.rule_id == RuleId::R3);
    CHECK(f.severity == Severity::Informational);
    CHECK(f.message.find("crypto.createHash") != std::string::npos);
    CHECK_FALSE(a.report.misuse);
    CHECK(a.report.crypto_enabled);
}

TEST_CASE("checksum and password uses of md5 split by context") {
    const auto sum = fixtures::analyze("md5_checksum");
    const auto pwd = fixtures::analyze("md5_password");
    REQUIRE(sum.report.findings.size() == 1);
    REQUIRE(pwd.report.findings.size() == 1);
    CHECK(sum.report.findings[0].severity == Severity::Informational);
    CHECK(pwd.report.findings[0].severity == Severity::Misuse);
    CHECK(sum.report.crypto_enabled);
    CHECK(pwd.report.crypto_enabled);
}

TEST_CASE("clean fixture is crypto-enabled without findings") {
    const auto a = fixtures::analyze("clean");
    CHECK(a.report.findings.empty());
    CHECK(a.report.crypto_enabled);
    CHECK_FALSE(a.report.misuse);
}

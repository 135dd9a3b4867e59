#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "pulp/corpus.hpp"
#include "pulp/runtime.hpp"

using namespace pulp;

namespace {

const std::string kCorpusDir = PULP_CORPUS_DIR;

Manifest the_manifest() { return load_manifest(kCorpusDir + "/manifest.json"); }

const CaseSpec& find_case(const Manifest& m, const std::string& name) {
    auto it = std::find_if(m.cases.begin(), m.cases.end(),
                           [&](const CaseSpec& c) { return c.name == name; });
    REQUIRE(it != m.cases.end());
    return *it;
}

const BenchSpec& find_bench(const Manifest& m, const std::string& name) {
    auto it = std::find_if(m.bench.begin(), m.bench.end(),
                           [&](const BenchSpec& b) { return b.name == name; });
    REQUIRE(it != m.bench.end());
    return *it;
}

}  // namespace

TEST_CASE("resolve_addr handles symbols, offsets and raw integers") {
    ProgramImage image;
    image.symbols = {{"buf", 256}, {"end", 300}};
    CHECK(resolve_addr(image, "buf") == 256);
    CHECK(resolve_addr(image, "buf+8") == 264);
    CHECK(resolve_addr(image, "end-4") == 296);
    CHECK(resolve_addr(image, " buf + 12 ") == 268);
    CHECK(resolve_addr(image, "1024") == 1024);
    CHECK(resolve_addr(image, "0x40") == 64);
    CHECK_THROWS_AS(resolve_addr(image, "nothere"), std::runtime_error);
    CHECK_THROWS_AS(resolve_addr(image, "buf+junk"), std::runtime_error);
}

TEST_CASE("trap_by_name round-trips every cause") {
    for (TrapKind kind : {TrapKind::OutOfBoundAccess, TrapKind::ReturnAddressError,
                          TrapKind::PulpConfigViolation, TrapKind::BoundaryViolation,
                          TrapKind::IllegalInstruction, TrapKind::MisalignedAccess,
                          TrapKind::MemFault}) {
        auto back = trap_by_name(trap_name(kind));
        REQUIRE(back.has_value());
        CHECK(*back == kind);
    }
    CHECK(!trap_by_name("SegFault").has_value());
    CHECK(!trap_by_name("").has_value());
}

TEST_CASE("the shipped manifest parses with its dual expectations intact") {
    Manifest m = the_manifest();
    CHECK(m.cases.size() == 10);
    CHECK(m.bench.size() == 9);

    const CaseSpec& hb = find_case(m, "heartbleed");
    CHECK(hb.with_pulp.outcome == ModeExpect::Outcome::Trap);
    CHECK(hb.with_pulp.trap.cause == TrapKind::OutOfBoundAccess);
    REQUIRE(hb.with_pulp.trap.addr.has_value());
    CHECK(*hb.with_pulp.trap.addr == "request+32");
    CHECK(hb.without_pulp.outcome == ModeExpect::Outcome::Exit);
    REQUIRE(hb.without_pulp.min_sentinel_bytes.has_value());
    CHECK(*hb.without_pulp.min_sentinel_bytes >= 16);
    CHECK(!hb.input_path.empty());

    const CaseSpec& ret = find_case(m, "sard_1295_iquery");
    CHECK(ret.with_pulp.trap.cause == TrapKind::ReturnAddressError);
    REQUIRE(ret.with_pulp.trap.target.has_value());
    CHECK(*ret.with_pulp.trap.target == "gadget");
    REQUIRE(!ret.with_pulp.mem_checks.empty());
    CHECK(ret.with_pulp.mem_checks[0].addr == "pwned");
    CHECK(ret.with_pulp.mem_checks[0].expect == std::vector<uint8_t>{0, 0, 0, 0});
    CHECK(ret.without_pulp.exit_code == 98);

    const BenchSpec& strcpy_b = find_bench(m, "strcpy_micro");
    CHECK(strcpy_b.calls == 10000);
    CHECK(strcpy_b.protects == 20000);
    CHECK(strcpy_b.max_ratio == doctest::Approx(0.15));

    // Both sweep families have enough points for a two-parameter fit.
    int calls_pts = 0, params_pts = 0;
    for (const auto& b : m.bench) {
        calls_pts += b.sweep == "calls";
        params_pts += b.sweep == "params";
    }
    CHECK(calls_pts == 3);
    CHECK(params_pts == 3);
}

TEST_CASE("run_case evaluates both sides of a dual expectation") {
    Manifest m = the_manifest();
    const CaseSpec& hb = find_case(m, "heartbleed");
    ProgramImage image = assemble_case(hb);

    std::vector<nlohmann::json> trace;
    CaseResult on = run_case(hb, image, true, &trace);
    CHECK(on.pass);
    CHECK(on.failures.empty());
    CHECK(on.outcome == RunOutcome::Trapped);
    CHECK(on.trap.kind == TrapKind::OutOfBoundAccess);
    CHECK(on.trap.addr == resolve_addr(image, "request+32"));
    CHECK(on.trace_hash != 0);
    CHECK(!trace.empty());

    CaseResult off = run_case(hb, image, false);
    CHECK(off.pass);
    CHECK(off.outcome == RunOutcome::Exited);
    CHECK(off.trace_hash == 0);  // untraced

    // to_json carries the report contract for both shapes.
    nlohmann::json jon = on.to_json();
    CHECK(jon["outcome"] == "trap");
    CHECK(jon["trap"] == "OutOfBoundAccess");
    CHECK(jon["pass"] == true);
    CHECK(jon.contains("trace_hash"));
    nlohmann::json joff = off.to_json();
    CHECK(joff["outcome"] == "exit");
    CHECK(joff["exit_code"] == 0);
    CHECK(!joff.contains("failures"));
}

TEST_CASE("run_case flags every kind of expectation miss") {
    Manifest m = the_manifest();
    CaseSpec hb = find_case(m, "heartbleed");
    ProgramImage image = assemble_case(hb);

    SUBCASE("wrong exit code") {
        hb.without_pulp.exit_code = 55;
        CaseResult r = run_case(hb, image, false);
        CHECK(!r.pass);
        REQUIRE(!r.failures.empty());
    }
    SUBCASE("sentinel floor not met") {
        hb.without_pulp.min_sentinel_bytes = 100000;
        CaseResult r = run_case(hb, image, false);
        CHECK(!r.pass);
    }
    SUBCASE("wrong trap cause") {
        hb.with_pulp.trap.cause = TrapKind::MemFault;
        CaseResult r = run_case(hb, image, true);
        CHECK(!r.pass);
    }
    SUBCASE("wrong trap address") {
        hb.with_pulp.trap.addr = "request+4";
        CaseResult r = run_case(hb, image, true);
        CHECK(!r.pass);
    }
    SUBCASE("memory witness mismatch") {
        hb.without_pulp.mem_checks.push_back({"request", {9, 9, 9, 9}, false});
        CaseResult r = run_case(hb, image, false);
        CHECK(!r.pass);
    }
    SUBCASE("negated memory witness") {
        // The request buffer definitely does not hold these bytes, so a
        // negated check passes.
        hb.without_pulp.mem_checks.push_back({"request", {9, 9, 9, 9}, true});
        CaseResult r = run_case(hb, image, false);
        CHECK(r.pass);
    }
    SUBCASE("expected trap but the run exits") {
        hb.without_pulp.outcome = ModeExpect::Outcome::Trap;
        CaseResult r = run_case(hb, image, false);
        CHECK(!r.pass);
    }
}

TEST_CASE("return-to-gadget inputs embed the image's own gadget address") {
    // The attack payloads end with the 4-byte forged return target; this
    // pins the payload bytes to the address the assembled image gives the
    // gadget label, so layout drift cannot silently defang the cases.
    Manifest m = the_manifest();
    for (const char* name : {"sard_1291_sig", "sard_1295_iquery"}) {
        const CaseSpec& spec = find_case(m, name);
        ProgramImage image = assemble_case(spec);
        std::vector<uint8_t> input = read_input(spec.input_path);
        REQUIRE(input.size() >= 4);
        uint32_t forged = uint32_t(input[input.size() - 4]) |
                          uint32_t(input[input.size() - 3]) << 8 |
                          uint32_t(input[input.size() - 2]) << 16 |
                          uint32_t(input[input.size() - 1]) << 24;
        CHECK(forged == image.symbols.at("gadget"));
    }
}

TEST_CASE("run_bench checks identity, parity and threshold") {
    Manifest mini;
    mini.dir = kCorpusDir;
    Manifest real = the_manifest();
    mini.bench.push_back(find_bench(real, "zero_call"));
    mini.bench.push_back(find_bench(real, "param_sweep_p1"));

    auto results = run_bench(mini, 1);
    REQUIRE(results.size() == 2);
    const BenchResult& zero = results[0];
    CHECK(zero.ok);
    CHECK(zero.identity_ok);
    CHECK(zero.retired_equal);
    CHECK(zero.config_ratio == 0.0);
    CHECK(zero.with_pulp.counters.config_instructions == 0);
    const BenchResult& p1 = results[1];
    CHECK(p1.ok);
    CHECK(p1.with_pulp.counters.config_instructions ==
          p1.spec.calls * kPerCallConfigCost + p1.spec.protects * kPerProtectConfigCost);

    SUBCASE("declared call counts feed the identity check") {
        mini.bench[1].calls += 1;  // claim one more call than the program makes
        auto broken = run_bench(mini, 1);
        CHECK(!broken[1].identity_ok);
        CHECK(!broken[1].ok);
    }
    SUBCASE("the ratio threshold is strict") {
        mini.bench[1].max_ratio = 1e-9;
        auto broken = run_bench(mini, 1);
        CHECK(broken[1].identity_ok);  // program unchanged
        CHECK(!broken[1].ok);          // threshold now unreachable
    }
    SUBCASE("results do not depend on the job count") {
        auto par = run_bench(mini, 8);
        REQUIRE(par.size() == results.size());
        for (size_t i = 0; i < par.size(); ++i) {
            CHECK(par[i].spec.name == results[i].spec.name);
            CHECK(par[i].config_ratio == results[i].config_ratio);
            CHECK(par[i].with_pulp.final_state_hash == results[i].with_pulp.final_state_hash);
            CHECK(par[i].ok == results[i].ok);
        }
    }
}

TEST_CASE("fit_sweep recovers an exact line and reports residuals") {
    std::vector<BenchResult> synth(3);
    for (int i = 0; i < 3; ++i) {
        synth[i].spec.sweep = "calls";
        synth[i].spec.x = 10.0 * (i + 1);
        synth[i].with_pulp.counters.config_instructions = uint64_t(120 * (i + 1));
    }
    LinearFit fit = fit_sweep(synth, "calls");
    CHECK(fit.points == 3);
    CHECK(fit.slope == doctest::Approx(12.0));
    CHECK(fit.intercept == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.max_residual == doctest::Approx(0.0).epsilon(1e-9));

    LinearFit none = fit_sweep(synth, "params");
    CHECK(none.points == 0);
    CHECK(none.slope == 0.0);

    synth[2].with_pulp.counters.config_instructions = 370;  // 10 above the line
    LinearFit bent = fit_sweep(synth, "calls");
    CHECK(bent.max_residual > 1.0);
}

TEST_CASE("overhead_report aggregates cases, fits and the verdict") {
    Manifest mini;
    mini.dir = kCorpusDir;
    Manifest real = the_manifest();
    mini.bench.push_back(find_bench(real, "param_sweep_p2"));
    mini.bench.push_back(find_bench(real, "param_sweep_p1"));
    mini.bench.push_back(find_bench(real, "param_sweep_p3"));

    auto results = run_bench(mini, 2);
    nlohmann::json report = overhead_report(results);
    CHECK(report["all_ok"] == true);
    CHECK(report["per_call_config_cost"] == 6);
    CHECK(report["per_protect_config_cost"] == 6);
    REQUIRE(report["cases"].size() == 3);
    // Sorted by name regardless of manifest order.
    CHECK(report["cases"][0]["name"] == "param_sweep_p1");
    CHECK(report["cases"][2]["name"] == "param_sweep_p3");
    for (const auto& c : report["cases"]) {
        CHECK(c["ok"] == true);
        CHECK(c["config_identity_ok"] == true);
        CHECK(c["retired_equal_across_modes"] == true);
        CHECK(c["sweep"] == "params");
    }
    // One tuple per call per extra parameter: slope 6 writes / (call*param),
    // 100 calls -> 600 per step in x, intercept the per-call base 600.
    REQUIRE(report["fits"].contains("params"));
    CHECK(report["fits"]["params"]["slope"] == doctest::Approx(600.0));
    CHECK(report["fits"]["params"]["intercept"] == doctest::Approx(600.0));
    CHECK(report["fits"]["params"]["max_residual"] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(!report["fits"].contains("calls"));
}

#include "pulp/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "pulp/assembler.hpp"
#include "pulp/runtime.hpp"
#include "pulp/text.hpp"
#include "pulp/trace.hpp"

namespace pulp {

namespace {

std::string to_hex(uint32_t value) {
    char buf[16];
    snprintf(buf, sizeof buf, "%x", value);
    return buf;
}

std::string join_path(const std::string& dir, const std::string& rel) {
    if (rel.empty() || rel.front() == '/' || dir.empty()) return rel;
    return dir + "/" + rel;
}

std::string dir_of(const std::string& path) {
    size_t slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

ModeExpect parse_expect(const nlohmann::json& j) {
    ModeExpect e;
    const std::string outcome = j.at("outcome").get<std::string>();
    if (outcome == "exit") {
        e.outcome = ModeExpect::Outcome::Exit;
        e.exit_code = j.value("code", 0);
    } else if (outcome == "trap") {
        e.outcome = ModeExpect::Outcome::Trap;
        auto cause = trap_by_name(j.at("cause").get<std::string>());
        if (!cause) throw std::runtime_error("unknown trap cause in manifest");
        e.trap.cause = *cause;
        if (j.contains("pc")) e.trap.pc = j["pc"].get<std::string>();
        if (j.contains("addr")) e.trap.addr = j["addr"].get<std::string>();
        if (j.contains("target")) e.trap.target = j["target"].get<std::string>();
    } else {
        throw std::runtime_error("manifest outcome must be exit or trap");
    }
    if (j.contains("min_sentinel_bytes"))
        e.min_sentinel_bytes = j["min_sentinel_bytes"].get<uint64_t>();
    for (const auto& m : j.value("memory", nlohmann::json::array())) {
        MemCheck check;
        check.addr = m.at("addr").get<std::string>();
        for (const auto& b : m.at("equals")) check.expect.push_back(b.get<uint8_t>());
        check.negate = m.value("negate", false);
        e.mem_checks.push_back(std::move(check));
    }
    return e;
}

void check_outcome(const ModeExpect& expect, const ProgramImage& image, const Machine& m,
                   RunOutcome outcome, CaseResult& result) {
    auto failed = [&result](const std::string& what) { result.failures.push_back(what); };

    if (outcome == RunOutcome::StepLimit) {
        failed("hit the step limit");
        return;
    }
    if (expect.outcome == ModeExpect::Outcome::Exit) {
        if (outcome != RunOutcome::Exited)
            failed(std::string("expected exit, got trap ") + trap_name(m.trap.kind));
        else if (m.exit_code != expect.exit_code)
            failed("exit code " + std::to_string(m.exit_code) + ", expected " +
                   std::to_string(expect.exit_code));
    } else {
        if (outcome != RunOutcome::Trapped) {
            failed("expected a trap, program exited");
        } else {
            if (m.trap.kind != expect.trap.cause)
                failed(std::string("trap ") + trap_name(m.trap.kind) + ", expected " +
                       trap_name(expect.trap.cause));
            auto check_field = [&](const std::optional<std::string>& expr, uint32_t actual,
                                   const char* what) {
                if (!expr) return;
                uint32_t want = resolve_addr(image, *expr);
                if (actual != want)
                    failed(std::string(what) + " 0x" + to_hex(actual) + ", expected " + *expr +
                           " (0x" + to_hex(want) + ")");
            };
            check_field(expect.trap.pc, m.trap.pc, "faulting pc");
            check_field(expect.trap.addr, m.trap.addr, "faulting addr");
            check_field(expect.trap.target, m.trap.target, "faulting target");
        }
    }

    if (expect.min_sentinel_bytes) {
        uint64_t leaked = std::count(m.output.begin(), m.output.end(), kSentinelByte);
        if (leaked < *expect.min_sentinel_bytes)
            failed("output leaked " + std::to_string(leaked) + " sentinel bytes, expected >= " +
                   std::to_string(*expect.min_sentinel_bytes));
    }
    for (const auto& check : expect.mem_checks) {
        uint32_t addr = resolve_addr(image, check.addr);
        bool equal = uint64_t(addr) + check.expect.size() <= m.mem.size() &&
                     std::equal(check.expect.begin(), check.expect.end(), m.mem.begin() + addr);
        if (equal == check.negate)
            failed("memory at " + check.addr + (check.negate ? " equals the forbidden value"
                                                             : " does not match the witness"));
    }
}

}  // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read manifest " + path);
    nlohmann::json j = nlohmann::json::parse(in);

    Manifest manifest;
    manifest.dir = dir_of(path);
    for (const auto& c : j.value("cases", nlohmann::json::array())) {
        CaseSpec spec;
        spec.name = c.at("name").get<std::string>();
        spec.source_path = join_path(manifest.dir, c.at("source").get<std::string>());
        if (c.contains("input"))
            spec.input_path = join_path(manifest.dir, c["input"].get<std::string>());
        spec.note = c.value("note", "");
        spec.max_steps = c.value("max_steps", kDefaultMaxSteps);
        spec.with_pulp = parse_expect(c.at("with_pulp"));
        spec.without_pulp = parse_expect(c.at("without_pulp"));
        manifest.cases.push_back(std::move(spec));
    }
    for (const auto& b : j.value("bench", nlohmann::json::array())) {
        BenchSpec spec;
        spec.name = b.at("name").get<std::string>();
        spec.source_path = join_path(manifest.dir, b.at("source").get<std::string>());
        if (b.contains("input"))
            spec.input_path = join_path(manifest.dir, b["input"].get<std::string>());
        spec.max_steps = b.value("max_steps", kDefaultMaxSteps);
        spec.calls = b.value("calls", 0ull);
        spec.protects = b.value("protects", 0ull);
        spec.config_extra = b.value("config_extra", 0ull);
        spec.max_ratio = b.value("max_ratio", -1.0);
        spec.sweep = b.value("sweep", "");
        spec.x = b.value("x", 0.0);
        manifest.bench.push_back(std::move(spec));
    }
    return manifest;
}

ProgramImage assemble_case(const CaseSpec& spec) { return assemble_file(spec.source_path); }

std::vector<uint8_t> read_input(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read input " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

CaseResult run_case(const CaseSpec& spec, const ProgramImage& image, bool pulp_enabled,
                    std::vector<nlohmann::json>* trace_out) {
    CaseResult result;
    result.name = spec.name;
    result.pulp_enabled = pulp_enabled;

    Machine m = load_image(image);
    m.pulp_enabled = pulp_enabled;
    m.input = read_input(spec.input_path);

    VectorTraceSink sink;
    if (trace_out) {
        m.trace = &sink;
        m.trace_reset_event();
    }
    result.outcome = m.run(spec.max_steps);
    result.exit_code = m.exit_code;
    result.trap = m.trap;
    result.counters = m.counters;
    result.final_state_hash = state_hash(m);
    if (trace_out) {
        result.trace_hash = trace_hash(sink.events);
        *trace_out = std::move(sink.events);
    }

    const ModeExpect& expect = pulp_enabled ? spec.with_pulp : spec.without_pulp;
    check_outcome(expect, image, m, result.outcome, result);
    result.pass = result.failures.empty();
    return result;
}

nlohmann::json CaseResult::to_json() const {
    nlohmann::json j = {{"name", name},
                        {"pulp", pulp_enabled},
                        {"outcome", outcome == RunOutcome::Exited    ? "exit"
                                    : outcome == RunOutcome::Trapped ? "trap"
                                                                     : "step-limit"},
                        {"pass", pass},
                        {"instructions_retired", counters.instructions_retired},
                        {"checks_performed", counters.checks_performed},
                        {"config_instructions", counters.config_instructions},
                        {"state_hash", final_state_hash}};
    if (outcome == RunOutcome::Exited) j["exit_code"] = exit_code;
    if (outcome == RunOutcome::Trapped) {
        j["trap"] = trap_name(trap.kind);
        j["trap_pc"] = trap.pc;
        j["trap_addr"] = trap.addr;
        j["trap_target"] = trap.target;
    }
    if (trace_hash != 0) j["trace_hash"] = trace_hash;
    if (!failures.empty()) j["failures"] = failures;
    return j;
}

std::vector<BenchResult> run_bench(const Manifest& manifest, int jobs) {
    std::vector<BenchResult> results(manifest.bench.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < manifest.bench.size(); i = next.fetch_add(1)) {
            const BenchSpec& spec = manifest.bench[i];
            BenchResult& r = results[i];
            r.spec = spec;
            // Bench entries reuse the case runner with a plain exit-0
            // expectation in both modes.
            CaseSpec as_case;
            as_case.name = spec.name;
            as_case.source_path = spec.source_path;
            as_case.input_path = spec.input_path;
            as_case.max_steps = spec.max_steps;
            ProgramImage image = assemble_file(spec.source_path);
            r.with_pulp = run_case(as_case, image, true);
            r.without_pulp = run_case(as_case, image, false);

            const PerfCounters& on = r.with_pulp.counters;
            const PerfCounters& off = r.without_pulp.counters;
            r.retired_equal = on.instructions_retired == off.instructions_retired;
            const uint64_t expected_config = spec.calls * kPerCallConfigCost +
                                             spec.protects * kPerProtectConfigCost +
                                             spec.config_extra;
            r.identity_ok = on.config_instructions == expected_config &&
                            off.config_instructions == expected_config;
            r.config_ratio = on.instructions_retired == 0
                                 ? 0.0
                                 : double(on.config_instructions) /
                                       double(on.instructions_retired);
            const bool threshold_ok = spec.max_ratio < 0 || r.config_ratio < spec.max_ratio;
            r.ok = r.with_pulp.pass && r.without_pulp.pass && r.retired_equal &&
                   r.identity_ok && threshold_ok;
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(manifest.bench.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

LinearFit fit_sweep(const std::vector<BenchResult>& results, const std::string& sweep) {
    LinearFit fit;
    std::vector<std::pair<double, double>> points;
    for (const auto& r : results)
        if (r.spec.sweep == sweep)
            points.push_back({r.spec.x, double(r.with_pulp.counters.config_instructions)});
    fit.points = static_cast<int>(points.size());
    if (points.size() < 2) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = double(points.size());
    const double denom = n * sxx - sx * sx;
    if (denom == 0) return fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (auto [x, y] : points)
        fit.max_residual = std::max(fit.max_residual,
                                    std::abs(y - (fit.slope * x + fit.intercept)));
    return fit;
}

nlohmann::json overhead_report(const std::vector<BenchResult>& results) {
    std::vector<const BenchResult*> sorted;
    for (const auto& r : results) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const BenchResult* a, const BenchResult* b) { return a->spec.name < b->spec.name; });

    nlohmann::json cases = nlohmann::json::array();
    bool all_ok = true;
    for (const BenchResult* r : sorted) {
        all_ok = all_ok && r->ok;
        nlohmann::json c = {
            {"name", r->spec.name},
            {"instructions_retired", r->with_pulp.counters.instructions_retired},
            {"config_instructions", r->with_pulp.counters.config_instructions},
            {"checks_performed", r->with_pulp.counters.checks_performed},
            {"config_ratio", r->config_ratio},
            {"retired_equal_across_modes", r->retired_equal},
            {"config_identity_ok", r->identity_ok},
            {"ok", r->ok}};
        if (r->spec.max_ratio >= 0) c["max_ratio"] = r->spec.max_ratio;
        if (!r->spec.sweep.empty()) {
            c["sweep"] = r->spec.sweep;
            c["x"] = r->spec.x;
        }
        cases.push_back(std::move(c));
    }

    nlohmann::json fits = nlohmann::json::object();
    for (const char* sweep : {"calls", "params"}) {
        LinearFit fit = fit_sweep(results, sweep);
        if (fit.points >= 2)
            fits[sweep] = {{"slope", fit.slope},
                           {"intercept", fit.intercept},
                           {"max_residual", fit.max_residual},
                           {"points", fit.points}};
    }

    return {{"cases", std::move(cases)},
            {"fits", std::move(fits)},
            {"per_call_config_cost", kPerCallConfigCost},
            {"per_protect_config_cost", kPerProtectConfigCost},
            {"all_ok", all_ok}};
}

uint32_t resolve_addr(const ProgramImage& image, const std::string& expr) {
    std::string_view text = trim(expr);
    if (auto v = parse_int(text)) return static_cast<uint32_t>(*v);
    size_t split = text.find_first_of("+-", 1);
    std::string_view sym = trim(text.substr(0, split));
    auto it = image.symbols.find(std::string(sym));
    if (it == image.symbols.end())
        throw std::runtime_error("unknown symbol '" + std::string(sym) + "' in '" + expr + "'");
    int64_t value = it->second;
    if (split != std::string_view::npos) {
        auto off = parse_int(trim(text.substr(split + 1)));
        if (!off) throw std::runtime_error("bad offset in '" + expr + "'");
        value += text[split] == '+' ? *off : -*off;
    }
    return static_cast<uint32_t>(value);
}

std::optional<TrapKind> trap_by_name(const std::string& name) {
    static const TrapKind kAll[] = {
        TrapKind::OutOfBoundAccess,  TrapKind::ReturnAddressError,
        TrapKind::PulpConfigViolation, TrapKind::BoundaryViolation,
        TrapKind::IllegalInstruction,  TrapKind::MisalignedAccess,
        TrapKind::MemFault};
    for (TrapKind kind : kAll)
        if (name == trap_name(kind)) return kind;
    return std::nullopt;
}

}  // namespace pulp

// pulpsim — assembler, simulator and benchmark harness for the PC-range
// isolation machine. Subcommands: asm, run, bench, cases.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "pulp/assembler.hpp"
#include "pulp/audit.hpp"
#include "pulp/corpus.hpp"
#include "pulp/machine.hpp"
#include "pulp/trace.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitStepLimit = 15;

int trap_exit_code(pulp::TrapKind kind) {
    switch (kind) {
    case pulp::TrapKind::OutOfBoundAccess: return 10;
    case pulp::TrapKind::ReturnAddressError: return 11;
    case pulp::TrapKind::PulpConfigViolation: return 12;
    case pulp::TrapKind::BoundaryViolation: return 13;
    default: return 14;
    }
}

int cmd_asm(const std::string& input, const std::string& output) {
    try {
        pulp::ProgramImage image = pulp::assemble_file(input);
        pulp::write_image_file(image, output);
    } catch (const std::exception& e) {
        std::cerr << input << ": " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}

struct RunConfig {
    std::string image_path, input_path, trace_path, report_path;
    bool no_pulp = false;
    uint64_t max_steps = 10'000'000;
    uint64_t mem_size = pulp::kDefaultMemSize;
};

int cmd_run(const RunConfig& cfg) {
    pulp::Machine m;
    std::ofstream trace_file;
    std::unique_ptr<pulp::StreamTraceSink> sink;
    try {
        pulp::ProgramImage image = pulp::read_image_file(cfg.image_path);
        m = pulp::load_image(image, cfg.mem_size);
        m.pulp_enabled = !cfg.no_pulp;
        m.input = pulp::read_input(cfg.input_path);
        if (!cfg.trace_path.empty()) {
            trace_file.open(cfg.trace_path);
            if (!trace_file) throw std::runtime_error("cannot write " + cfg.trace_path);
            sink = std::make_unique<pulp::StreamTraceSink>(trace_file);
            m.trace = sink.get();
            m.trace_reset_event();
        }
    } catch (const std::exception& e) {
        std::cerr << "pulpsim: " << e.what() << "\n";
        return kExitUsage;
    }

    pulp::RunOutcome outcome = m.run(cfg.max_steps);
    fwrite(m.output.data(), 1, m.output.size(), stdout);
    fflush(stdout);

    if (!cfg.report_path.empty()) {
        nlohmann::json report = {
            {"outcome", outcome == pulp::RunOutcome::Exited    ? "exit"
                        : outcome == pulp::RunOutcome::Trapped ? "trap"
                                                               : "step-limit"},
            {"steps", m.step_count},
            {"instructions_retired", m.counters.instructions_retired},
            {"loads", m.counters.loads},
            {"stores", m.counters.stores},
            {"checks_performed", m.counters.checks_performed},
            {"config_instructions", m.counters.config_instructions},
            {"traps", m.counters.traps},
            {"state_hash", pulp::state_hash(m)}};
        if (outcome == pulp::RunOutcome::Exited) report["exit_code"] = m.exit_code;
        if (outcome == pulp::RunOutcome::Trapped) {
            report["trap"] = pulp::trap_name(m.trap.kind);
            report["trap_pc"] = m.trap.pc;
            report["trap_addr"] = m.trap.addr;
            report["trap_target"] = m.trap.target;
        }
        std::ofstream out(cfg.report_path);
        if (!out) {
            std::cerr << "pulpsim: cannot write " << cfg.report_path << "\n";
            return kExitUsage;
        }
        out << report.dump(2) << "\n";
    }

    switch (outcome) {
    case pulp::RunOutcome::Exited:
        return m.exit_code & 0xFF;
    case pulp::RunOutcome::Trapped:
        fprintf(stderr, "trap %s at pc 0x%x (addr 0x%x, target 0x%x)\n",
                pulp::trap_name(m.trap.kind), m.trap.pc, m.trap.addr, m.trap.target);
        return trap_exit_code(m.trap.kind);
    case pulp::RunOutcome::StepLimit:
        fprintf(stderr, "step limit of %llu reached at pc 0x%x\n",
                static_cast<unsigned long long>(cfg.max_steps), m.pc);
        return kExitStepLimit;
    }
    return kExitUsage;
}

int cmd_bench(const std::string& manifest_path, const std::string& report_path, int jobs) {
    pulp::Manifest manifest;
    try {
        manifest = pulp::load_manifest(manifest_path);
    } catch (const std::exception& e) {
        std::cerr << "pulpsim: " << e.what() << "\n";
        return kExitUsage;
    }

    std::vector<pulp::BenchResult> results;
    try {
        results = pulp::run_bench(manifest, jobs);
    } catch (const std::exception& e) {
        std::cerr << "pulpsim: bench failed: " << e.what() << "\n";
        return 1;
    }
    nlohmann::json report = pulp::overhead_report(results);

    printf("%-16s %12s %10s %9s %9s  %s\n", "case", "retired", "config", "ratio",
           "identity", "status");
    for (const auto& c : report["cases"]) {
        printf("%-16s %12llu %10llu %8.4f%% %9s  %s\n",
               c["name"].get<std::string>().c_str(),
               static_cast<unsigned long long>(c["instructions_retired"].get<uint64_t>()),
               static_cast<unsigned long long>(c["config_instructions"].get<uint64_t>()),
               c["config_ratio"].get<double>() * 100.0,
               c["config_identity_ok"].get<bool>() ? "exact" : "BROKEN",
               c["ok"].get<bool>() ? "ok" : "FAIL");
    }
    for (auto& [name, fit] : report["fits"].items())
        printf("fit vs %s: config = %.2f*x + %.2f (max residual %.2f over %d points)\n",
               name.c_str(), fit["slope"].get<double>(), fit["intercept"].get<double>(),
               fit["max_residual"].get<double>(), fit["points"].get<int>());

    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) {
            std::cerr << "pulpsim: cannot write " << report_path << "\n";
            return kExitUsage;
        }
        out << report.dump(2) << "\n";
    }
    return report["all_ok"].get<bool>() ? 0 : 1;
}

int cmd_cases(const std::string& manifest_path, const std::string& report_path, bool audit) {
    pulp::Manifest manifest;
    try {
        manifest = pulp::load_manifest(manifest_path);
    } catch (const std::exception& e) {
        std::cerr << "pulpsim: " << e.what() << "\n";
        return kExitUsage;
    }

    nlohmann::json report = nlohmann::json::array();
    bool all_pass = true;
    printf("%-24s %-28s %-28s %s\n", "case", "with protection", "without protection", "status");
    for (const auto& spec : manifest.cases) {
        pulp::ProgramImage image;
        try {
            image = pulp::assemble_case(spec);
        } catch (const std::exception& e) {
            printf("%-24s assembly failed: %s\n", spec.name.c_str(), e.what());
            all_pass = false;
            continue;
        }
        std::vector<nlohmann::json> trace;
        pulp::CaseResult on = pulp::run_case(spec, image, true, audit ? &trace : nullptr);
        pulp::CaseResult off = pulp::run_case(spec, image, false);
        if (audit) {
            pulp::AuditReport audit_report = pulp::audit_trace(trace, false);
            for (const auto& finding : audit_report.findings)
                on.failures.push_back("audit: " + finding);
            on.pass = on.failures.empty();
        }

        auto describe = [](const pulp::CaseResult& r) -> std::string {
            if (r.outcome == pulp::RunOutcome::Trapped)
                return std::string("trap ") + pulp::trap_name(r.trap.kind);
            if (r.outcome == pulp::RunOutcome::Exited)
                return "exit " + std::to_string(r.exit_code);
            return "step limit";
        };
        const bool pass = on.pass && off.pass;
        all_pass = all_pass && pass;
        printf("%-24s %-28s %-28s %s\n", spec.name.c_str(), describe(on).c_str(),
               describe(off).c_str(), pass ? "ok" : "FAIL");
        for (const auto& f : on.failures) printf("    [protected] %s\n", f.c_str());
        for (const auto& f : off.failures) printf("    [unprotected] %s\n", f.c_str());
        report.push_back({{"name", spec.name},
                          {"with_pulp", on.to_json()},
                          {"without_pulp", off.to_json()},
                          {"pass", pass}});
    }

    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) {
            std::cerr << "pulpsim: cannot write " << report_path << "\n";
            return kExitUsage;
        }
        out << report.dump(2) << "\n";
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"assembler and simulator for the PC-range isolation machine"};
    app.require_subcommand(1);

    std::string asm_in, asm_out;
    auto* cmd_a = app.add_subcommand("asm", "assemble source to a binary image");
    cmd_a->add_option("source", asm_in, "assembly source file")->required();
    cmd_a->add_option("-o,--output", asm_out, "output image path")->required();

    RunConfig run_cfg;
    auto* cmd_r = app.add_subcommand("run", "execute a binary image");
    cmd_r->add_option("image", run_cfg.image_path, "binary image file")->required();
    cmd_r->add_flag("--no-pulp", run_cfg.no_pulp, "disable the protection checks");
    cmd_r->add_option("--input", run_cfg.input_path, "byte stream for the read syscall");
    cmd_r->add_option("--trace", run_cfg.trace_path, "write a JSONL execution trace");
    cmd_r->add_option("--max-steps", run_cfg.max_steps, "step budget")->check(CLI::PositiveNumber);
    cmd_r->add_option("--mem-size", run_cfg.mem_size, "memory size in bytes");
    cmd_r->add_option("--report", run_cfg.report_path, "write a JSON final report");

    std::string bench_manifest, bench_report;
    int bench_jobs = 1;
    auto* cmd_b = app.add_subcommand("bench", "run the overhead benchmarks");
    cmd_b->add_option("manifest", bench_manifest, "bench manifest JSON")->required();
    cmd_b->add_option("-o,--output", bench_report, "write the report JSON");
    cmd_b->add_option("--jobs", bench_jobs, "parallel workers")->check(CLI::PositiveNumber);

    std::string cases_manifest, cases_report;
    bool cases_audit = false;
    auto* cmd_c = app.add_subcommand("cases", "run the security corpus");
    cmd_c->add_option("manifest", cases_manifest, "corpus manifest JSON")->required();
    cmd_c->add_option("-o,--output", cases_report, "write the report JSON");
    cmd_c->add_flag("--audit", cases_audit, "audit protected-run traces");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (*cmd_a) return cmd_asm(asm_in, asm_out);
    if (*cmd_r) return cmd_run(run_cfg);
    if (*cmd_b) return cmd_bench(bench_manifest, bench_report, bench_jobs);
    if (*cmd_c) return cmd_cases(cases_manifest, cases_report, cases_audit);
    return kExitUsage;
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pulp/image.hpp"
#include "pulp/machine.hpp"

namespace pulp {

// Security corpus and benchmark harness. The manifest (corpus/manifest.json)
// declares every case with machine-checkable dual expectations: protected
// runs must trap at a named place, unprotected runs must exit and exhibit a
// concrete corruption witness (clobbered bytes or leaked sentinel output).

constexpr uint64_t kDefaultMaxSteps = 5'000'000;

// Sentinel byte used by leak witnesses; "secret" regions are filled with it.
constexpr uint8_t kSentinelByte = 0xA5;

// Address expectations hold "sym"/"sym+off" expressions, resolved against
// the assembled image's symbol table when the case runs.
struct TrapExpect {
    TrapKind cause = TrapKind::OutOfBoundAccess;
    std::optional<std::string> pc, addr, target;  // asserted when present
};

// Bytes at a resolved address must equal (or, negated, differ from) expect.
struct MemCheck {
    std::string addr;
    std::vector<uint8_t> expect;
    bool negate = false;
};

struct ModeExpect {
    enum class Outcome : uint8_t { Exit, Trap } outcome = Outcome::Exit;
    int exit_code = 0;
    TrapExpect trap;
    std::optional<uint64_t> min_sentinel_bytes;  // leak witness on output
    std::vector<MemCheck> mem_checks;
};

struct CaseSpec {
    std::string name;
    std::string source_path;  // resolved relative to the manifest
    std::string input_path;   // empty: no input stream
    std::string note;
    uint64_t max_steps = kDefaultMaxSteps;
    ModeExpect with_pulp, without_pulp;
};

struct BenchSpec {
    std::string name;
    std::string source_path;
    std::string input_path;
    uint64_t max_steps = kDefaultMaxSteps;
    uint64_t calls = 0;         // instrumented calls the program performs
    uint64_t protects = 0;      // protect tuples across all calls
    uint64_t config_extra = 0;  // standalone macro CSR writes outside calls
    double max_ratio = -1.0;    // config/retired threshold; <0 disables
    std::string sweep;          // fit group: "calls" or "params"
    double x = 0;               // independent variable within the group
};

struct Manifest {
    std::string dir;  // directory the paths resolve against
    std::vector<CaseSpec> cases;
    std::vector<BenchSpec> bench;
};

Manifest load_manifest(const std::string& path);

struct CaseResult {
    std::string name;
    bool pulp_enabled = true;
    RunOutcome outcome = RunOutcome::Exited;
    int exit_code = 0;
    TrapCause trap;
    PerfCounters counters;
    uint64_t final_state_hash = 0;
    uint64_t trace_hash = 0;  // 0 when the run was not traced
    bool pass = false;
    std::vector<std::string> failures;

    nlohmann::json to_json() const;
};

// Assembles a case's source (and reads its input file if any).
ProgramImage assemble_case(const CaseSpec& spec);
std::vector<uint8_t> read_input(const std::string& path);  // empty path -> empty

// Runs one case in one mode and evaluates the matching expectation.
// trace_out, when given, receives the full event stream (and the result
// carries its hash).
CaseResult run_case(const CaseSpec& spec, const ProgramImage& image, bool pulp_enabled,
                    std::vector<nlohmann::json>* trace_out = nullptr);

struct BenchResult {
    BenchSpec spec;
    CaseResult with_pulp, without_pulp;
    double config_ratio = 0;
    bool identity_ok = false;   // config == calls*6 + protects*6 + extra
    bool retired_equal = false; // instructions_retired matches across modes
    bool ok = false;
};

// Runs every bench case in both modes, jobs-way parallel, results in
// manifest order (names are unique and sorted in reports).
std::vector<BenchResult> run_bench(const Manifest& manifest, int jobs);

struct LinearFit {
    double slope = 0, intercept = 0, max_residual = 0;
    int points = 0;
};

// Least-squares fit of config_instructions against the sweep variable.
LinearFit fit_sweep(const std::vector<BenchResult>& results, const std::string& sweep);

// Full benchmark report: per-case ratios and identities, sweep fits, and an
// overall verdict ("all_ok").
nlohmann::json overhead_report(const std::vector<BenchResult>& results);

// "sym", "sym+4", "sym-2", or a plain integer, resolved against the image's
// symbol table. Throws std::runtime_error on unknown symbols.
uint32_t resolve_addr(const ProgramImage& image, const std::string& expr);

std::optional<TrapKind> trap_by_name(const std::string& name);

}  // namespace pulp

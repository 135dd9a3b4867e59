#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pulp/checker.hpp"
#include "pulp/image.hpp"
#include "pulp/isa.hpp"
#include "pulp/regs.hpp"
#include "pulp/trace.hpp"
#include "pulp/trap.hpp"

namespace pulp {

constexpr size_t kDefaultMemSize = 1u << 20;  // 1 MiB flat memory

// Syscall ABI: number in a7, arguments in a0..a2, result in a0.
constexpr uint32_t kSysRead = 63;
constexpr uint32_t kSysWrite = 64;
constexpr uint32_t kSysExit = 93;

enum class RunStatus : uint8_t { Running, Exited, Trapped };
enum class RunOutcome : uint8_t { Exited, Trapped, StepLimit };

struct PerfCounters {
    uint64_t instructions_retired = 0;
    uint64_t loads = 0;
    uint64_t stores = 0;
    uint64_t checks_performed = 0;    // EX-stage checks that passed on retired instructions
    uint64_t config_instructions = 0; // retired writes to the PULP CSR block
    uint64_t traps = 0;
};

// One hardware thread: architectural state plus the micro-kernel's I/O
// streams. Self-contained value; copies and moves are independent machines.
struct Machine {
    uint32_t pc = 0;
    std::array<uint32_t, 32> regs{};
    std::vector<uint8_t> mem;
    Privilege privilege = Privilege::User;
    PulpRegisterFile pulp;
    PerfCounters counters;
    RunStatus status = RunStatus::Running;
    int32_t exit_code = 0;
    TrapCause trap;  // valid when status == Trapped
    bool pulp_enabled = true;
    uint64_t step_count = 0;

    std::vector<uint8_t> input;  // byte stream consumed by the read syscall
    size_t input_pos = 0;
    std::vector<uint8_t> output;  // byte stream produced by the write syscall

    TraceSink* trace = nullptr;  // not owned; null disables tracing

    uint32_t reg(int idx) const { return regs[idx]; }
    void set_reg(int idx, uint32_t value) {
        if (idx != 0) regs[idx] = value;
    }

    // Executes one instruction; no-op unless Running.
    void step();

    // Steps until exit, trap or the step limit.
    RunOutcome run(uint64_t max_steps);

    // Emits the initial trace event carrying the register-file snapshot; the
    // loader calls this, and tests that hand-build machines can too.
    void trace_reset_event();
};

// Builds a machine from an image: memory from the segments, PPCR from the
// primary range (a kernel-mode write), pc at entry, sp at top of memory minus
// 16, user privilege, all SMAR groups and RAR invalid.
// Throws ImageError (ImageTooLarge / overlapping segments / bad image).
Machine load_image(const ProgramImage& image, size_t mem_size = kDefaultMemSize);

// Hash of the complete architectural state, for determinism checks.
uint64_t state_hash(const Machine& m);

const char* run_status_name(RunStatus status);

}  // namespace pulp

#pragma once

#include <cstdint>

#include "pulp/isa.hpp"
#include "pulp/regs.hpp"
#include "pulp/trap.hpp"

namespace pulp {

// Pure check logic evaluated per instruction. The machine applies the
// resulting effects (RAR updates, traps); nothing in here mutates state.

struct CheckVerdict {
    bool pass = true;
    TrapCause trap;  // meaningful only when !pass

    static CheckVerdict ok() { return {}; }
    static CheckVerdict fail(TrapCause cause) { return {false, cause}; }
};

enum class TransferKind : uint8_t { JalCall, JalrCall, BranchTaken, Sequential };

enum class ControlEffectKind : uint8_t {
    NoEffect,
    SetRar,     // record link into RAR (primary calling out)
    CheckRar,   // compare target against RAR (secondary coming back)
    Violation,  // boundary violation, no legal effect exists
};

struct ControlEffect {
    ControlEffectKind kind = ControlEffectKind::NoEffect;
    uint32_t addr = 0;  // SetRar: link; CheckRar/Violation: target
};

// Data-memory bounds check. Kernel and primary pass unconditionally; a
// secondary access passes iff one valid SMAR group contains it with the
// right permission.
CheckVerdict check_data_access(Region region, uint32_t pc, uint32_t addr, uint32_t size,
                               AccessKind kind, const PulpRegisterFile& regs);

// Region-crossing rules for one control transfer. link must be the pc of the
// transferring instruction plus 4.
//   primary -> secondary  jal/jalr: SetRar(link); branch or fall-through: Violation
//   secondary -> primary  jal/jalr/branch: CheckRar(target); fall-through: Violation
//   within one region, or anything involving the kernel region: NoEffect
ControlEffect check_control_transfer(Region src_region, TransferKind transfer,
                                     uint32_t link, uint32_t target,
                                     Region target_region);

// Resolves a CheckRar effect against the register file. On a pass the machine
// must invalidate RAR.
CheckVerdict check_rar(const PulpRegisterFile& regs, uint32_t pc, uint32_t target);

// Whether an instruction in this region needs an EX-stage data check.
bool needs_check(Region region, Opcode op);
// Whether a control transfer needs a crossing check.
bool needs_check(Region src_region, Region target_region, Opcode op);

const char* transfer_name(TransferKind kind);
const char* control_effect_name(ControlEffectKind kind);

}  // namespace pulp

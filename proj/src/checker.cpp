#include "pulp/checker.hpp"

namespace pulp {

const char* trap_name(TrapKind kind) {
    switch (kind) {
    case TrapKind::OutOfBoundAccess: return "OutOfBoundAccess";
    case TrapKind::ReturnAddressError: return "ReturnAddressError";
    case TrapKind::PulpConfigViolation: return "PulpConfigViolation";
    case TrapKind::BoundaryViolation: return "BoundaryViolation";
    case TrapKind::IllegalInstruction: return "IllegalInstruction";
    case TrapKind::MisalignedAccess: return "MisalignedAccess";
    case TrapKind::MemFault: return "MemFault";
    }
    return "?";
}

CheckVerdict check_data_access(Region region, uint32_t pc, uint32_t addr, uint32_t size,
                               AccessKind kind, const PulpRegisterFile& regs) {
    if (region != Region::Secondary) return CheckVerdict::ok();
    if (smar_permits(regs, addr, size, kind)) return CheckVerdict::ok();
    TrapCause cause;
    cause.kind = TrapKind::OutOfBoundAccess;
    cause.pc = pc;
    cause.addr = addr;
    cause.access = kind;
    return CheckVerdict::fail(cause);
}

ControlEffect check_control_transfer(Region src_region, TransferKind transfer,
                                     uint32_t link, uint32_t target,
                                     Region target_region) {
    if (src_region == Region::Kernel || target_region == Region::Kernel)
        return {ControlEffectKind::NoEffect, 0};
    if (src_region == target_region) return {ControlEffectKind::NoEffect, 0};

    if (src_region == Region::Primary) {
        // leaving the trusted range
        if (transfer == TransferKind::JalCall || transfer == TransferKind::JalrCall)
            return {ControlEffectKind::SetRar, link};
        return {ControlEffectKind::Violation, target};  // no link address exists to record
    }

    // secondary -> primary
    if (transfer == TransferKind::Sequential)
        return {ControlEffectKind::Violation, target};
    return {ControlEffectKind::CheckRar, target};
}

CheckVerdict check_rar(const PulpRegisterFile& regs, uint32_t pc, uint32_t target) {
    if (regs.rar_valid && regs.rar_addr == target) return CheckVerdict::ok();
    TrapCause cause;
    cause.kind = TrapKind::ReturnAddressError;
    cause.pc = pc;
    cause.target = target;
    cause.expected = regs.rar_addr;
    cause.expected_valid = regs.rar_valid;
    return CheckVerdict::fail(cause);
}

bool needs_check(Region region, Opcode op) {
    return region == Region::Secondary && (op == Opcode::Load || op == Opcode::Store);
}

bool needs_check(Region src_region, Region target_region, Opcode op) {
    if (src_region == Region::Kernel || target_region == Region::Kernel) return false;
    if (op != Opcode::Jal && op != Opcode::Jalr && op != Opcode::Branch) return false;
    return src_region != target_region;
}

const char* transfer_name(TransferKind kind) {
    switch (kind) {
    case TransferKind::JalCall: return "jal";
    case TransferKind::JalrCall: return "jalr";
    case TransferKind::BranchTaken: return "branch";
    case TransferKind::Sequential: return "sequential";
    }
    return "?";
}

const char* control_effect_name(ControlEffectKind kind) {
    switch (kind) {
    case ControlEffectKind::NoEffect: return "none";
    case ControlEffectKind::SetRar: return "set_rar";
    case ControlEffectKind::CheckRar: return "check_rar";
    case ControlEffectKind::Violation: return "violation";
    }
    return "?";
}

}  // namespace pulp

#include "pulp/machine.hpp"

#include <algorithm>
#include <cstring>

namespace pulp {

namespace {

constexpr uint16_t kCsrCycle = 0xC00;
constexpr uint16_t kCsrInstret = 0xC02;

nlohmann::json pulpregs_json(const PulpRegisterFile& regs) {
    nlohmann::json smar = nlohmann::json::array();
    for (const auto& g : regs.smar) smar.push_back({g.start, g.end, g.cfg});
    return {{"ppcr", {regs.ppcr_start, regs.ppcr_end}},
            {"smar", std::move(smar)},
            {"rar", {regs.rar_addr, regs.rar_valid}}};
}

const char* event_kind(const Instruction& inst) {
    switch (inst.op) {
    case Opcode::Lui: return "lui";
    case Opcode::Auipc: return "auipc";
    case Opcode::Jal: return "jal";
    case Opcode::Jalr: return "jalr";
    case Opcode::Branch: return "branch";
    case Opcode::Load: return "load";
    case Opcode::Store: return "store";
    case Opcode::AluImm: return "alu-imm";
    case Opcode::AluReg: return "alu-reg";
    case Opcode::CsrReadWrite: return "csrrw";
    case Opcode::CsrReadSet: return "csrrs";
    case Opcode::Ecall: return "ecall";
    case Opcode::Ebreak: return "ebreak";
    case Opcode::Illegal: return "illegal";
    }
    return "illegal";
}

}  // namespace

void Machine::trace_reset_event() {
    if (!trace) return;
    Region region = classify_region(pc, privilege, pulp);
    nlohmann::json ev = {{"step", 0},
                         {"pc", pc},
                         {"region", region_name(region)},
                         {"kind", "init"},
                         {"pulpregs", pulpregs_json(pulp)}};
    trace->on_event(ev);
}

void Machine::step() {
    if (status != RunStatus::Running) return;
    const uint32_t cur_pc = pc;
    ++step_count;

    nlohmann::json ev;
    const bool tracing = trace != nullptr;

    auto do_trap = [&](TrapCause cause) {
        trap = cause;
        status = RunStatus::Trapped;
        ++counters.traps;
        if (tracing) {
            ev["verdict"] = std::string("trap:") + trap_name(cause.kind);
            trace->on_event(ev);
        }
    };

    // fetch
    if (cur_pc & 3 || uint64_t(cur_pc) + 4 > mem.size()) {
        if (tracing)
            ev = {{"step", step_count}, {"pc", cur_pc}, {"region", "secondary"}, {"kind", "illegal"}};
        TrapCause cause;
        cause.kind = (cur_pc & 3) ? TrapKind::MisalignedAccess : TrapKind::MemFault;
        cause.pc = cur_pc;
        cause.addr = cur_pc;
        do_trap(cause);
        return;
    }
    uint32_t word;
    std::memcpy(&word, mem.data() + cur_pc, 4);
    const Instruction inst = decode(word);
    const Region region = classify_region(cur_pc, privilege, pulp);

    if (tracing)
        ev = {{"step", step_count},
              {"pc", cur_pc},
              {"region", region_name(region)},
              {"kind", event_kind(inst)}};

    if (inst.op == Opcode::Illegal) {
        TrapCause cause;
        cause.kind = TrapKind::IllegalInstruction;
        cause.pc = cur_pc;
        cause.word = word;
        do_trap(cause);
        return;
    }

    uint32_t next_pc = cur_pc + 4;
    bool transferred = false;
    bool exited = false;
    uint64_t pending_checks = 0;
    uint64_t pending_config = 0;
    bool is_load = false, is_store = false;
    bool regfile_changed = false;

    // Applies the region-crossing rules for one taken transfer. Returns false
    // when the transfer trapped.
    auto do_transfer = [&](TransferKind tk, uint32_t target) -> bool {
        if (tracing) ev["target"] = target;
        if (pulp_enabled) {
            Region tgt_region = classify_region(target, privilege, pulp);
            ControlEffect eff =
                check_control_transfer(region, tk, cur_pc + 4, target, tgt_region);
            if (tracing) ev["effect"] = control_effect_name(eff.kind);
            switch (eff.kind) {
            case ControlEffectKind::NoEffect:
                break;
            case ControlEffectKind::SetRar:
                pulp.rar_addr = eff.addr;
                pulp.rar_valid = true;
                regfile_changed = true;
                ++pending_checks;
                break;
            case ControlEffectKind::CheckRar: {
                CheckVerdict v = check_rar(pulp, cur_pc, target);
                if (!v.pass) {
                    do_trap(v.trap);
                    return false;
                }
                pulp.rar_valid = false;  // consumed by the matching return
                regfile_changed = true;
                ++pending_checks;
                break;
            }
            case ControlEffectKind::Violation: {
                TrapCause cause;
                cause.kind = TrapKind::BoundaryViolation;
                cause.pc = cur_pc;
                cause.target = target;
                do_trap(cause);
                return false;
            }
            }
        }
        if (target & 3) {
            TrapCause cause;
            cause.kind = TrapKind::MisalignedAccess;
            cause.pc = cur_pc;
            cause.addr = target;
            do_trap(cause);
            return false;
        }
        next_pc = target;
        transferred = true;
        return true;
    };

    auto alu_eval = [](AluOp op, uint32_t a, uint32_t b) -> uint32_t {
        switch (op) {
        case AluOp::Add: return a + b;
        case AluOp::Sub: return a - b;
        case AluOp::Sll: return a << (b & 31);
        case AluOp::Slt: return static_cast<int32_t>(a) < static_cast<int32_t>(b) ? 1 : 0;
        case AluOp::Sltu: return a < b ? 1 : 0;
        case AluOp::Xor: return a ^ b;
        case AluOp::Srl: return a >> (b & 31);
        case AluOp::Sra: return static_cast<uint32_t>(static_cast<int32_t>(a) >> (b & 31));
        case AluOp::Or: return a | b;
        case AluOp::And: return a & b;
        }
        return 0;
    };

    switch (inst.op) {
    case Opcode::Lui:
        set_reg(inst.rd, static_cast<uint32_t>(inst.imm) << 12);
        break;
    case Opcode::Auipc:
        set_reg(inst.rd, cur_pc + (static_cast<uint32_t>(inst.imm) << 12));
        break;
    case Opcode::AluImm:
        set_reg(inst.rd, alu_eval(inst.alu, reg(inst.rs1), static_cast<uint32_t>(inst.imm)));
        break;
    case Opcode::AluReg:
        set_reg(inst.rd, alu_eval(inst.alu, reg(inst.rs1), reg(inst.rs2)));
        break;
    case Opcode::Load:
    case Opcode::Store: {
        const uint32_t addr = reg(inst.rs1) + static_cast<uint32_t>(inst.imm);
        const AccessKind access =
            inst.op == Opcode::Load ? AccessKind::Read : AccessKind::Write;
        if (tracing) {
            ev["addr"] = addr;
            ev["size"] = inst.width;
            ev["access"] = access == AccessKind::Read ? "r" : "w";
        }
        if (addr % inst.width != 0) {
            TrapCause cause;
            cause.kind = TrapKind::MisalignedAccess;
            cause.pc = cur_pc;
            cause.addr = addr;
            do_trap(cause);
            return;
        }
        if (pulp_enabled && needs_check(region, inst.op)) {
            CheckVerdict v = check_data_access(region, cur_pc, addr, inst.width, access, pulp);
            if (!v.pass) {
                do_trap(v.trap);
                return;
            }
            ++pending_checks;
        }
        if (uint64_t(addr) + inst.width > mem.size()) {
            TrapCause cause;
            cause.kind = TrapKind::MemFault;
            cause.pc = cur_pc;
            cause.addr = addr;
            do_trap(cause);
            return;
        }
        if (inst.op == Opcode::Load) {
            uint32_t value = 0;
            std::memcpy(&value, mem.data() + addr, inst.width);
            if (!inst.load_unsigned) {
                if (inst.width == 1) value = static_cast<uint32_t>(static_cast<int8_t>(value));
                else if (inst.width == 2)
                    value = static_cast<uint32_t>(static_cast<int16_t>(value));
            }
            set_reg(inst.rd, value);
            is_load = true;
        } else {
            uint32_t value = reg(inst.rs2);
            std::memcpy(mem.data() + addr, &value, inst.width);
            is_store = true;
        }
        if (tracing) ev["verdict"] = "pass";
        break;
    }
    case Opcode::Branch: {
        const uint32_t a = reg(inst.rs1);
        const uint32_t b = reg(inst.rs2);
        bool taken = false;
        switch (inst.cond) {
        case BranchCond::Eq: taken = a == b; break;
        case BranchCond::Ne: taken = a != b; break;
        case BranchCond::Lt: taken = static_cast<int32_t>(a) < static_cast<int32_t>(b); break;
        case BranchCond::Ge: taken = static_cast<int32_t>(a) >= static_cast<int32_t>(b); break;
        case BranchCond::Ltu: taken = a < b; break;
        case BranchCond::Geu: taken = a >= b; break;
        }
        if (taken && !do_transfer(TransferKind::BranchTaken, cur_pc + static_cast<uint32_t>(inst.imm)))
            return;
        break;
    }
    case Opcode::Jal: {
        const uint32_t target = cur_pc + static_cast<uint32_t>(inst.imm);
        if (!do_transfer(TransferKind::JalCall, target)) return;
        set_reg(inst.rd, cur_pc + 4);
        break;
    }
    case Opcode::Jalr: {
        const uint32_t target = (reg(inst.rs1) + static_cast<uint32_t>(inst.imm)) & ~1u;
        if (!do_transfer(TransferKind::JalrCall, target)) return;
        set_reg(inst.rd, cur_pc + 4);
        break;
    }
    case Opcode::CsrReadWrite:
    case Opcode::CsrReadSet: {
        const uint16_t csr = inst.csr;
        const bool is_set = inst.op == Opcode::CsrReadSet;
        const bool do_write = !is_set || inst.rs1 != 0;
        if (tracing) {
            std::string name = pulp_csr_name(csr);
            ev["csr"] = name.empty() ? std::to_string(csr) : name;
        }
        if (is_pulp_csr(csr)) {
            uint32_t old = 0;
            if (is_set || inst.rd != 0) {
                auto v = pulp_csr_read(pulp, csr);
                if (!v) {
                    TrapCause cause;
                    cause.kind = TrapKind::IllegalInstruction;
                    cause.pc = cur_pc;
                    cause.word = word;
                    do_trap(cause);
                    return;
                }
                old = *v;
            }
            if (do_write) {
                const uint32_t value = is_set ? (old | reg(inst.rs1)) : reg(inst.rs1);
                // With checks disabled the write rules are not enforced; the
                // hardware-managed RAR register still ignores software writes.
                const Region wregion = pulp_enabled ? region : Region::Kernel;
                CsrWriteResult res = csr == kCsrRar && !pulp_enabled
                                         ? CsrWriteResult::Ok
                                         : pulp_csr_write(pulp, csr, value, wregion);
                switch (res) {
                case CsrWriteResult::Ok:
                    ++pending_config;
                    regfile_changed = true;
                    if (tracing) ev["value"] = value;
                    break;
                case CsrWriteResult::Violation: {
                    TrapCause cause;
                    cause.kind = TrapKind::PulpConfigViolation;
                    cause.pc = cur_pc;
                    cause.csr = csr;
                    do_trap(cause);
                    return;
                }
                case CsrWriteResult::Unknown: {
                    TrapCause cause;
                    cause.kind = TrapKind::IllegalInstruction;
                    cause.pc = cur_pc;
                    cause.word = word;
                    do_trap(cause);
                    return;
                }
                }
            }
            set_reg(inst.rd, old);
        } else if (csr == kCsrCycle || csr == kCsrInstret) {
            if (do_write) {
                TrapCause cause;  // read-only counters
                cause.kind = TrapKind::IllegalInstruction;
                cause.pc = cur_pc;
                cause.word = word;
                do_trap(cause);
                return;
            }
            set_reg(inst.rd, static_cast<uint32_t>(counters.instructions_retired));
        } else {
            TrapCause cause;  // unknown CSR
            cause.kind = TrapKind::IllegalInstruction;
            cause.pc = cur_pc;
            cause.word = word;
            do_trap(cause);
            return;
        }
        break;
    }
    case Opcode::Ecall: {
        // The micro-kernel handler runs at kernel privilege: its memory
        // accesses are not subject to PULP checks.
        const uint32_t num = reg(17);
        if (tracing) ev["sys"] = num;
        switch (num) {
        case kSysExit:
            exited = true;
            exit_code = static_cast<int32_t>(reg(10));
            break;
        case kSysWrite: {
            const uint32_t buf = reg(11);
            const uint32_t len = reg(12);
            if (uint64_t(buf) + len > mem.size()) {
                TrapCause cause;
                cause.kind = TrapKind::MemFault;
                cause.pc = cur_pc;
                cause.addr = buf;
                do_trap(cause);
                return;
            }
            output.insert(output.end(), mem.begin() + buf, mem.begin() + buf + len);
            set_reg(10, len);
            break;
        }
        case kSysRead: {
            const uint32_t buf = reg(11);
            const uint32_t len = reg(12);
            if (uint64_t(buf) + len > mem.size()) {
                TrapCause cause;
                cause.kind = TrapKind::MemFault;
                cause.pc = cur_pc;
                cause.addr = buf;
                do_trap(cause);
                return;
            }
            const size_t avail = input.size() - input_pos;
            const uint32_t n = static_cast<uint32_t>(std::min<uint64_t>(len, avail));
            std::copy(input.begin() + input_pos, input.begin() + input_pos + n,
                      mem.begin() + buf);
            input_pos += n;
            set_reg(10, n);
            break;
        }
        default: {
            TrapCause cause;  // unknown syscall, illegal-instruction class
            cause.kind = TrapKind::IllegalInstruction;
            cause.pc = cur_pc;
            cause.word = word;
            do_trap(cause);
            return;
        }
        }
        break;
    }
    case Opcode::Ebreak: {
        TrapCause cause;
        cause.kind = TrapKind::IllegalInstruction;
        cause.pc = cur_pc;
        cause.word = word;
        do_trap(cause);
        return;
    }
    case Opcode::Illegal:
        return;  // handled above
    }

    // retire
    ++counters.instructions_retired;
    counters.loads += is_load;
    counters.stores += is_store;
    counters.checks_performed += pending_checks;
    counters.config_instructions += pending_config;

    if (exited) {
        status = RunStatus::Exited;
        if (tracing) {
            ev["verdict"] = "pass";
            trace->on_event(ev);
        }
        return;
    }

    if (tracing) {
        if (regfile_changed) {
            ev["pulpregs"] = pulpregs_json(pulp);
            ev["rar"] = {pulp.rar_addr, pulp.rar_valid};
        }
        if (!ev.contains("verdict")) ev["verdict"] = "pass";
    }

    // A fall-through across the primary/secondary boundary is a violation in
    // either direction; region entries and exits must be explicit transfers.
    // The completed instruction retires, the crossing traps.
    if (!transferred && pulp_enabled) {
        Region next_region = classify_region(next_pc, privilege, pulp);
        ControlEffect eff = check_control_transfer(region, TransferKind::Sequential,
                                                   cur_pc + 4, next_pc, next_region);
        if (eff.kind == ControlEffectKind::Violation) {
            TrapCause cause;
            cause.kind = TrapKind::BoundaryViolation;
            cause.pc = cur_pc;
            cause.target = next_pc;
            do_trap(cause);
            return;
        }
    }

    if (tracing) trace->on_event(ev);
    pc = next_pc;
}

RunOutcome Machine::run(uint64_t max_steps) {
    for (uint64_t i = 0; i < max_steps && status == RunStatus::Running; ++i) step();
    switch (status) {
    case RunStatus::Exited: return RunOutcome::Exited;
    case RunStatus::Trapped: return RunOutcome::Trapped;
    case RunStatus::Running: return RunOutcome::StepLimit;
    }
    return RunOutcome::StepLimit;
}

Machine load_image(const ProgramImage& image, size_t mem_size) {
    image.validate();
    Machine m;
    m.mem.assign(mem_size, 0);
    for (const auto& seg : image.segments) {
        if (seg.end() > mem_size) throw ImageError("segment does not fit in memory");
        std::copy(seg.bytes.begin(), seg.bytes.end(), m.mem.begin() + seg.base);
    }
    // The loader mirrors the kernel: it configures PPCR at kernel privilege
    // before handing control to user code.
    pulp_csr_write(m.pulp, kCsrPpcrLo, image.primary_start, Region::Kernel);
    pulp_csr_write(m.pulp, kCsrPpcrHi, image.primary_end, Region::Kernel);
    m.pc = image.entry;
    m.privilege = Privilege::User;
    m.set_reg(2, static_cast<uint32_t>(mem_size - 16));  // sp
    return m;
}

uint64_t state_hash(const Machine& m) {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* p, size_t n) { h = fnv1a64(p, n, h); };
    mix(&m.pc, sizeof m.pc);
    mix(m.regs.data(), m.regs.size() * sizeof(uint32_t));
    mix(m.mem.data(), m.mem.size());
    uint8_t priv = static_cast<uint8_t>(m.privilege);
    mix(&priv, 1);
    mix(&m.pulp.ppcr_start, sizeof(uint32_t));
    mix(&m.pulp.ppcr_end, sizeof(uint32_t));
    for (const auto& g : m.pulp.smar) {
        mix(&g.start, sizeof g.start);
        mix(&g.end, sizeof g.end);
        mix(&g.cfg, sizeof g.cfg);
    }
    mix(&m.pulp.rar_addr, sizeof m.pulp.rar_addr);
    uint8_t rv = m.pulp.rar_valid ? 1 : 0;
    mix(&rv, 1);
    mix(&m.counters, sizeof m.counters);
    uint8_t st = static_cast<uint8_t>(m.status);
    mix(&st, 1);
    mix(&m.exit_code, sizeof m.exit_code);
    if (m.status == RunStatus::Trapped) {
        uint8_t tk = static_cast<uint8_t>(m.trap.kind);
        mix(&tk, 1);
        mix(&m.trap.pc, sizeof m.trap.pc);
        mix(&m.trap.addr, sizeof m.trap.addr);
        mix(&m.trap.target, sizeof m.trap.target);
    }
    mix(m.output.data(), m.output.size());
    return h;
}

const char* run_status_name(RunStatus status) {
    switch (status) {
    case RunStatus::Running: return "running";
    case RunStatus::Exited: return "exited";
    case RunStatus::Trapped: return "trapped";
    }
    return "?";
}

}  // namespace pulp

#include "pulp/isa.hpp"

#include <array>
#include <cstdio>
#include <utility>

namespace pulp {

namespace {

constexpr uint32_t kOpcLui = 0b0110111;
constexpr uint32_t kOpcAuipc = 0b0010111;
constexpr uint32_t kOpcJal = 0b1101111;
constexpr uint32_t kOpcJalr = 0b1100111;
constexpr uint32_t kOpcBranch = 0b1100011;
constexpr uint32_t kOpcLoad = 0b0000011;
constexpr uint32_t kOpcStore = 0b0100011;
constexpr uint32_t kOpcAluImm = 0b0010011;
constexpr uint32_t kOpcAluReg = 0b0110011;
constexpr uint32_t kOpcSystem = 0b1110011;

inline int32_t sext(uint32_t value, unsigned bits) {
    uint32_t shift = 32 - bits;
    return static_cast<int32_t>(value << shift) >> shift;
}

inline uint32_t bits(uint32_t word, unsigned hi, unsigned lo) {
    return (word >> lo) & ((1u << (hi - lo + 1)) - 1);
}

bool fits_signed(int64_t value, unsigned bit_count) {
    int64_t lo = -(int64_t(1) << (bit_count - 1));
    int64_t hi = (int64_t(1) << (bit_count - 1)) - 1;
    return value >= lo && value <= hi;
}

void require(bool ok, const char* what) {
    if (!ok) throw EncodeError(what);
}

}  // namespace

bool operator==(const Instruction& a, const Instruction& b) {
    if (a.op != b.op) return false;
    switch (a.op) {
    case Opcode::Illegal:
    case Opcode::Ecall:
    case Opcode::Ebreak:
        return true;
    case Opcode::Lui:
    case Opcode::Auipc:
    case Opcode::Jal:
        return a.rd == b.rd && a.imm == b.imm;
    case Opcode::Jalr:
        return a.rd == b.rd && a.rs1 == b.rs1 && a.imm == b.imm;
    case Opcode::Branch:
        return a.cond == b.cond && a.rs1 == b.rs1 && a.rs2 == b.rs2 && a.imm == b.imm;
    case Opcode::Load:
        return a.rd == b.rd && a.rs1 == b.rs1 && a.imm == b.imm && a.width == b.width &&
               a.load_unsigned == b.load_unsigned;
    case Opcode::Store:
        return a.rs1 == b.rs1 && a.rs2 == b.rs2 && a.imm == b.imm && a.width == b.width;
    case Opcode::AluImm:
        return a.alu == b.alu && a.rd == b.rd && a.rs1 == b.rs1 && a.imm == b.imm;
    case Opcode::AluReg:
        return a.alu == b.alu && a.rd == b.rd && a.rs1 == b.rs1 && a.rs2 == b.rs2;
    case Opcode::CsrReadWrite:
    case Opcode::CsrReadSet:
        return a.rd == b.rd && a.rs1 == b.rs1 && a.csr == b.csr;
    }
    return false;
}

Instruction decode(uint32_t word) {
    Instruction inst;
    inst.raw = word;
    inst.op = Opcode::Illegal;

    uint32_t opcode = bits(word, 6, 0);
    uint8_t rd = static_cast<uint8_t>(bits(word, 11, 7));
    uint32_t funct3 = bits(word, 14, 12);
    uint8_t rs1 = static_cast<uint8_t>(bits(word, 19, 15));
    uint8_t rs2 = static_cast<uint8_t>(bits(word, 24, 20));
    uint32_t funct7 = bits(word, 31, 25);

    switch (opcode) {
    case kOpcLui:
        inst.op = Opcode::Lui;
        inst.rd = rd;
        inst.imm = static_cast<int32_t>(bits(word, 31, 12));
        break;
    case kOpcAuipc:
        inst.op = Opcode::Auipc;
        inst.rd = rd;
        inst.imm = static_cast<int32_t>(bits(word, 31, 12));
        break;
    case kOpcJal: {
        inst.op = Opcode::Jal;
        inst.rd = rd;
        uint32_t imm = (bits(word, 31, 31) << 20) | (bits(word, 19, 12) << 12) |
                       (bits(word, 20, 20) << 11) | (bits(word, 30, 21) << 1);
        inst.imm = sext(imm, 21);
        break;
    }
    case kOpcJalr:
        if (funct3 != 0) break;
        inst.op = Opcode::Jalr;
        inst.rd = rd;
        inst.rs1 = rs1;
        inst.imm = sext(bits(word, 31, 20), 12);
        break;
    case kOpcBranch: {
        static constexpr std::array<int, 8> kCondMap = {0, 1, -1, -1, 2, 3, 4, 5};
        int cond = kCondMap[funct3];
        if (cond < 0) break;
        inst.op = Opcode::Branch;
        inst.cond = static_cast<BranchCond>(cond);
        inst.rs1 = rs1;
        inst.rs2 = rs2;
        uint32_t imm = (bits(word, 31, 31) << 12) | (bits(word, 7, 7) << 11) |
                       (bits(word, 30, 25) << 5) | (bits(word, 11, 8) << 1);
        inst.imm = sext(imm, 13);
        break;
    }
    case kOpcLoad: {
        if (funct3 == 3 || funct3 == 6 || funct3 == 7) break;
        inst.op = Opcode::Load;
        inst.rd = rd;
        inst.rs1 = rs1;
        inst.imm = sext(bits(word, 31, 20), 12);
        inst.width = static_cast<uint8_t>(1u << (funct3 & 3));
        inst.load_unsigned = (funct3 & 4) != 0;
        break;
    }
    case kOpcStore: {
        if (funct3 > 2) break;
        inst.op = Opcode::Store;
        inst.rs1 = rs1;
        inst.rs2 = rs2;
        inst.imm = sext((bits(word, 31, 25) << 5) | bits(word, 11, 7), 12);
        inst.width = static_cast<uint8_t>(1u << funct3);
        break;
    }
    case kOpcAluImm: {
        inst.rd = rd;
        inst.rs1 = rs1;
        switch (funct3) {
        case 0b000: inst.alu = AluOp::Add; break;
        case 0b010: inst.alu = AluOp::Slt; break;
        case 0b011: inst.alu = AluOp::Sltu; break;
        case 0b100: inst.alu = AluOp::Xor; break;
        case 0b110: inst.alu = AluOp::Or; break;
        case 0b111: inst.alu = AluOp::And; break;
        case 0b001:
            if (funct7 != 0) return inst;
            inst.alu = AluOp::Sll;
            break;
        case 0b101:
            if (funct7 == 0) inst.alu = AluOp::Srl;
            else if (funct7 == 0b0100000) inst.alu = AluOp::Sra;
            else return inst;
            break;
        }
        inst.op = Opcode::AluImm;
        if (funct3 == 0b001 || funct3 == 0b101)
            inst.imm = static_cast<int32_t>(rs2);  // shamt
        else
            inst.imm = sext(bits(word, 31, 20), 12);
        break;
    }
    case kOpcAluReg: {
        static constexpr std::array<AluOp, 8> kBase = {
            AluOp::Add, AluOp::Sll, AluOp::Slt, AluOp::Sltu,
            AluOp::Xor, AluOp::Srl, AluOp::Or,  AluOp::And};
        if (funct7 == 0) {
            inst.alu = kBase[funct3];
        } else if (funct7 == 0b0100000) {
            if (funct3 == 0b000) inst.alu = AluOp::Sub;
            else if (funct3 == 0b101) inst.alu = AluOp::Sra;
            else return inst;
        } else {
            return inst;
        }
        inst.op = Opcode::AluReg;
        inst.rd = rd;
        inst.rs1 = rs1;
        inst.rs2 = rs2;
        break;
    }
    case kOpcSystem: {
        uint32_t imm12 = bits(word, 31, 20);
        if (funct3 == 0) {
            if (rd != 0 || rs1 != 0) break;
            if (imm12 == 0) inst.op = Opcode::Ecall;
            else if (imm12 == 1) inst.op = Opcode::Ebreak;
            break;
        }
        if (funct3 == 0b001) inst.op = Opcode::CsrReadWrite;
        else if (funct3 == 0b010) inst.op = Opcode::CsrReadSet;
        else break;
        inst.rd = rd;
        inst.rs1 = rs1;
        inst.csr = static_cast<uint16_t>(imm12);
        break;
    }
    default:
        break;
    }
    return inst;
}

uint32_t encode(const Instruction& inst) {
    require(inst.rd < 32 && inst.rs1 < 32 && inst.rs2 < 32, "register index out of range");
    auto itype = [&](uint32_t opcode, uint32_t funct3) {
        require(fits_signed(inst.imm, 12), "12-bit immediate out of range");
        return (static_cast<uint32_t>(inst.imm) << 20) | (uint32_t(inst.rs1) << 15) |
               (funct3 << 12) | (uint32_t(inst.rd) << 7) | opcode;
    };

    switch (inst.op) {
    case Opcode::Lui:
    case Opcode::Auipc: {
        require(inst.imm >= 0 && inst.imm <= 0xFFFFF, "20-bit immediate out of range");
        uint32_t opcode = inst.op == Opcode::Lui ? kOpcLui : kOpcAuipc;
        return (static_cast<uint32_t>(inst.imm) << 12) | (uint32_t(inst.rd) << 7) | opcode;
    }
    case Opcode::Jal: {
        require(fits_signed(inst.imm, 21), "jal immediate out of range");
        require((inst.imm & 1) == 0, "jal immediate must be even");
        uint32_t imm = static_cast<uint32_t>(inst.imm);
        uint32_t w = (bits(imm, 20, 20) << 31) | (bits(imm, 10, 1) << 21) |
                     (bits(imm, 11, 11) << 20) | (bits(imm, 19, 12) << 12);
        return w | (uint32_t(inst.rd) << 7) | kOpcJal;
    }
    case Opcode::Jalr:
        return itype(kOpcJalr, 0);
    case Opcode::Branch: {
        require(fits_signed(inst.imm, 13), "branch immediate out of range");
        require((inst.imm & 1) == 0, "branch immediate must be even");
        static constexpr std::array<uint32_t, 6> kFunct3 = {0b000, 0b001, 0b100,
                                                            0b101, 0b110, 0b111};
        uint32_t imm = static_cast<uint32_t>(inst.imm);
        uint32_t w = (bits(imm, 12, 12) << 31) | (bits(imm, 10, 5) << 25) |
                     (bits(imm, 4, 1) << 8) | (bits(imm, 11, 11) << 7);
        return w | (uint32_t(inst.rs2) << 20) | (uint32_t(inst.rs1) << 15) |
               (kFunct3[static_cast<int>(inst.cond)] << 12) | kOpcBranch;
    }
    case Opcode::Load: {
        uint32_t funct3;
        switch (inst.width) {
        case 1: funct3 = 0b000; break;
        case 2: funct3 = 0b001; break;
        case 4: funct3 = 0b010; break;
        default: throw EncodeError("load width must be 1, 2 or 4");
        }
        if (inst.load_unsigned) {
            require(inst.width != 4, "lwu is not an RV32I instruction");
            funct3 |= 0b100;
        }
        return itype(kOpcLoad, funct3);
    }
    case Opcode::Store: {
        uint32_t funct3;
        switch (inst.width) {
        case 1: funct3 = 0b000; break;
        case 2: funct3 = 0b001; break;
        case 4: funct3 = 0b010; break;
        default: throw EncodeError("store width must be 1, 2 or 4");
        }
        require(fits_signed(inst.imm, 12), "store offset out of range");
        uint32_t imm = static_cast<uint32_t>(inst.imm);
        return (bits(imm, 11, 5) << 25) | (uint32_t(inst.rs2) << 20) |
               (uint32_t(inst.rs1) << 15) | (funct3 << 12) | (bits(imm, 4, 0) << 7) |
               kOpcStore;
    }
    case Opcode::AluImm: {
        switch (inst.alu) {
        case AluOp::Add: return itype(kOpcAluImm, 0b000);
        case AluOp::Slt: return itype(kOpcAluImm, 0b010);
        case AluOp::Sltu: return itype(kOpcAluImm, 0b011);
        case AluOp::Xor: return itype(kOpcAluImm, 0b100);
        case AluOp::Or: return itype(kOpcAluImm, 0b110);
        case AluOp::And: return itype(kOpcAluImm, 0b111);
        case AluOp::Sll:
        case AluOp::Srl:
        case AluOp::Sra: {
            require(inst.imm >= 0 && inst.imm < 32, "shift amount out of range");
            uint32_t funct3 = inst.alu == AluOp::Sll ? 0b001 : 0b101;
            uint32_t funct7 = inst.alu == AluOp::Sra ? 0b0100000u : 0u;
            return (funct7 << 25) | (static_cast<uint32_t>(inst.imm) << 20) |
                   (uint32_t(inst.rs1) << 15) | (funct3 << 12) | (uint32_t(inst.rd) << 7) |
                   kOpcAluImm;
        }
        case AluOp::Sub: throw EncodeError("subi does not exist; use addi with negated imm");
        }
        break;
    }
    case Opcode::AluReg: {
        uint32_t funct3, funct7 = 0;
        switch (inst.alu) {
        case AluOp::Add: funct3 = 0b000; break;
        case AluOp::Sub: funct3 = 0b000; funct7 = 0b0100000; break;
        case AluOp::Sll: funct3 = 0b001; break;
        case AluOp::Slt: funct3 = 0b010; break;
        case AluOp::Sltu: funct3 = 0b011; break;
        case AluOp::Xor: funct3 = 0b100; break;
        case AluOp::Srl: funct3 = 0b101; break;
        case AluOp::Sra: funct3 = 0b101; funct7 = 0b0100000; break;
        case AluOp::Or: funct3 = 0b110; break;
        case AluOp::And: funct3 = 0b111; break;
        default: throw EncodeError("bad alu op");
        }
        return (funct7 << 25) | (uint32_t(inst.rs2) << 20) | (uint32_t(inst.rs1) << 15) |
               (funct3 << 12) | (uint32_t(inst.rd) << 7) | kOpcAluReg;
    }
    case Opcode::CsrReadWrite:
    case Opcode::CsrReadSet: {
        require(inst.csr < 0x1000, "csr address out of range");
        uint32_t funct3 = inst.op == Opcode::CsrReadWrite ? 0b001 : 0b010;
        return (uint32_t(inst.csr) << 20) | (uint32_t(inst.rs1) << 15) | (funct3 << 12) |
               (uint32_t(inst.rd) << 7) | kOpcSystem;
    }
    case Opcode::Ecall:
        return kOpcSystem;
    case Opcode::Ebreak:
        return (1u << 20) | kOpcSystem;
    case Opcode::Illegal:
        throw EncodeError("cannot encode an illegal instruction");
    }
    throw EncodeError("cannot encode instruction");
}

const char* opcode_name(Opcode op) {
    switch (op) {
    case Opcode::Illegal: return "illegal";
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
    }
    return "?";
}

std::string disasm(const Instruction& inst) {
    char buf[96];
    auto r = [](uint8_t n) { return static_cast<int>(n); };
    switch (inst.op) {
    case Opcode::Lui:
        snprintf(buf, sizeof buf, "lui x%d, 0x%x", r(inst.rd), inst.imm);
        break;
    case Opcode::Auipc:
        snprintf(buf, sizeof buf, "auipc x%d, 0x%x", r(inst.rd), inst.imm);
        break;
    case Opcode::Jal:
        snprintf(buf, sizeof buf, "jal x%d, %d", r(inst.rd), inst.imm);
        break;
    case Opcode::Jalr:
        snprintf(buf, sizeof buf, "jalr x%d, %d(x%d)", r(inst.rd), inst.imm, r(inst.rs1));
        break;
    case Opcode::Branch: {
        static const char* kNames[] = {"beq", "bne", "blt", "bge", "bltu", "bgeu"};
        snprintf(buf, sizeof buf, "%s x%d, x%d, %d", kNames[static_cast<int>(inst.cond)],
                 r(inst.rs1), r(inst.rs2), inst.imm);
        break;
    }
    case Opcode::Load: {
        const char* m = inst.width == 1 ? (inst.load_unsigned ? "lbu" : "lb")
                        : inst.width == 2 ? (inst.load_unsigned ? "lhu" : "lh")
                                          : "lw";
        snprintf(buf, sizeof buf, "%s x%d, %d(x%d)", m, r(inst.rd), inst.imm, r(inst.rs1));
        break;
    }
    case Opcode::Store: {
        const char* m = inst.width == 1 ? "sb" : inst.width == 2 ? "sh" : "sw";
        snprintf(buf, sizeof buf, "%s x%d, %d(x%d)", m, r(inst.rs2), inst.imm, r(inst.rs1));
        break;
    }
    case Opcode::AluImm: {
        static const char* kNames[] = {"addi", "?",    "slli", "slti", "sltiu",
                                       "xori", "srli", "srai", "ori",  "andi"};
        snprintf(buf, sizeof buf, "%s x%d, x%d, %d", kNames[static_cast<int>(inst.alu)],
                 r(inst.rd), r(inst.rs1), inst.imm);
        break;
    }
    case Opcode::AluReg: {
        static const char* kNames[] = {"add", "sub", "sll", "slt", "sltu",
                                       "xor", "srl", "sra", "or",  "and"};
        snprintf(buf, sizeof buf, "%s x%d, x%d, x%d", kNames[static_cast<int>(inst.alu)],
                 r(inst.rd), r(inst.rs1), r(inst.rs2));
        break;
    }
    case Opcode::CsrReadWrite:
        snprintf(buf, sizeof buf, "csrrw x%d, 0x%03x, x%d", r(inst.rd), inst.csr, r(inst.rs1));
        break;
    case Opcode::CsrReadSet:
        snprintf(buf, sizeof buf, "csrrs x%d, 0x%03x, x%d", r(inst.rd), inst.csr, r(inst.rs1));
        break;
    case Opcode::Ecall:
        return "ecall";
    case Opcode::Ebreak:
        return "ebreak";
    case Opcode::Illegal:
        snprintf(buf, sizeof buf, ".word 0x%08x", inst.raw);
        break;
    }
    return buf;
}

std::optional<int> parse_register(std::string_view name) {
    if (name.size() >= 2 && name[0] == 'x') {
        int idx = 0;
        for (size_t i = 1; i < name.size(); ++i) {
            if (name[i] < '0' || name[i] > '9') return std::nullopt;
            idx = idx * 10 + (name[i] - '0');
            if (idx > 31) return std::nullopt;
        }
        if (name.size() > 2 && name[1] == '0') return std::nullopt;  // no leading zeros
        return idx;
    }
    static const std::pair<const char*, int> kAbi[] = {
        {"zero", 0}, {"ra", 1},  {"sp", 2},  {"gp", 3},  {"tp", 4},  {"t0", 5},
        {"t1", 6},   {"t2", 7},  {"s0", 8},  {"fp", 8},  {"s1", 9},  {"a0", 10},
        {"a1", 11},  {"a2", 12}, {"a3", 13}, {"a4", 14}, {"a5", 15}, {"a6", 16},
        {"a7", 17},  {"s2", 18}, {"s3", 19}, {"s4", 20}, {"s5", 21}, {"s6", 22},
        {"s7", 23},  {"s8", 24}, {"s9", 25}, {"s10", 26}, {"s11", 27}, {"t3", 28},
        {"t4", 29},  {"t5", 30}, {"t6", 31}};
    for (const auto& [abi, idx] : kAbi)
        if (name == abi) return idx;
    return std::nullopt;
}

}  // namespace pulp

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pulp {

// Supported subset: RV32I base integer instructions plus CSRRW/CSRRS for
// the PULP configuration block. No M/A/F/C extensions.
enum class Opcode : uint8_t {
    Illegal,
    Lui,
    Auipc,
    Jal,
    Jalr,
    Branch,
    Load,
    Store,
    AluImm,
    AluReg,
    CsrReadWrite,  // csrrw
    CsrReadSet,    // csrrs
    Ecall,
    Ebreak,
};

enum class BranchCond : uint8_t { Eq, Ne, Lt, Ge, Ltu, Geu };

enum class AluOp : uint8_t { Add, Sub, Sll, Slt, Sltu, Xor, Srl, Sra, Or, And };

struct Instruction {
    Opcode op = Opcode::Illegal;
    uint8_t rd = 0;
    uint8_t rs1 = 0;
    uint8_t rs2 = 0;
    int32_t imm = 0;      // sign-extended; shifts hold shamt; LUI/AUIPC hold the 20-bit field
    uint16_t csr = 0;     // CSR address, csr kinds only
    BranchCond cond = BranchCond::Eq;
    AluOp alu = AluOp::Add;
    uint8_t width = 0;    // load/store access size in bytes: 1, 2, 4
    bool load_unsigned = false;  // LBU/LHU
    uint32_t raw = 0;     // original word when produced by decode; not part of identity

    bool is_load() const { return op == Opcode::Load; }
    bool is_store() const { return op == Opcode::Store; }
    bool is_mem() const { return is_load() || is_store(); }
    bool is_control() const {
        return op == Opcode::Jal || op == Opcode::Jalr || op == Opcode::Branch;
    }
    bool is_csr() const {
        return op == Opcode::CsrReadWrite || op == Opcode::CsrReadSet;
    }
};

// Identity over the semantic fields; `raw` is deliberately ignored so that
// decoded and hand-built instructions compare equal.
bool operator==(const Instruction& a, const Instruction& b);
inline bool operator!=(const Instruction& a, const Instruction& b) { return !(a == b); }

struct EncodeError : std::runtime_error {
    explicit EncodeError(const std::string& what) : std::runtime_error(what) {}
};

// Decodes one 32-bit word. Unsupported or ill-formed words come back with
// op == Opcode::Illegal; decode itself never fails.
Instruction decode(uint32_t word);

// Inverse of decode for representable instructions. Throws EncodeError when
// an immediate does not fit its field or a register index is out of range.
uint32_t encode(const Instruction& inst);

// Compact one-line disassembly, for diagnostics and traces.
std::string disasm(const Instruction& inst);

const char* opcode_name(Opcode op);

// Register index for "x0".."x31" or an ABI name (zero, ra, sp, gp, tp,
// t0-t6, s0/fp, s1-s11, a0-a7); nullopt for anything else.
std::optional<int> parse_register(std::string_view name);

}  // namespace pulp

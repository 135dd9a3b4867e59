#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace pulp {

// Number of SMAR groups in the core. Group kSmarGroups-1 is reserved by the
// %protect_call macro for the callee stack window.
constexpr int kSmarGroups = 8;

enum class Privilege : uint8_t { User, Kernel };
enum class Region : uint8_t { Kernel, Primary, Secondary };
enum class AccessKind : uint8_t { Read, Write };

// One secondary memory address range group. cfg mirrors the CSR encoding:
// bit0 read allowed, bit1 write allowed, bit2 valid.
struct SmarGroup {
    uint32_t start = 0;
    uint32_t end = 0;  // half-open upper bound
    uint8_t cfg = 0;

    bool read_allowed() const { return cfg & 1; }
    bool write_allowed() const { return cfg & 2; }
    bool valid() const { return cfg & 4; }
};

constexpr uint8_t kCfgRead = 1;
constexpr uint8_t kCfgWrite = 2;
constexpr uint8_t kCfgValid = 4;

// PPCR, SMAR groups and RAR. Everything resets to zero: with an empty PPCR
// all user code classifies as secondary and no SMAR group grants anything.
struct PulpRegisterFile {
    uint32_t ppcr_start = 0;
    uint32_t ppcr_end = 0;
    std::array<SmarGroup, kSmarGroups> smar{};
    uint32_t rar_addr = 0;
    bool rar_valid = false;
};

bool operator==(const PulpRegisterFile& a, const PulpRegisterFile& b);

// CSR address block. The machine reference in docs/machine.md documents the
// full map.
constexpr uint16_t kCsrPpcrLo = 0x7C0;
constexpr uint16_t kCsrPpcrHi = 0x7C1;
constexpr uint16_t kCsrRar = 0x7E0;
constexpr uint16_t csr_smar_lo(int group) { return static_cast<uint16_t>(0x7C2 + 3 * group); }
constexpr uint16_t csr_smar_hi(int group) { return static_cast<uint16_t>(0x7C3 + 3 * group); }
constexpr uint16_t csr_smar_cfg(int group) { return static_cast<uint16_t>(0x7C4 + 3 * group); }

bool is_pulp_csr(uint16_t csr);
// Name for diagnostics and the assembler's symbolic CSR operands; empty for
// unmapped addresses.
std::string pulp_csr_name(uint16_t csr);
std::optional<uint16_t> pulp_csr_by_name(std::string_view name);

// Kernel if privileged; otherwise primary iff ppcr_start <= pc < ppcr_end.
Region classify_region(uint32_t pc, Privilege privilege, const PulpRegisterFile& regs);

// True iff one valid SMAR group contains [addr, addr+size) entirely and its
// cfg permits the access. An access never matches across two groups.
bool smar_permits(const PulpRegisterFile& regs, uint32_t addr, uint32_t size,
                  AccessKind kind);

enum class CsrWriteResult : uint8_t {
    Ok,
    Violation,  // write rules: PPCR is kernel-only, SMAR is primary/kernel, RAR is never writable
    Unknown,    // not a PULP CSR
};

CsrWriteResult pulp_csr_write(PulpRegisterFile& regs, uint16_t csr, uint32_t value,
                              Region region);

// Reads are allowed from every region. RAR reads back as addr|valid with the
// valid flag in bit 0. nullopt for unmapped addresses.
std::optional<uint32_t> pulp_csr_read(const PulpRegisterFile& regs, uint16_t csr);

const char* region_name(Region region);

}  // namespace pulp

#include "pulp/regs.hpp"

#include <cstdio>
#include <string>

namespace pulp {

bool operator==(const PulpRegisterFile& a, const PulpRegisterFile& b) {
    if (a.ppcr_start != b.ppcr_start || a.ppcr_end != b.ppcr_end) return false;
    if (a.rar_addr != b.rar_addr || a.rar_valid != b.rar_valid) return false;
    for (int i = 0; i < kSmarGroups; ++i) {
        if (a.smar[i].start != b.smar[i].start || a.smar[i].end != b.smar[i].end ||
            a.smar[i].cfg != b.smar[i].cfg)
            return false;
    }
    return true;
}

namespace {

// -1 when not an SMAR csr; otherwise group index, with *field = 0 lo, 1 hi, 2 cfg.
int smar_index(uint16_t csr, int* field) {
    if (csr < csr_smar_lo(0) || csr > csr_smar_cfg(kSmarGroups - 1)) return -1;
    int offset = csr - csr_smar_lo(0);
    *field = offset % 3;
    return offset / 3;
}

}  // namespace

bool is_pulp_csr(uint16_t csr) {
    if (csr == kCsrPpcrLo || csr == kCsrPpcrHi || csr == kCsrRar) return true;
    int field;
    return smar_index(csr, &field) >= 0;
}

std::string pulp_csr_name(uint16_t csr) {
    if (csr == kCsrPpcrLo) return "ppcr_lo";
    if (csr == kCsrPpcrHi) return "ppcr_hi";
    if (csr == kCsrRar) return "rar";
    int field;
    int group = smar_index(csr, &field);
    if (group < 0) return {};
    static const char* kField[] = {"lo", "hi", "cfg"};
    char buf[16];
    snprintf(buf, sizeof buf, "smar%d_%s", group, kField[field]);
    return buf;
}

std::optional<uint16_t> pulp_csr_by_name(std::string_view name) {
    if (name == "ppcr_lo") return kCsrPpcrLo;
    if (name == "ppcr_hi") return kCsrPpcrHi;
    if (name == "rar") return kCsrRar;
    if (name.size() >= 7 && name.substr(0, 4) == "smar") {
        char digit = name[4];
        if (digit < '0' || digit > '0' + kSmarGroups - 1) return std::nullopt;
        int group = digit - '0';
        std::string_view field = name.substr(5);
        if (field == "_lo") return csr_smar_lo(group);
        if (field == "_hi") return csr_smar_hi(group);
        if (field == "_cfg") return csr_smar_cfg(group);
    }
    return std::nullopt;
}

Region classify_region(uint32_t pc, Privilege privilege, const PulpRegisterFile& regs) {
    if (privilege == Privilege::Kernel) return Region::Kernel;
    if (pc >= regs.ppcr_start && pc < regs.ppcr_end) return Region::Primary;
    return Region::Secondary;
}

bool smar_permits(const PulpRegisterFile& regs, uint32_t addr, uint32_t size,
                  AccessKind kind) {
    uint64_t lo = addr;
    uint64_t hi = lo + size;
    for (const SmarGroup& g : regs.smar) {
        if (!g.valid()) continue;
        if (kind == AccessKind::Read && !g.read_allowed()) continue;
        if (kind == AccessKind::Write && !g.write_allowed()) continue;
        if (lo >= g.start && hi <= g.end) return true;
    }
    return false;
}

CsrWriteResult pulp_csr_write(PulpRegisterFile& regs, uint16_t csr, uint32_t value,
                              Region region) {
    if (csr == kCsrPpcrLo || csr == kCsrPpcrHi) {
        if (region != Region::Kernel) return CsrWriteResult::Violation;
        (csr == kCsrPpcrLo ? regs.ppcr_start : regs.ppcr_end) = value;
        return CsrWriteResult::Ok;
    }
    if (csr == kCsrRar) return CsrWriteResult::Violation;  // hardware-managed only
    int field;
    int group = smar_index(csr, &field);
    if (group < 0) return CsrWriteResult::Unknown;
    if (region == Region::Secondary) return CsrWriteResult::Violation;
    SmarGroup& g = regs.smar[group];
    switch (field) {
    case 0: g.start = value; break;
    case 1: g.end = value; break;
    case 2: g.cfg = static_cast<uint8_t>(value & 7); break;
    }
    return CsrWriteResult::Ok;
}

std::optional<uint32_t> pulp_csr_read(const PulpRegisterFile& regs, uint16_t csr) {
    if (csr == kCsrPpcrLo) return regs.ppcr_start;
    if (csr == kCsrPpcrHi) return regs.ppcr_end;
    if (csr == kCsrRar) return regs.rar_addr | (regs.rar_valid ? 1u : 0u);
    int field;
    int group = smar_index(csr, &field);
    if (group < 0) return std::nullopt;
    const SmarGroup& g = regs.smar[group];
    switch (field) {
    case 0: return g.start;
    case 1: return g.end;
    default: return g.cfg;
    }
}

const char* region_name(Region region) {
    switch (region) {
    case Region::Kernel: return "kernel";
    case Region::Primary: return "primary";
    case Region::Secondary: return "secondary";
    }
    return "?";
}

}  // namespace pulp

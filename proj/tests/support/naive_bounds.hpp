#pragma once

// Naive restatement of the data-access rule, used as the oracle in the
// equivalence tests. Deliberately dumb: it walks the access byte by byte and
// asks whether a single valid group with the right permission contains every
// one of them. No early-outs shared with the production predicate.

#include <cstdint>

#include "pulp/regs.hpp"

namespace oracle {

inline bool naive_data_access_ok(pulp::Region region, uint64_t addr, uint64_t size,
                                 pulp::AccessKind kind,
                                 const pulp::PulpRegisterFile& regs) {
    if (region == pulp::Region::Kernel || region == pulp::Region::Primary) return true;
    for (const pulp::SmarGroup& g : regs.smar) {
        if ((g.cfg & pulp::kCfgValid) == 0) continue;
        if (kind == pulp::AccessKind::Read && (g.cfg & pulp::kCfgRead) == 0) continue;
        if (kind == pulp::AccessKind::Write && (g.cfg & pulp::kCfgWrite) == 0) continue;
        bool every_byte_inside = size > 0;
        for (uint64_t i = 0; i < size; ++i) {
            uint64_t byte = addr + i;
            if (byte < g.start || byte >= g.end) {
                every_byte_inside = false;
                break;
            }
        }
        if (every_byte_inside) return true;
    }
    return false;
}

// Naive region rule: kernel privilege wins, then the pc range.
inline pulp::Region naive_region(uint32_t pc, pulp::Privilege priv,
                                 const pulp::PulpRegisterFile& regs) {
    if (priv == pulp::Privilege::Kernel) return pulp::Region::Kernel;
    bool inside = pc >= regs.ppcr_start && pc < regs.ppcr_end;
    return inside ? pulp::Region::Primary : pulp::Region::Secondary;
}

}  // namespace oracle

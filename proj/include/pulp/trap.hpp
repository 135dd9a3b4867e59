#pragma once

#include <cstdint>

#include "pulp/regs.hpp"

namespace pulp {

enum class TrapKind : uint8_t {
    OutOfBoundAccess,
    ReturnAddressError,
    PulpConfigViolation,
    BoundaryViolation,
    IllegalInstruction,
    MisalignedAccess,
    MemFault,
};

// Every cause carries the faulting pc; the remaining fields are populated per
// kind and left zero otherwise.
struct TrapCause {
    TrapKind kind = TrapKind::IllegalInstruction;
    uint32_t pc = 0;
    uint32_t addr = 0;                      // data-access faults
    AccessKind access = AccessKind::Read;   // OutOfBoundAccess
    uint32_t target = 0;                    // control-flow faults
    uint32_t expected = 0;                  // ReturnAddressError: RAR value at the check
    bool expected_valid = false;            // ReturnAddressError: RAR valid bit
    uint32_t word = 0;                      // IllegalInstruction
    uint16_t csr = 0;                       // PulpConfigViolation
};

const char* trap_name(TrapKind kind);

}  // namespace pulp

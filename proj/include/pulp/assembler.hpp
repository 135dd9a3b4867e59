#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pulp/image.hpp"

namespace pulp {

// Two-pass assembler for the RV32I subset plus the protection macros.
//
// Syntax (full reference in docs/assembly.md):
//   label:            instructions and data take the current location
//   .org ADDR         move the location counter (starts a new segment)
//   .entry SYM        entry point; defaults to the primary start
//   .primary_start    begin the primary range here (or at an operand symbol)
//   .primary_end      end the primary range
//   .word E, ...      32-bit little-endian values (labels allowed)
//   .byte E, ...      8-bit values
//   .asciz "s"        bytes plus NUL terminator
//   .space N[, F]     N bytes of fill F (default 0)
//   .align N          zero-pad to an N-byte boundary (power of two)
//   %start_protect(addr, len, cfg, index)
//   %end_protect(index)
//   %protect_call callee, (addr, len, cfg, index), ...
//     cfg is R, W or RW; a 3-element tuple (addr, cfg, index) infers len from
//     addr's declared size. Expansions clobber x5/x6.
// Comments run from '#' or ';' to end of line. Immediate expressions combine
// integers, labels and sizeof(label) with + and -. A label's declared size is
// the size of the data directive immediately following it.

enum class AsmErrorKind : uint8_t {
    SyntaxError,
    UnresolvedLabel,
    MissingPrimaryRange,
    OverlappingSegments,
    ImmediateOutOfRange,
    IndexOutOfRange,     // macro SMAR group index
    StaticRegionError,   // macro expansion placed outside the primary range
    UnknownLength,       // protect tuple with no derivable length
};

struct AsmError : std::runtime_error {
    AsmErrorKind kind;
    int line;  // 1-based source line; 0 when not tied to a line

    AsmError(AsmErrorKind k, int l, const std::string& what)
        : std::runtime_error(l > 0 ? "line " + std::to_string(l) + ": " + what : what),
          kind(k),
          line(l) {}
};

const char* asm_error_name(AsmErrorKind kind);

// Assembles source text into an image. Identical source yields a
// byte-identical image. Throws AsmError.
ProgramImage assemble(std::string_view source);

// Reads a file and assembles it; file errors surface as AsmError with line 0.
ProgramImage assemble_file(const std::string& path);

}  // namespace pulp

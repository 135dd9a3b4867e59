#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pulp/regs.hpp"

namespace pulp {

// Software side of the isolation mechanism: the start_protect/end_protect
// pair and the call-site instrumentation a protecting compiler would inject.
// The expansions produce assembly source lines; the assembler splices them in
// place of %start_protect / %end_protect / %protect_call and resolves the
// operands with its normal symbol machinery. Placement inside the primary
// range is the assembler's job (it knows the layout); at run time the
// configuration-write rules enforce it regardless.

enum class RuntimeErrorKind : uint8_t {
    IndexOutOfRange,  // SMAR group index outside 0..kSmarGroups-1
    UnknownLength,    // no len operand and the addr symbol has no declared size
    BadConfig,        // cfg operand not R, W or RW
    ScratchOperand,   // operand names x5/x6, which the expansion clobbers
    DuplicateIndex,   // one call site uses a group twice
    ReservedIndex,    // call-site tuple names the reserved stack-window group
};

struct RuntimeError : std::runtime_error {
    RuntimeErrorKind kind;
    RuntimeError(RuntimeErrorKind k, const std::string& what)
        : std::runtime_error(what), kind(k) {}
};

const char* runtime_error_name(RuntimeErrorKind kind);

// One (addr, len, cfg, index) tuple. addr and len carry operand text —
// a register, symbol, integer literal, or sizeof(sym) — resolved later by the
// assembler. An empty len means "infer from addr's declared size" and must go
// through effective_length before expansion.
struct ProtectSpec {
    std::string addr;
    std::string len;
    uint8_t cfg = 0;  // kCfgRead/kCfgWrite bits; expansion adds kCfgValid
    int index = 0;
};

// An instrumented call: %protect_call callee, (addr, len, cfg, index)...
struct CallSiteSpec {
    std::string callee;
    std::vector<ProtectSpec> protects;
};

// The highest group is reserved by instrument_call for the callee stack
// window [sp - kStackWindowBytes, sp), granted RW around every protected
// call. Bare-metal stacks grow down from sp; without this grant no callee
// with locals could run.
constexpr int kStackWindowGroup = kSmarGroups - 1;
constexpr uint32_t kStackWindowBytes = 4096;

// CSR writes retired per instrumented call (stack-window set + clear) and per
// protect tuple (group set + clear). config_instructions of a program that
// does all its configuration through these macros is exactly
//   calls * kPerCallConfigCost + tuples * kPerProtectConfigCost.
constexpr uint64_t kPerCallConfigCost = 6;
constexpr uint64_t kPerProtectConfigCost = 6;

// "R", "W", "RW"/"WR" (case-insensitive) -> cfg bits. Throws BadConfig.
uint8_t parse_cfg(std::string_view text);

// smar<k> <- [addr, addr+len) with cfg|valid. Emits scratch arithmetic in
// x5/x6 then the three CSR writes (lo, hi, cfg). Throws IndexOutOfRange /
// ScratchOperand / UnknownLength (empty len).
std::vector<std::string> expand_start_protect(const ProtectSpec& spec);

// Clears smar<index>: cfg first so the group is invalid before the bounds
// change, then both bounds to zero. Idempotent. Throws IndexOutOfRange.
std::vector<std::string> expand_end_protect(int index);

// Full call-site sequence: every tuple's start_protect, the stack-window
// grant, jal x1 to the callee, then the clears in reverse (stack window
// first). Throws the tuple errors plus DuplicateIndex / ReservedIndex.
std::vector<std::string> instrument_call(const CallSiteSpec& site);

// Resolves the tuple's length operand: explicit text passes through
// unchanged (constant, symbol, sizeof(sym) or register); a string literal
// yields bytes+1; empty text falls back to the declared size of the addr
// symbol via sizeof_of. Throws UnknownLength when no length can be derived.
using SizeLookup = std::function<std::optional<uint32_t>(std::string_view)>;
std::string effective_length(const ProtectSpec& spec, const SizeLookup& sizeof_of);

}  // namespace pulp

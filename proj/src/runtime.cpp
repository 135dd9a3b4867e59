#include "pulp/runtime.hpp"

#include <set>

#include "pulp/isa.hpp"
#include "pulp/text.hpp"

namespace pulp {

namespace {

// The expansions clobber x5/x6, so tuple operands must not live there.
bool is_scratch(std::string_view operand) {
    auto reg = parse_register(operand);
    return reg && (*reg == 5 || *reg == 6);
}

void check_index(int index) {
    if (index < 0 || index >= kSmarGroups)
        throw RuntimeError(RuntimeErrorKind::IndexOutOfRange,
                           "SMAR group index " + std::to_string(index) +
                               " out of range 0.." + std::to_string(kSmarGroups - 1));
}

std::string smar_name(int group, const char* field) {
    return "smar" + std::to_string(group) + "_" + field;
}

}  // namespace

const char* runtime_error_name(RuntimeErrorKind kind) {
    switch (kind) {
    case RuntimeErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case RuntimeErrorKind::UnknownLength: return "UnknownLength";
    case RuntimeErrorKind::BadConfig: return "BadConfig";
    case RuntimeErrorKind::ScratchOperand: return "ScratchOperand";
    case RuntimeErrorKind::DuplicateIndex: return "DuplicateIndex";
    case RuntimeErrorKind::ReservedIndex: return "ReservedIndex";
    }
    return "?";
}

uint8_t parse_cfg(std::string_view text) {
    uint8_t cfg = 0;
    if (text.empty()) throw RuntimeError(RuntimeErrorKind::BadConfig, "empty cfg");
    for (char c : text) {
        if (c == 'r' || c == 'R') cfg |= kCfgRead;
        else if (c == 'w' || c == 'W') cfg |= kCfgWrite;
        else
            throw RuntimeError(RuntimeErrorKind::BadConfig,
                               "cfg must combine R and W, got '" + std::string(text) + "'");
    }
    return cfg;
}

std::vector<std::string> expand_start_protect(const ProtectSpec& spec) {
    check_index(spec.index);
    if (spec.len.empty())
        throw RuntimeError(RuntimeErrorKind::UnknownLength,
                           "no length for protect of '" + spec.addr + "'");
    if (is_scratch(spec.addr) || is_scratch(spec.len))
        throw RuntimeError(RuntimeErrorKind::ScratchOperand,
                           "protect operands may not use x5/x6");
    if (auto len = parse_int(spec.len); len && *len < 0)
        throw RuntimeError(RuntimeErrorKind::UnknownLength,
                           "negative protect length " + spec.len);

    std::vector<std::string> out;
    if (parse_register(spec.addr))
        out.push_back("mv x5, " + spec.addr);
    else
        out.push_back("li x5, " + spec.addr);
    if (parse_register(spec.len)) {
        out.push_back("add x6, x5, " + spec.len);
    } else {
        out.push_back("li x6, " + spec.len);
        out.push_back("add x6, x5, x6");
    }
    out.push_back("csrrw x0, " + smar_name(spec.index, "lo") + ", x5");
    out.push_back("csrrw x0, " + smar_name(spec.index, "hi") + ", x6");
    out.push_back("li x5, " + std::to_string(spec.cfg | kCfgValid));
    out.push_back("csrrw x0, " + smar_name(spec.index, "cfg") + ", x5");
    return out;
}

std::vector<std::string> expand_end_protect(int index) {
    check_index(index);
    return {
        "csrrw x0, " + smar_name(index, "cfg") + ", x0",
        "csrrw x0, " + smar_name(index, "lo") + ", x0",
        "csrrw x0, " + smar_name(index, "hi") + ", x0",
    };
}

std::vector<std::string> instrument_call(const CallSiteSpec& site) {
    std::set<int> used;
    for (const auto& spec : site.protects) {
        check_index(spec.index);
        if (spec.index == kStackWindowGroup)
            throw RuntimeError(RuntimeErrorKind::ReservedIndex,
                               "group " + std::to_string(kStackWindowGroup) +
                                   " is reserved for the stack window");
        if (!used.insert(spec.index).second)
            throw RuntimeError(RuntimeErrorKind::DuplicateIndex,
                               "group " + std::to_string(spec.index) +
                                   " used twice in one call site");
    }

    std::vector<std::string> out;
    for (const auto& spec : site.protects) {
        auto lines = expand_start_protect(spec);
        out.insert(out.end(), lines.begin(), lines.end());
    }
    // Stack-window grant: [sp - kStackWindowBytes, sp) RW for the callee's
    // frame and spills.
    out.push_back("mv x6, x2");
    out.push_back("li x5, " + std::to_string(kStackWindowBytes));
    out.push_back("sub x5, x6, x5");
    out.push_back("csrrw x0, " + smar_name(kStackWindowGroup, "lo") + ", x5");
    out.push_back("csrrw x0, " + smar_name(kStackWindowGroup, "hi") + ", x6");
    out.push_back("li x5, " + std::to_string(kCfgRead | kCfgWrite | kCfgValid));
    out.push_back("csrrw x0, " + smar_name(kStackWindowGroup, "cfg") + ", x5");

    out.push_back("jal x1, " + site.callee);

    // Clears in reverse bracket order: stack window first, then the tuples.
    auto clear = expand_end_protect(kStackWindowGroup);
    out.insert(out.end(), clear.begin(), clear.end());
    for (auto it = site.protects.rbegin(); it != site.protects.rend(); ++it) {
        clear = expand_end_protect(it->index);
        out.insert(out.end(), clear.begin(), clear.end());
    }
    return out;
}

std::string effective_length(const ProtectSpec& spec, const SizeLookup& sizeof_of) {
    std::string_view len = trim(spec.len);
    if (!len.empty()) {
        if (len.front() == '"') {
            auto text = unquote_string(len);
            if (!text)
                throw RuntimeError(RuntimeErrorKind::UnknownLength,
                                   "malformed string literal in length");
            return std::to_string(text->size() + 1);  // include the terminator
        }
        return std::string(len);
    }
    std::string_view addr = trim(spec.addr);
    if (!parse_register(addr) && !parse_int(addr)) {
        if (auto size = sizeof_of(addr)) return std::to_string(*size);
        throw RuntimeError(RuntimeErrorKind::UnknownLength,
                           "'" + std::string(addr) + "' has no declared size");
    }
    throw RuntimeError(RuntimeErrorKind::UnknownLength,
                       "no length annotation for '" + std::string(addr) + "'");
}

}  // namespace pulp

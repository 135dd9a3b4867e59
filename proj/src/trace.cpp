#include "pulp/trace.hpp"

#include <set>

namespace pulp {

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed) {
    const auto* p = static_cast<const uint8_t*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t trace_hash(const std::vector<nlohmann::json>& events) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& ev : events) {
        std::string line = ev.dump();
        h = fnv1a64(line.data(), line.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    return h;
}

namespace {

using nlohmann::json;

// Accept any integer-valued non-negative number regardless of how the json
// object stores it: parsed documents use the unsigned type, but documents
// built in code may carry the same value as a signed integer.
bool is_uint(const json& v) {
    if (v.is_number_unsigned()) return true;
    return v.is_number_integer() && v.get<int64_t>() >= 0;
}

bool is_u32(const json& v) { return is_uint(v) && v.get<uint64_t>() <= 0xFFFFFFFFull; }

std::optional<std::string> check_pulpregs(const json& snap) {
    if (!snap.is_object()) return "pulpregs must be an object";
    if (!snap.contains("ppcr") || !snap["ppcr"].is_array() || snap["ppcr"].size() != 2)
        return "pulpregs.ppcr must be [start, end]";
    if (!snap.contains("smar") || !snap["smar"].is_array())
        return "pulpregs.smar must be an array";
    for (const auto& g : snap["smar"]) {
        if (!g.is_array() || g.size() != 3) return "smar group must be [start, end, cfg]";
        if (!is_u32(g[0]) || !is_u32(g[1]) || !is_u32(g[2])) return "smar group fields must be u32";
    }
    if (!snap.contains("rar") || !snap["rar"].is_array() || snap["rar"].size() != 2)
        return "pulpregs.rar must be [addr, valid]";
    return std::nullopt;
}

}  // namespace

std::optional<std::string> validate_trace_event(const nlohmann::json& ev) {
    if (!ev.is_object()) return "event must be an object";
    for (const char* field : {"step", "pc", "region", "kind"})
        if (!ev.contains(field)) return std::string("missing required field: ") + field;
    if (!is_uint(ev["step"])) return "step must be a non-negative integer";
    if (!is_u32(ev["pc"])) return "pc must be u32";

    static const std::set<std::string> kRegions = {"kernel", "primary", "secondary"};
    if (!ev["region"].is_string() || !kRegions.count(ev["region"].get<std::string>()))
        return "region must be kernel|primary|secondary";

    static const std::set<std::string> kKinds = {
        "init",   "lui",   "auipc",   "jal",    "jalr",  "branch", "load",
        "store",  "alu-imm", "alu-reg", "csrrw", "csrrs", "ecall",  "ebreak",
        "illegal"};
    if (!ev["kind"].is_string() || !kKinds.count(ev["kind"].get<std::string>()))
        return "unknown event kind";

    if (ev.contains("addr") && !is_u32(ev["addr"])) return "addr must be u32";
    if (ev.contains("target") && !is_u32(ev["target"])) return "target must be u32";
    if (ev.contains("size")) {
        if (!is_uint(ev["size"])) return "size must be a non-negative integer";
        uint64_t s = ev["size"].get<uint64_t>();
        if (s != 1 && s != 2 && s != 4) return "size must be 1, 2 or 4";
    }
    if (ev.contains("access")) {
        std::string a = ev["access"].is_string() ? ev["access"].get<std::string>() : "";
        if (a != "r" && a != "w") return "access must be r|w";
    }
    if (ev.contains("verdict")) {
        if (!ev["verdict"].is_string()) return "verdict must be a string";
        std::string v = ev["verdict"].get<std::string>();
        if (v != "pass" && v.rfind("trap:", 0) != 0) return "verdict must be pass or trap:<cause>";
    }
    if (ev.contains("effect")) {
        static const std::set<std::string> kEffects = {"none", "set_rar", "check_rar",
                                                       "violation"};
        if (!ev["effect"].is_string() || !kEffects.count(ev["effect"].get<std::string>()))
            return "unknown control effect";
    }
    if (ev.contains("rar")) {
        const auto& r = ev["rar"];
        if (!r.is_array() || r.size() != 2 || !is_u32(r[0]) || !r[1].is_boolean())
            return "rar must be [addr, valid]";
    }
    if (ev.contains("pulpregs")) {
        if (auto err = check_pulpregs(ev["pulpregs"])) return err;
    }
    return std::nullopt;
}

}  // namespace pulp

#include "pulp/audit.hpp"

#include <array>
#include <cstdio>

namespace pulp {

namespace {

struct Group {
    uint64_t start = 0, end = 0;
    unsigned cfg = 0;
};

struct Replay {
    uint64_t ppcr_start = 0, ppcr_end = 0;
    std::vector<Group> smar;
    bool ever_granted = false;
    // RAR expectation: armed by a primary->secondary call, consumed by the
    // matching return.
    bool link_armed = false;
    uint64_t link = 0;

    void apply_snapshot(const nlohmann::json& regs) {
        ppcr_start = regs["ppcr"][0].get<uint64_t>();
        ppcr_end = regs["ppcr"][1].get<uint64_t>();
        smar.clear();
        for (const auto& g : regs["smar"]) {
            Group group;
            group.start = g[0].get<uint64_t>();
            group.end = g[1].get<uint64_t>();
            group.cfg = g[2].get<unsigned>();
            if (group.cfg & 4) ever_granted = true;
            smar.push_back(group);
        }
    }

    bool in_primary(uint64_t pc) const { return pc >= ppcr_start && pc < ppcr_end; }

    // Deliberately naive containment: scan every group.
    bool permits(uint64_t addr, uint64_t size, bool write) const {
        for (const auto& g : smar) {
            if (!(g.cfg & 4)) continue;
            if (addr < g.start || addr + size > g.end) continue;
            if (write ? (g.cfg & 2) : (g.cfg & 1)) return true;
        }
        return false;
    }

    bool any_valid() const {
        for (const auto& g : smar)
            if (g.cfg & 4) return true;
        return false;
    }
};

std::string where(const nlohmann::json& ev) {
    char buf[64];
    snprintf(buf, sizeof buf, "step %llu pc 0x%llx",
             static_cast<unsigned long long>(ev.value("step", 0ull)),
             static_cast<unsigned long long>(ev.value("pc", 0ull)));
    return buf;
}

}  // namespace

AuditReport audit_trace(const std::vector<nlohmann::json>& events, bool expect_balanced) {
    AuditReport report;
    Replay replay;
    auto flag = [&report](const nlohmann::json& ev, const std::string& what) {
        report.findings.push_back(where(ev) + ": " + what);
    };

    bool initialized = false;
    for (const auto& ev : events) {
        ++report.events;
        const std::string kind = ev.value("kind", "");
        if (!initialized) {
            if (kind != "init" || !ev.contains("pulpregs")) {
                flag(ev, "trace does not begin with an init snapshot");
                return report;
            }
            replay.apply_snapshot(ev["pulpregs"]);
            initialized = true;
            continue;
        }

        const std::string verdict = ev.value("verdict", "pass");
        const bool retired = verdict == "pass";
        const std::string region = ev.value("region", "");

        if (retired && region == "secondary" && (kind == "load" || kind == "store")) {
            ++report.secondary_accesses;
            const uint64_t addr = ev.value("addr", 0ull);
            const uint64_t size = ev.value("size", 0ull);
            const bool write = ev.value("access", "r") == "w";
            if (!replay.permits(addr, size, write))
                flag(ev, "retired secondary " + kind + " outside every SMAR grant");
        }

        // Region-crossing control transfers must carry the RAR protocol.
        if (retired && (kind == "jal" || kind == "jalr" || kind == "branch") &&
            ev.contains("target")) {
            const uint64_t pc = ev.value("pc", 0ull);
            const uint64_t target = ev["target"].get<uint64_t>();
            const std::string effect = ev.value("effect", "none");
            const bool src_primary = region == "primary";
            const bool tgt_primary = replay.in_primary(target);
            if (region != "kernel") {
                if (src_primary && !tgt_primary && (kind == "jal" || kind == "jalr")) {
                    if (effect != "set_rar")
                        flag(ev, "call into secondary did not arm the return register");
                    else {
                        ++report.rar_sets;
                        replay.link_armed = true;
                        replay.link = pc + 4;
                    }
                } else if (!src_primary && tgt_primary) {
                    if (effect != "check_rar") {
                        flag(ev, "entry into primary bypassed the return check");
                    } else {
                        ++report.rar_checks;
                        if (!replay.link_armed)
                            flag(ev, "return into primary with no armed return address");
                        else if (replay.link != target)
                            flag(ev, "return target does not match the armed address");
                        replay.link_armed = false;
                    }
                } else if (effect == "set_rar" || effect == "check_rar") {
                    flag(ev, "unexpected " + effect + " on a non-crossing transfer");
                }
            }
        }

        if (ev.contains("pulpregs")) replay.apply_snapshot(ev["pulpregs"]);
    }

    if (replay.any_valid()) report.balanced = false;
    if (expect_balanced && !report.balanced)
        report.findings.push_back("SMAR grants still valid at end of trace");
    return report;
}

}  // namespace pulp

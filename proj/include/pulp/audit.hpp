#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace pulp {

// Independent trace auditor. Replays a run's event stream using only the
// recorded register-file snapshots and re-derives every protection decision
// with its own naive logic — none of the checker code is involved. Used to
// cross-examine the machine: a passing run must also pass the audit.
struct AuditReport {
    uint64_t events = 0;
    uint64_t secondary_accesses = 0;  // retired secondary loads/stores
    uint64_t rar_sets = 0;            // primary -> secondary calls observed
    uint64_t rar_checks = 0;          // secondary -> primary returns observed
    bool balanced = true;             // every granted SMAR group revoked by trace end
    std::vector<std::string> findings;

    bool ok() const { return findings.empty(); }
};

// expect_balanced additionally requires all SMAR grants revoked at end of
// trace (true for instrumented programs that run to completion).
AuditReport audit_trace(const std::vector<nlohmann::json>& events, bool expect_balanced);

}  // namespace pulp

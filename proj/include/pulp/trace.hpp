#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace pulp {

// Execution traces are JSON Lines: one object per event. The shipped schema
// (docs/trace-schema.json) is the contract; validate_trace_event enforces the
// same rules.
struct TraceSink {
    virtual ~TraceSink() = default;
    virtual void on_event(const nlohmann::json& event) = 0;
};

struct VectorTraceSink final : TraceSink {
    std::vector<nlohmann::json> events;
    void on_event(const nlohmann::json& event) override { events.push_back(event); }
};

// Streams events as they happen; one compact JSON object per line.
struct StreamTraceSink final : TraceSink {
    explicit StreamTraceSink(std::ostream& out) : out_(out) {}
    void on_event(const nlohmann::json& event) override { out_ << event.dump() << '\n'; }

private:
    std::ostream& out_;
};

// nullopt when the event conforms; otherwise a description of the problem.
std::optional<std::string> validate_trace_event(const nlohmann::json& event);

// FNV-1a over the compact serialization of every event, in order.
uint64_t trace_hash(const std::vector<nlohmann::json>& events);

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace pulp

#pragma once

#include "trellis/ids.hpp"
#include "trellis/value.hpp"

#include <string>
#include <vector>

namespace trellis {

/// Ordered event log kept per invocation (and available runtime-wide for
/// tests).  Kinds used by the engine:
///   instantiate, map-params, spawn-at-root, collect-result   (gateway steps)
///   spawn, move, ability, enqueue, complete, disengage       (engine events)
///   migrate, remote-access, checkpoint, kill, recover        (cluster events)
struct TraceEvent {
    std::string kind;
    Value detail = nullptr;
};

class TraceLog {
public:
    void record(std::string kind, Value detail = nullptr) {
        events_.push_back(TraceEvent{std::move(kind), std::move(detail)});
    }

    const std::vector<TraceEvent>& events() const { return events_; }
    void clear() { events_.clear(); }

    /// Kinds in order, convenient for asserting protocols.
    std::vector<std::string> kinds() const {
        std::vector<std::string> out;
        out.reserve(events_.size());
        for (const auto& e : events_) out.push_back(e.kind);
        return out;
    }

    Value to_json() const {
        Value arr = Value::array();
        for (const auto& e : events_) arr.push_back(Value{{"kind", e.kind}, {"detail", e.detail}});
        return arr;
    }

private:
    std::vector<TraceEvent> events_;
};

}  // namespace trellis

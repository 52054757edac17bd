#pragma once

#include "trellis/errors.hpp"
#include "trellis/ids.hpp"
#include "trellis/runtime.hpp"
#include "trellis/value.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trellis {

/// Copies of one node's properties on distinct machines.  Writes go to the
/// primary and propagate synchronously before the write completes; after
/// quiescence all copies are structurally equal.
struct ReplicaSet {
    NodeId node;
    MachineId primary;
    int rep_factor = 1;
    std::map<MachineId, ValueMap> copies;
};

class ReplicaStore {
public:
    bool replicated(NodeId n) const { return sets_.count(n) != 0; }
    const ReplicaSet& set(NodeId n) const { return sets_.at(n); }

    void create(NodeId node, MachineId primary, const std::vector<MachineId>& holders,
                const ValueMap& initial, int rep_factor) {
        ReplicaSet rs{node, primary, rep_factor, {}};
        for (MachineId m : holders) rs.copies[m] = initial;
        sets_[node] = std::move(rs);
    }

    /// Push the committed property map to every copy; returns the number of
    /// propagation messages (copies beyond the primary).
    std::size_t propagate(NodeId node, const ValueMap& props) {
        auto it = sets_.find(node);
        if (it == sets_.end()) return 0;
        for (auto& [m, copy] : it->second.copies) copy = props;
        return it->second.copies.size() - 1;
    }

    bool has_copy(NodeId node, MachineId m) const {
        auto it = sets_.find(node);
        return it != sets_.end() && it->second.copies.count(m) != 0;
    }

    /// Re-point primaries away from a dead machine onto the lowest-id alive
    /// copy holder.  Sets with no surviving copy keep their dead primary and
    /// become unavailable until revived.
    void promote_away_from(MachineId dead, const std::function<bool(MachineId)>& alive) {
        for (auto& [node, rs] : sets_) {
            if (rs.primary != dead) continue;
            for (const auto& [m, copy] : rs.copies) {
                if (alive(m)) {
                    rs.primary = m;
                    break;
                }
            }
        }
    }

    const std::map<NodeId, ReplicaSet>& sets() const { return sets_; }

private:
    std::map<NodeId, ReplicaSet> sets_;
};

/// Durable serialization of a walker at a step boundary.
struct WalkerCheckpoint {
    WalkerId walker;
    std::uint64_t sequence = 0;  // monotone per walker
    Value payload;               // walker_to_json form
    std::uint64_t taken_at_event = 0;
    std::uint64_t step_index = 0;
};

/// Append-only checkpoint record, optionally mirrored to a file using the
/// same structured-text conventions as snapshots (one record per line).
class CheckpointStore {
public:
    void set_file(std::string path) { path_ = std::move(path); }

    const WalkerCheckpoint& append(WalkerId walker, Value payload, std::uint64_t event,
                                   std::uint64_t step_index);

    const WalkerCheckpoint* latest(WalkerId walker) const {
        auto it = records_.find(walker);
        if (it == records_.end() || it->second.empty()) return nullptr;
        return &it->second.back();
    }

    std::size_t count(WalkerId walker) const {
        auto it = records_.find(walker);
        return it == records_.end() ? 0 : it->second.size();
    }

    const std::vector<WalkerCheckpoint>& records(WalkerId walker) const {
        static const std::vector<WalkerCheckpoint> none;
        auto it = records_.find(walker);
        return it == records_.end() ? none : it->second;
    }

private:
    std::map<WalkerId, std::vector<WalkerCheckpoint>> records_;
    std::string path_;
};

/// Committed per-step effects, keyed (walker, step).  Recovery replays the
/// steps committed after the latest checkpoint from this log; re-emitted
/// keys are exactly the deduplication the journal provides.
class EffectLogStore : public EffectSink {
public:
    void commit_step(WalkerId walker, StepEffects effects) override {
        log_[walker][effects.step_index] = std::move(effects);
    }

    const StepEffects* find(WalkerId walker, std::uint64_t step) const {
        auto it = log_.find(walker);
        if (it == log_.end()) return nullptr;
        auto jt = it->second.find(step);
        return jt == it->second.end() ? nullptr : &jt->second;
    }

private:
    std::map<WalkerId, std::map<std::uint64_t, StepEffects>> log_;
};

enum class FaultKind { Kill, Revive };

struct FaultAction {
    std::uint64_t event_index = 0;
    FaultKind kind = FaultKind::Kill;
    MachineId machine;
};

/// Scheduled machine failures, fired by the simulation clock.  File form:
/// [{event_index, action: "kill"|"revive", machine}].
std::vector<FaultAction> parse_fault_plan(const Value& doc);
std::vector<FaultAction> load_fault_plan(const std::string& path);

enum class CheckpointCadence { None, EveryStep, EveryK, OnMigration };

}  // namespace trellis

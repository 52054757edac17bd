#pragma once

#include "trellis/graph.hpp"
#include "trellis/resilience.hpp"
#include "trellis/runtime.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace trellis {

enum class DistributionMode { DataCentric, ComputationCentric, Hybrid };

DistributionMode parse_mode(const std::string& s);
const char* mode_name(DistributionMode m);

/// Knobs for the hybrid per-access decision.  "much smaller than" is a ratio
/// test (x*R <= y); "highly localized" is a same-machine fraction over the
/// access window; "clear path" is a trailing run of same-machine hops.
struct HybridConfig {
    std::uint64_t ratio_r = 4;
    double locality_pct = 0.8;
    int path_run_len = 3;
};

struct ClusterConfig {
    int machines = 1;
    std::uint64_t capacity_bytes = 1ull << 30;
    DistributionMode mode = DistributionMode::DataCentric;
    std::uint64_t consistency_strength = 1;
    std::uint64_t base_latency = 10;
    std::uint64_t seed = 1;
    HybridConfig hybrid;
    /// Extensions beyond the scenario-config schema, defaulted off.
    int rep_factor = 0;  // >0: replicate every placed/created node
    CheckpointCadence cadence = CheckpointCadence::None;
    int cadence_k = 1;

    static ClusterConfig from_json(const Value& v);
    Value to_json() const;
};

struct MachineCounters {
    std::uint64_t remote_accesses = 0;
    std::uint64_t migrations = 0;
    std::uint64_t messages = 0;
    std::uint64_t replication_messages = 0;
    std::uint64_t access_latency = 0;
    std::uint64_t migration_latency = 0;

    std::uint64_t modeled_latency() const { return access_latency + migration_latency; }
    MachineCounters& operator+=(const MachineCounters& o) {
        remote_accesses += o.remote_accesses;
        migrations += o.migrations;
        messages += o.messages;
        replication_messages += o.replication_messages;
        access_latency += o.access_latency;
        migration_latency += o.migration_latency;
        return *this;
    }
};

/// Byte sizes for nodes and walkers plus the sliding-window access pattern
/// observations the hybrid rule consumes.  Sizes never drop below the
/// serialized form of the element.
class SizeModel {
public:
    explicit SizeModel(const Runtime& rt) : rt_(&rt) {}

    void set_node_size(NodeId n, std::uint64_t bytes) { node_override_[n] = bytes; }
    void set_walker_size(WalkerId w, std::uint64_t bytes) { walker_override_[w] = bytes; }

    std::uint64_t node_size(NodeId n) const;
    std::uint64_t walker_size(WalkerId w) const;

    void record_node_touch(NodeId n, MachineId from);
    void record_walker_hop(WalkerId w, MachineId at);
    /// Fraction of the node's recent touches issued from `machine` (0 when
    /// nothing was observed).
    double locality_fraction(NodeId n, MachineId machine) const;
    /// Length of the walker's trailing run of hops on `machine`.
    int trailing_run(WalkerId w, MachineId machine) const;

    static constexpr std::size_t kWindow = 16;

private:
    const Runtime* rt_;
    std::map<NodeId, std::uint64_t> node_override_;
    std::map<WalkerId, std::uint64_t> walker_override_;
    std::map<NodeId, std::deque<MachineId>> node_touches_;
    std::map<WalkerId, std::deque<MachineId>> walker_hops_;
};

enum class Strategy { MoveData, MoveComp };

struct CostRecord {
    bool remote = false;
    std::uint64_t messages = 0;
    std::uint64_t latency = 0;
};

/// Deterministic in-process multi-machine simulation.  Owns placement,
/// counters, replicas, checkpoints, the effect log, the fault plan and the
/// event clock; plugs into the Runtime as its DistributionDriver.  Hooks
/// only account and route — walker semantics are identical on any machine
/// count, which is the module's central invariant.
class ClusterSim : public DistributionDriver {
public:
    ClusterSim(Runtime& rt, ClusterConfig config);

    const ClusterConfig& config() const { return config_; }
    SizeModel& sizes() { return sizes_; }
    ReplicaStore& replicas() { return replicas_; }
    CheckpointStore& checkpoints() { return checkpoints_; }
    const EffectLogStore& effect_log() const { return effects_; }

    // -- placement ----------------------------------------------------------
    void set_affinity_hint(NodeId n, MachineId m) { hints_[n] = m; }
    /// Partition every current node across the configured machines
    /// (balanced greedy edge-cut refinement, deterministic given seed).
    void place_all();
    void place_node(NodeId n, MachineId m);
    MachineId placement_of(NodeId n) const;
    const std::map<NodeId, MachineId>& placement() const { return placement_; }
    std::uint64_t cut_edges() const;

    // -- machines -------------------------------------------------------------
    int machine_count() const { return static_cast<int>(alive_.size()); }
    bool alive(MachineId m) const;
    std::vector<MachineId> alive_machines() const;
    void kill_machine(MachineId m);
    void revive_machine(MachineId m);

    // -- direct operations (also exercised by the engine hooks) ---------------
    /// Location-transparent property read with cost accounting.
    std::pair<Value, CostRecord> read_property(WalkerId w, NodeId n, const std::string& name);
    CostRecord write_property(WalkerId w, NodeId n, const std::string& name, Value v);
    /// Serialize, transfer, deserialize; walker state is preserved
    /// structurally.  Errors if the target machine is dead.
    void migrate(WalkerId w, MachineId to);
    Strategy choose_strategy(WalkerId w, NodeId n) const;
    /// Copies of `node` on `rep_factor` distinct alive machines, primary
    /// first.  Writes propagate synchronously.
    const ReplicaSet& replicate(NodeId node, int rep_factor);

    MachineId walker_machine(WalkerId w) const;
    bool walker_placed(WalkerId w) const { return walker_machine_.count(w) != 0; }
    /// Machine currently serving the node's authoritative copy.
    MachineId serving_machine(NodeId n) const;
    bool node_available(NodeId n) const;

    // -- resilience ------------------------------------------------------------
    void set_fault_plan(std::vector<FaultAction> plan);
    std::uint64_t event_index() const { return event_index_; }
    bool is_lost(WalkerId w) const { return lost_.count(w) != 0; }
    /// Give up on a lost walker (terminally failed invocation).
    void abandon_lost(WalkerId w) { lost_.erase(w); }
    /// Checkpoint now (step boundary); errors unless the walker is active.
    const WalkerCheckpoint& checkpoint(WalkerId w);
    /// Reconstitute a lost walker from its latest checkpoint, replay the
    /// steps committed since, resume on the machine serving its location.
    WalkerId recover(WalkerId w);
    /// Invocation-start bookkeeping: event tick plus the cadence-zero
    /// checkpoint under every_step.
    void begin_invocation(WalkerId w);

    // -- counters ---------------------------------------------------------------
    const std::map<MachineId, MachineCounters>& per_machine() const { return counters_; }
    MachineCounters totals() const;
    /// messages == 2*remote_accesses + migrations + replication_messages.
    bool counters_conserved() const;
    Value metrics_json() const;

    // -- DistributionDriver -------------------------------------------------------
    void on_spawn(const Walker& w, NodeId at) override;
    void on_traverse(const Walker& w, NodeId from, NodeId to) override;
    void on_node_read(const Walker& w, NodeId node) override;
    void on_node_write(const Walker& w, NodeId node) override;
    void on_write_committed(const Walker& w, NodeId node) override;
    void on_node_created(const Walker& w, NodeId node) override;
    void on_step_boundary(const Walker& w) override;
    void on_walker_finished(const Walker& w) override;

private:
    void tick();
    void fire_faults();
    void ensure_current_walker_alive(const Walker& w);
    CostRecord account_access(WalkerId w, NodeId n, bool write);
    MachineId read_source(WalkerId w, NodeId n) const;
    const WalkerCheckpoint& checkpoint_unchecked(WalkerId w);
    MachineId least_loaded_alive() const;
    std::uint64_t machine_load(MachineId m) const;

    Runtime& rt_;
    ClusterConfig config_;
    SizeModel sizes_;
    ReplicaStore replicas_;
    CheckpointStore checkpoints_;
    EffectLogStore effects_;
    std::map<NodeId, MachineId> placement_;
    std::map<NodeId, MachineId> hints_;
    std::map<WalkerId, MachineId> walker_machine_;
    std::map<MachineId, bool> alive_;
    std::map<MachineId, MachineCounters> counters_;
    std::vector<FaultAction> plan_;
    std::size_t plan_pos_ = 0;
    std::uint64_t event_index_ = 0;
    std::set<WalkerId> lost_;
    std::set<WalkerId> pending_checkpoint_;
    bool in_spawn_dispatch_ = false;
};

}  // namespace trellis

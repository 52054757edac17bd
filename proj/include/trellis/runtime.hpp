#pragma once

#include "trellis/abilities.hpp"
#include "trellis/errors.hpp"
#include "trellis/graph.hpp"
#include "trellis/ids.hpp"
#include "trellis/trace.hpp"
#include "trellis/value.hpp"

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace trellis {

enum class WalkerStatus { Created, Active, Completed, Disengaged };

inline const char* status_name(WalkerStatus s) {
    switch (s) {
    case WalkerStatus::Created: return "created";
    case WalkerStatus::Active: return "active";
    case WalkerStatus::Completed: return "completed";
    case WalkerStatus::Disengaged: return "disengaged";
    }
    return "?";
}

/// A mobile computational entity.  `location` is set iff status == Active;
/// `queue` is the FIFO list of pending destinations; `path` records every
/// node visited in order; `result` is the explicit output map.
struct Walker {
    WalkerId id;
    std::string archetype;
    std::optional<UserId> user;
    ValueMap properties = empty_map();
    std::deque<NodeId> queue;
    std::optional<NodeId> location;
    WalkerStatus status = WalkerStatus::Created;
    std::vector<NodeId> path;
    ValueMap result = empty_map();
    /// Completed step boundaries (0 = instantiated, before spawn dispatch).
    std::uint64_t step_index = 0;
};

/// Serialized walker form: explicit properties plus execution context.  Used
/// verbatim for migration payloads and checkpoints; sizes are measured on it.
Value walker_to_json(const Walker& w);
Walker walker_from_json(const Value& v);

/// Thrown through the engine when a fault takes the machine a walker runs
/// on.  Not an Error: it is a control signal, handled by the scheduler.
struct WalkerLostSignal {
    WalkerId walker;
    MachineId machine;
};

/// One committed node-side effect record per (walker, step), enough to
/// re-execute the step deterministically during recovery: reads are served
/// back in call order, created ids are reissued, writes are suppressed.
struct StepEffects {
    std::uint64_t step_index = 0;
    std::vector<Value> reads;                 // node_get results in call order
    std::vector<std::uint64_t> created_nodes; // ids in creation order
    std::vector<std::uint64_t> created_edges;
    Value writes = Value::array();            // [{node,prop,value}] for audit
    /// Set when the record is the spawn boundary: the spawn node id.
    std::optional<std::uint64_t> spawn_node;
};

/// Hook points the cluster simulation implements.  The default
/// implementation is a single-machine runtime: every access is local and
/// free.  Hooks may throw WalkerLostSignal or Error; they must never alter
/// values, only account for and route them.
class DistributionDriver {
public:
    virtual ~DistributionDriver() = default;
    /// Walker activated at `at`; fix its home machine.
    virtual void on_spawn(const Walker&, NodeId at) { (void)at; }
    /// Walker about to occupy `to` (from `from`); migrate or arrange remote
    /// access according to the distribution mode.
    virtual void on_traverse(const Walker&, NodeId from, NodeId to) { (void)from; (void)to; }
    /// Ability property touch on `node` by `walker`.
    virtual void on_node_read(const Walker&, NodeId node) { (void)node; }
    virtual void on_node_write(const Walker&, NodeId node) { (void)node; }
    /// A buffered write reached the committed graph (replica propagation).
    virtual void on_write_committed(const Walker&, NodeId node) { (void)node; }
    /// A node created by an ability was committed; place it.
    virtual void on_node_created(const Walker&, NodeId node) { (void)node; }
    /// Step boundary committed (also fired once after spawn dispatch).
    virtual void on_step_boundary(const Walker&) {}
    virtual void on_walker_finished(const Walker&) {}
};

/// Receives committed per-step effect records (resilience journal).
class EffectSink {
public:
    virtual ~EffectSink() = default;
    virtual void commit_step(WalkerId walker, StepEffects effects) = 0;
};

/// Mutation notifications for the optional persistence journal.
using MutationSink = std::function<void(const std::string& op, const Value& args)>;

class Runtime;

/// The surface an ability body sees.  All node property access flows through
/// here so the distribution layer can account for it; reads observe the
/// step's own buffered writes.
class AbilityContext {
public:
    AbilityContext(Runtime& rt, Walker& walker, NodeId here)
        : rt_(rt), walker_(walker), here_(here) {}

    NodeId here() const { return here_; }
    WalkerId walker_id() const { return walker_.id; }
    const std::string& walker_archetype() const { return walker_.archetype; }
    const std::string& node_archetype() const;
    std::optional<UserId> user() const { return walker_.user; }
    /// Number of nodes visited so far, the spawn node included.
    std::size_t path_length() const { return walker_.path.size(); }

    bool node_has(const std::string& name);
    /// Value of a property of the current node, or `fallback` when absent.
    Value node_get(const std::string& name, Value fallback = nullptr);
    void node_set(const std::string& name, Value v);

    bool walker_has(const std::string& name) const { return walker_.properties.contains(name); }
    Value walker_get(const std::string& name, Value fallback = nullptr) const;
    void walker_set(const std::string& name, Value v) { walker_.properties[name] = std::move(v); }

    Value result_get(const std::string& name, Value fallback = nullptr) const;
    void result_set(const std::string& name, Value v) { walker_.result[name] = std::move(v); }

    /// Outgoing (edge, destination) pairs of the current node, creation
    /// order, buffered edges included.  Topology metadata: free.
    std::vector<std::pair<EdgeId, NodeId>> out_edges();
    std::vector<std::pair<EdgeId, NodeId>> in_edges();
    Value edge_data(EdgeId e);
    /// Archetype of any node (topology metadata, free).
    const std::string& archetype_of(NodeId n) const;

    /// Enqueue a destination; requires an edge from the current node.
    void visit(NodeId destination);
    void disengage();

    /// Buffered mutations, committed with the step.
    NodeId create_node(const std::string& archetype, ValueMap properties);
    EdgeId connect(NodeId source, NodeId destination, ValueMap data = empty_map());

private:
    Runtime& rt_;
    Walker& walker_;
    NodeId here_;
};

/// In-memory graph of nodes and edges plus the walker execution engine.
///
/// Ability dispatch order is total and fixed: on each move, (1) exit
/// abilities at the departed node — node-hosted then walker-hosted; (2)
/// entry abilities at the arrived node — node-hosted then walker-hosted;
/// declaration order within a host class.  No ability runs after disengage.
class Runtime {
public:
    static constexpr const char* kRootArchetype = "root";

    Runtime();

    ArchetypeRegistry& archetypes() { return registry_; }
    const ArchetypeRegistry& archetypes() const { return registry_; }
    Graph& graph() { return graph_; }
    const Graph& graph() const { return graph_; }

    // -- graph construction ------------------------------------------------
    NodeId create_node(const std::string& archetype, ValueMap properties);
    /// Rejects edges that would join two different users' subgraphs; commits
    /// then recomputes ownership so newly reachable transient nodes acquire
    /// the owner.
    EdgeId connect(NodeId source, NodeId destination, ValueMap data = empty_map());
    void disconnect(EdgeId edge);
    void set_node_property(NodeId node, const std::string& name, Value v);

    /// Test hook: create an edge bypassing the isolation check, so the
    /// disjointness auditor has something to find.
    EdgeId debug_connect_unchecked(NodeId source, NodeId destination);

    // -- walker lifecycle ---------------------------------------------------
    /// Create a walker in status Created with archetype defaults applied.
    WalkerId instantiate_walker(const std::string& archetype,
                                std::optional<UserId> user = std::nullopt);
    /// Activate an instantiated walker at `at` and dispatch entry abilities
    /// for the spawn node.  Completes immediately if nothing was enqueued.
    void spawn_at(WalkerId walker, NodeId at);
    /// Convenience: instantiate with extra properties, spawn, do not drive.
    WalkerId spawn(const std::string& archetype, ValueMap properties, NodeId at);

    void visit(WalkerId walker, NodeId destination);
    /// Dequeue the next destination and run the dispatch sequence for the
    /// move; returns the status after the step.
    WalkerStatus step(WalkerId walker);
    void disengage(WalkerId walker);
    /// Step until the walker leaves Active (single-walker driver).
    WalkerStatus run_to_completion(WalkerId walker);

    Walker& walker(WalkerId id);
    const Walker& walker(WalkerId id) const;
    bool has_walker(WalkerId id) const { return walkers_.count(id) != 0; }
    const std::map<WalkerId, Walker>& walkers() const { return walkers_; }
    /// True iff any walker is Active (paused or running).
    bool any_walker_active() const;
    /// True while an ability body is executing.
    bool engine_busy() const { return step_ != nullptr; }

    /// Replace a walker's state wholesale (recovery).  The walker must
    /// already exist; status/location/queue/path/result/step come from `st`.
    void overwrite_walker(const Walker& st);

    /// Re-execute one step against a recorded effect log: reads and created
    /// ids are served from the record, node writes are suppressed, no
    /// distribution hooks fire.  Used only by recovery.
    void replay_step(WalkerId walker, const StepEffects& effects);

    // -- roots & ownership ---------------------------------------------------
    const std::map<UserId, NodeId>& roots() const { return roots_; }
    std::map<UserId, NodeId>& roots_mutable() { return roots_; }
    /// Recompute owners from every root: nodes reachable from root_u get
    /// owner u, everything else loses its owner.
    void recompute_ownership();

    // -- hooks ----------------------------------------------------------------
    void set_driver(DistributionDriver* d) { driver_ = d; }
    DistributionDriver* driver() const { return driver_; }
    void set_effect_sink(EffectSink* s) { effect_sink_ = s; }
    void set_mutation_sink(MutationSink s) { mutation_sink_ = std::move(s); }
    /// Forward a mutation record to the journal sink (used by the modules
    /// that mutate the graph without going through connect/create_node).
    void emit_journal(const std::string& op, const Value& args) { emit_mutation(op, args); }

    TraceLog& trace() { return trace_; }

private:
    friend class AbilityContext;

    struct PendingNode {
        NodeId id;
        std::string archetype;
        ValueMap properties;
    };
    struct PendingEdge {
        EdgeId id;
        NodeId source;
        NodeId destination;
        ValueMap data;
    };
    /// Node-side effects of the step in flight.  Nothing below reaches the
    /// committed graph until the step boundary; a fault mid-step discards
    /// the buffer and rewinds the id counters.
    struct StepBuffer {
        std::map<std::pair<NodeId, std::string>, Value> writes;
        std::vector<PendingNode> nodes;
        std::vector<PendingEdge> edges;
        std::uint64_t node_id_mark = 0;
        std::uint64_t edge_id_mark = 0;
        StepEffects effects;
        // replay mode: serve from the record instead of executing effects
        const StepEffects* replay = nullptr;
        std::size_t replay_read_pos = 0;
        std::size_t replay_node_pos = 0;
        std::size_t replay_edge_pos = 0;
    };

    void dispatch(Walker& w, NodeId node, Trigger trigger);
    void run_ability(Walker& w, NodeId node, const Ability& ability, const char* host);
    void move_walker(Walker& w, NodeId to);
    void finish_if_done(Walker& w);
    void open_buffer(Walker& w, const StepEffects* replay);
    void commit_buffer(Walker& w);
    void abort_buffer();
    void execute_step(Walker& w, bool spawn_phase, NodeId spawn_node);

    // buffered-view helpers used by AbilityContext
    Value buffered_node_get(Walker& w, NodeId node, const std::string& name, Value fallback,
                            bool* present);
    void buffered_node_set(Walker& w, NodeId node, const std::string& name, Value v);
    NodeId buffered_create(Walker& w, const std::string& archetype, ValueMap properties);
    EdgeId buffered_connect(Walker& w, NodeId source, NodeId destination, ValueMap data);
    bool edge_exists_with_buffer(NodeId source, NodeId destination) const;
    std::vector<std::pair<EdgeId, NodeId>> adjacent_with_buffer(NodeId node, bool outgoing) const;
    const std::string& node_archetype_with_buffer(NodeId node) const;
    bool node_exists_with_buffer(NodeId node) const;

    /// IsolationViolation unless every node in the outgoing closure of
    /// `destination` (buffered view) is unowned or owned by `claimant`.
    void check_connect_isolation(NodeId source, NodeId destination) const;
    std::optional<UserId> owner_with_buffer(NodeId node) const;

    void emit_mutation(const std::string& op, Value args);

    ArchetypeRegistry registry_;
    Graph graph_;
    std::map<WalkerId, Walker> walkers_;
    std::map<UserId, NodeId> roots_;
    std::uint64_t next_walker_id_ = 1;
    DistributionDriver* driver_ = nullptr;
    EffectSink* effect_sink_ = nullptr;
    MutationSink mutation_sink_;
    TraceLog trace_;
    std::unique_ptr<StepBuffer> step_;
};

}  // namespace trellis

#include "trellis/cluster.hpp"

#include "trellis/placement.hpp"

#include <algorithm>

namespace trellis {

DistributionMode parse_mode(const std::string& s) {
    if (s == "data_centric") return DistributionMode::DataCentric;
    if (s == "computation_centric") return DistributionMode::ComputationCentric;
    if (s == "hybrid") return DistributionMode::Hybrid;
    raise(Errc::BadConfig, "unknown distribution mode " + s);
}

const char* mode_name(DistributionMode m) {
    switch (m) {
    case DistributionMode::DataCentric: return "data_centric";
    case DistributionMode::ComputationCentric: return "computation_centric";
    case DistributionMode::Hybrid: return "hybrid";
    }
    return "?";
}

ClusterConfig ClusterConfig::from_json(const Value& v) {
    ClusterConfig c;
    if (v.contains("machines")) c.machines = v.at("machines").get<int>();
    if (v.contains("capacity_bytes")) c.capacity_bytes = v.at("capacity_bytes").get<std::uint64_t>();
    if (v.contains("mode")) c.mode = parse_mode(v.at("mode").get<std::string>());
    if (v.contains("consistency_strength"))
        c.consistency_strength = v.at("consistency_strength").get<std::uint64_t>();
    if (v.contains("base_latency")) c.base_latency = v.at("base_latency").get<std::uint64_t>();
    if (v.contains("seed")) c.seed = v.at("seed").get<std::uint64_t>();
    if (v.contains("hybrid")) {
        const Value& h = v.at("hybrid");
        if (h.contains("ratio_R")) c.hybrid.ratio_r = h.at("ratio_R").get<std::uint64_t>();
        if (h.contains("locality_pct")) c.hybrid.locality_pct = h.at("locality_pct").get<double>();
        if (h.contains("path_run_len")) c.hybrid.path_run_len = h.at("path_run_len").get<int>();
    }
    if (v.contains("rep_factor")) c.rep_factor = v.at("rep_factor").get<int>();
    if (v.contains("checkpoint")) {
        const Value& cp = v.at("checkpoint");
        const std::string cadence = cp.at("cadence").get<std::string>();
        if (cadence == "none") c.cadence = CheckpointCadence::None;
        else if (cadence == "every_step") c.cadence = CheckpointCadence::EveryStep;
        else if (cadence == "every_k_steps") c.cadence = CheckpointCadence::EveryK;
        else if (cadence == "on_migration") c.cadence = CheckpointCadence::OnMigration;
        else raise(Errc::BadConfig, "unknown checkpoint cadence " + cadence);
        if (cp.contains("k")) c.cadence_k = cp.at("k").get<int>();
    }
    if (c.machines < 1) raise(Errc::BadConfig, "machines must be >= 1");
    if (c.consistency_strength < 1) raise(Errc::BadConfig, "consistency_strength must be >= 1");
    return c;
}

Value ClusterConfig::to_json() const {
    const char* cadence_name = "none";
    switch (cadence) {
    case CheckpointCadence::None: cadence_name = "none"; break;
    case CheckpointCadence::EveryStep: cadence_name = "every_step"; break;
    case CheckpointCadence::EveryK: cadence_name = "every_k_steps"; break;
    case CheckpointCadence::OnMigration: cadence_name = "on_migration"; break;
    }
    return Value{{"machines", machines},
                 {"capacity_bytes", capacity_bytes},
                 {"mode", mode_name(mode)},
                 {"consistency_strength", consistency_strength},
                 {"base_latency", base_latency},
                 {"seed", seed},
                 {"hybrid", Value{{"ratio_R", hybrid.ratio_r},
                                  {"locality_pct", hybrid.locality_pct},
                                  {"path_run_len", hybrid.path_run_len}}},
                 {"rep_factor", rep_factor},
                 {"checkpoint", Value{{"cadence", cadence_name}, {"k", cadence_k}}}};
}

// ---------------------------------------------------------------------------
// SizeModel
// ---------------------------------------------------------------------------

std::uint64_t SizeModel::node_size(NodeId n) const {
    std::uint64_t serialized = 0;
    if (rt_->graph().has_node(n)) {
        const Node& node = rt_->graph().node(n);
        serialized = Value{{"archetype", node.archetype}, {"properties", node.properties}}.dump().size();
    }
    auto it = node_override_.find(n);
    return it == node_override_.end() ? serialized : std::max(it->second, serialized);
}

std::uint64_t SizeModel::walker_size(WalkerId w) const {
    std::uint64_t serialized = 0;
    if (rt_->has_walker(w)) serialized = walker_to_json(rt_->walker(w)).dump().size();
    auto it = walker_override_.find(w);
    return it == walker_override_.end() ? serialized : std::max(it->second, serialized);
}

void SizeModel::record_node_touch(NodeId n, MachineId from) {
    auto& window = node_touches_[n];
    window.push_back(from);
    if (window.size() > kWindow) window.pop_front();
}

void SizeModel::record_walker_hop(WalkerId w, MachineId at) {
    auto& window = walker_hops_[w];
    window.push_back(at);
    if (window.size() > kWindow) window.pop_front();
}

double SizeModel::locality_fraction(NodeId n, MachineId machine) const {
    auto it = node_touches_.find(n);
    if (it == node_touches_.end() || it->second.empty()) return 0.0;
    std::size_t hits = 0;
    for (MachineId m : it->second)
        if (m == machine) ++hits;
    return static_cast<double>(hits) / static_cast<double>(it->second.size());
}

int SizeModel::trailing_run(WalkerId w, MachineId machine) const {
    auto it = walker_hops_.find(w);
    if (it == walker_hops_.end()) return 0;
    int run = 0;
    for (auto r = it->second.rbegin(); r != it->second.rend(); ++r) {
        if (*r != machine) break;
        ++run;
    }
    return run;
}

// ---------------------------------------------------------------------------
// ClusterSim
// ---------------------------------------------------------------------------

ClusterSim::ClusterSim(Runtime& rt, ClusterConfig config)
    : rt_(rt), config_(std::move(config)), sizes_(rt) {
    for (int m = 0; m < config_.machines; ++m) {
        alive_[MachineId{static_cast<std::uint64_t>(m)}] = true;
        counters_[MachineId{static_cast<std::uint64_t>(m)}] = MachineCounters{};
    }
    rt_.set_driver(this);
    rt_.set_effect_sink(&effects_);
}

void ClusterSim::place_all() {
    PlacementResult result = place_nodes(rt_.graph(), sizes_, config_.machines,
                                         config_.capacity_bytes, config_.seed, hints_);
    placement_ = std::move(result.assignment);
    if (config_.rep_factor > 0)
        for (const auto& [n, m] : placement_) replicate(n, config_.rep_factor);
}

void ClusterSim::place_node(NodeId n, MachineId m) {
    if (!alive(m)) raise(Errc::MachineDead, "placement on dead machine " + to_string(m));
    placement_[n] = m;
    if (config_.rep_factor > 0) {
        // degraded cluster: hold rep_factor copies only while enough
        // machines are alive
        int effective = std::min<int>(config_.rep_factor,
                                      static_cast<int>(alive_machines().size()));
        replicate(n, effective);
    }
}

MachineId ClusterSim::placement_of(NodeId n) const {
    auto it = placement_.find(n);
    if (it == placement_.end()) raise(Errc::MissingNode, "unplaced node " + to_string(n));
    return it->second;
}

std::uint64_t ClusterSim::cut_edges() const { return count_cut_edges(rt_.graph(), placement_); }

bool ClusterSim::alive(MachineId m) const {
    auto it = alive_.find(m);
    if (it == alive_.end()) raise(Errc::BadConfig, "unknown machine " + to_string(m));
    return it->second;
}

std::vector<MachineId> ClusterSim::alive_machines() const {
    std::vector<MachineId> out;
    for (const auto& [m, a] : alive_)
        if (a) out.push_back(m);
    return out;
}

void ClusterSim::kill_machine(MachineId m) {
    if (!alive(m)) raise(Errc::MachineAlreadyDead, to_string(m));
    alive_[m] = false;
    replicas_.promote_away_from(m, [this](MachineId x) { return alive_.at(x); });
    for (const auto& [w, machine] : walker_machine_) {
        if (machine == m && rt_.has_walker(w) && rt_.walker(w).status == WalkerStatus::Active)
            lost_.insert(w);
    }
    rt_.trace().record("kill", Value{{"machine", m.value}, {"event", event_index_}});
}

void ClusterSim::revive_machine(MachineId m) {
    if (alive(m)) raise(Errc::BadConfig, "machine already alive " + to_string(m));
    alive_[m] = true;
    rt_.trace().record("revive", Value{{"machine", m.value}, {"event", event_index_}});
}

MachineId ClusterSim::serving_machine(NodeId n) const {
    if (replicas_.replicated(n)) return replicas_.set(n).primary;
    return placement_of(n);
}

bool ClusterSim::node_available(NodeId n) const {
    MachineId m = serving_machine(n);
    return alive_.count(m) != 0 && alive_.at(m);
}

MachineId ClusterSim::walker_machine(WalkerId w) const {
    auto it = walker_machine_.find(w);
    if (it == walker_machine_.end()) raise(Errc::BadConfig, "walker not placed " + to_string(w));
    return it->second;
}

MachineId ClusterSim::least_loaded_alive() const {
    MachineId best{0};
    std::uint64_t best_load = ~0ull;
    bool found = false;
    for (const auto& [m, a] : alive_) {
        if (!a) continue;
        std::uint64_t load = machine_load(m);
        if (!found || load < best_load) {
            found = true;
            best = m;
            best_load = load;
        }
    }
    if (!found) raise(Errc::InsufficientMachines, "no machine alive");
    return best;
}

std::uint64_t ClusterSim::machine_load(MachineId m) const {
    std::uint64_t load = 0;
    for (const auto& [n, machine] : placement_)
        if (machine == m) load += sizes_.node_size(n);
    return load;
}

// ---------------------------------------------------------------------------
// accesses, migration, strategy
// ---------------------------------------------------------------------------

MachineId ClusterSim::read_source(WalkerId w, NodeId n) const {
    MachineId here = walker_machine(w);
    if (replicas_.replicated(n)) {
        if (replicas_.has_copy(n, here) && alive_.at(here)) return here;
        return replicas_.set(n).primary;
    }
    return placement_of(n);
}

CostRecord ClusterSim::account_access(WalkerId w, NodeId n, bool write) {
    if (!node_available(n))
        raise(Errc::UnavailableNode, "node " + to_string(n) + " has no serving machine");
    MachineId here = walker_machine(w);
    MachineId src = write ? serving_machine(n) : read_source(w, n);
    CostRecord cost;
    cost.remote = src != here;
    if (cost.remote) {
        cost.messages = 2;  // request/reply
        cost.latency = config_.base_latency * config_.consistency_strength;
        MachineCounters& c = counters_[here];
        c.remote_accesses += 1;
        c.messages += 2;
        c.access_latency += cost.latency;
    }
    sizes_.record_node_touch(n, here);
    return cost;
}

std::pair<Value, CostRecord> ClusterSim::read_property(WalkerId w, NodeId n,
                                                       const std::string& name) {
    tick();
    CostRecord cost = account_access(w, n, false);
    const auto& props = rt_.graph().node(n).properties;
    Value v = props.contains(name) ? props.at(name) : Value(nullptr);
    return {v, cost};
}

CostRecord ClusterSim::write_property(WalkerId w, NodeId n, const std::string& name, Value v) {
    tick();
    CostRecord cost = account_access(w, n, true);
    rt_.set_node_property(n, name, std::move(v));
    std::size_t fanout = replicas_.propagate(n, rt_.graph().node(n).properties);
    if (fanout > 0) {
        MachineCounters& c = counters_[serving_machine(n)];
        c.replication_messages += fanout;
        c.messages += fanout;
    }
    return cost;
}

void ClusterSim::migrate(WalkerId w, MachineId to) {
    Walker& walker = rt_.walker(w);
    if (walker.status != WalkerStatus::Active)
        raise(Errc::WalkerNotActive, "migrate of " + std::string(status_name(walker.status)) + " walker");
    if (!alive(to)) raise(Errc::MachineDead, "migrate to dead machine " + to_string(to));
    MachineId from = walker_machine(w);
    if (from == to) return;

    // serialize -> transfer -> deserialize; the walker resumes state-identical
    std::uint64_t size = sizes_.walker_size(w);
    Value payload = walker_to_json(walker);
    Walker restored = walker_from_json(payload);
    rt_.overwrite_walker(restored);

    MachineCounters& c = counters_[from];
    c.migrations += 1;
    c.messages += 1;
    c.migration_latency += config_.base_latency * size;
    walker_machine_[w] = to;
    rt_.trace().record("migrate",
                       Value{{"walker", w.value}, {"from", from.value}, {"to", to.value}});
    tick();
    if (config_.cadence == CheckpointCadence::OnMigration &&
        rt_.walker(w).status == WalkerStatus::Active) {
        // mid-step state is not resumable (the destination is already
        // dequeued): the checkpoint lands on the enclosing step's boundary
        if (rt_.engine_busy()) pending_checkpoint_.insert(w);
        else checkpoint_unchecked(w);
    }
}

Strategy ClusterSim::choose_strategy(WalkerId w, NodeId n) const {
    const std::uint64_t sn = sizes_.node_size(n);
    const std::uint64_t sw = sizes_.walker_size(w);
    const std::uint64_t r = config_.hybrid.ratio_r;
    const bool data_by_size = sn * r <= sw && sw * r > sn;
    const bool comp_by_size = sw * r <= sn && sn * r > sw;
    if (data_by_size) return Strategy::MoveData;
    if (comp_by_size) return Strategy::MoveComp;
    MachineId here = walker_machine(w);
    if (sizes_.locality_fraction(n, here) >= config_.hybrid.locality_pct) return Strategy::MoveData;
    if (sizes_.trailing_run(w, serving_machine(n)) >= config_.hybrid.path_run_len)
        return Strategy::MoveComp;
    return Strategy::MoveComp;  // tie rule: compute moves to data
}

const ReplicaSet& ClusterSim::replicate(NodeId node, int rep_factor) {
    if (rep_factor < 1) raise(Errc::BadConfig, "rep_factor must be >= 1");
    std::vector<MachineId> up = alive_machines();
    if (static_cast<int>(up.size()) < rep_factor)
        raise(Errc::InsufficientMachines, std::to_string(rep_factor) + " replicas over " +
                                              std::to_string(up.size()) + " machines");
    MachineId primary = placement_of(node);
    std::vector<MachineId> holders{primary};
    for (MachineId m : up) {
        if (static_cast<int>(holders.size()) >= rep_factor) break;
        if (m != primary) holders.push_back(m);
    }
    replicas_.create(node, primary, holders, rt_.graph().node(node).properties, rep_factor);
    return replicas_.set(node);
}

// ---------------------------------------------------------------------------
// resilience driving
// ---------------------------------------------------------------------------

void ClusterSim::set_fault_plan(std::vector<FaultAction> plan) {
    std::stable_sort(plan.begin(), plan.end(),
                     [](const FaultAction& a, const FaultAction& b) {
                         return a.event_index < b.event_index;
                     });
    plan_ = std::move(plan);
    plan_pos_ = 0;
}

void ClusterSim::tick() {
    ++event_index_;
    fire_faults();
}

void ClusterSim::fire_faults() {
    while (plan_pos_ < plan_.size() && plan_[plan_pos_].event_index <= event_index_) {
        const FaultAction& a = plan_[plan_pos_++];
        if (a.kind == FaultKind::Kill) {
            if (alive_.count(a.machine) != 0 && alive_.at(a.machine)) kill_machine(a.machine);
        } else {
            if (alive_.count(a.machine) != 0 && !alive_.at(a.machine)) revive_machine(a.machine);
        }
    }
}

void ClusterSim::ensure_current_walker_alive(const Walker& w) {
    if (lost_.count(w.id) != 0) throw WalkerLostSignal{w.id, walker_machine_.at(w.id)};
}

const WalkerCheckpoint& ClusterSim::checkpoint(WalkerId w) {
    if (rt_.walker(w).status != WalkerStatus::Active)
        raise(Errc::WalkerNotActive,
              "checkpoint of " + std::string(status_name(rt_.walker(w).status)) + " walker");
    return checkpoint_unchecked(w);
}

const WalkerCheckpoint& ClusterSim::checkpoint_unchecked(WalkerId w) {
    const Walker& walker = rt_.walker(w);
    const WalkerCheckpoint& cp =
        checkpoints_.append(w, walker_to_json(walker), event_index_, walker.step_index);
    rt_.trace().record("checkpoint", Value{{"walker", w.value}, {"sequence", cp.sequence}});
    return cp;
}

void ClusterSim::begin_invocation(WalkerId w) {
    tick();
    if (config_.cadence == CheckpointCadence::EveryStep) checkpoint_unchecked(w);
}

WalkerId ClusterSim::recover(WalkerId w) {
    if (lost_.count(w) == 0) raise(Errc::WalkerNotLost, to_string(w) + " is not lost");
    const WalkerCheckpoint* latest = checkpoints_.latest(w);
    if (latest == nullptr)
        raise(Errc::NoCheckpoint, "walker " + to_string(w) + " is unrecoverable");

    Walker restored = walker_from_json(latest->payload);
    rt_.overwrite_walker(restored);
    lost_.erase(w);
    walker_machine_.erase(w);

    // replay the steps committed after the checkpoint from the effect log
    std::uint64_t step = restored.step_index + 1;
    while (const StepEffects* fx = effects_.find(w, step)) {
        rt_.replay_step(w, *fx);
        ++step;
    }

    const Walker& now = rt_.walker(w);
    if (now.location) {
        if (!node_available(*now.location))
            raise(Errc::UnavailableNode,
                  "cannot resume: location " + to_string(*now.location) + " unavailable");
        walker_machine_[w] = serving_machine(*now.location);
    }
    rt_.trace().record("recover", Value{{"walker", w.value}, {"sequence", latest->sequence},
                                        {"resumed_step", now.step_index}});
    return w;
}

// ---------------------------------------------------------------------------
// counters
// ---------------------------------------------------------------------------

MachineCounters ClusterSim::totals() const {
    MachineCounters t;
    for (const auto& [m, c] : counters_) t += c;
    return t;
}

bool ClusterSim::counters_conserved() const {
    MachineCounters t = totals();
    return t.messages == 2 * t.remote_accesses + t.migrations + t.replication_messages;
}

Value ClusterSim::metrics_json() const {
    Value per = Value::object();
    for (const auto& [m, c] : counters_) {
        per[std::to_string(m.value)] = Value{{"remote_accesses", c.remote_accesses},
                                             {"migrations", c.migrations},
                                             {"messages", c.messages},
                                             {"replication_messages", c.replication_messages},
                                             {"modeled_latency", c.modeled_latency()},
                                             {"alive", alive_.at(m)}};
    }
    MachineCounters t = totals();
    Value placement = Value::object();
    for (const auto& [n, m] : placement_) placement[std::to_string(n.value)] = m.value;
    return Value{{"per_machine_counters", per},
                 {"totals", Value{{"remote_accesses", t.remote_accesses},
                                  {"migrations", t.migrations},
                                  {"messages", t.messages},
                                  {"replication_messages", t.replication_messages},
                                  {"access_latency", t.access_latency},
                                  {"migration_latency", t.migration_latency},
                                  {"modeled_latency", t.modeled_latency()}}},
                 {"placement", placement},
                 {"cut_edges", cut_edges()},
                 {"events", event_index_}};
}

// ---------------------------------------------------------------------------
// DistributionDriver hooks
// ---------------------------------------------------------------------------

void ClusterSim::on_spawn(const Walker& w, NodeId at) {
    if (placement_.count(at) == 0) place_node(at, least_loaded_alive());
    if (!node_available(at))
        raise(Errc::UnavailableNode, "spawn node " + to_string(at) + " unavailable");
    walker_machine_[w.id] = serving_machine(at);
    in_spawn_dispatch_ = true;
    sizes_.record_walker_hop(w.id, walker_machine_[w.id]);
}

void ClusterSim::on_traverse(const Walker& w, NodeId, NodeId to) {
    ensure_current_walker_alive(w);
    if (placement_.count(to) == 0) place_node(to, least_loaded_alive());
    if (!node_available(to))
        raise(Errc::UnavailableNode, "destination " + to_string(to) + " unavailable");
    MachineId dst = serving_machine(to);
    MachineId here = walker_machine(w.id);
    if (dst != here) {
        bool move_comp = false;
        switch (config_.mode) {
        case DistributionMode::DataCentric: move_comp = false; break;
        case DistributionMode::ComputationCentric: move_comp = true; break;
        case DistributionMode::Hybrid:
            move_comp = choose_strategy(w.id, to) == Strategy::MoveComp;
            break;
        }
        if (move_comp) {
            migrate(w.id, dst);
            ensure_current_walker_alive(w);
        }
    }
    sizes_.record_walker_hop(w.id, dst);
}

void ClusterSim::on_node_read(const Walker& w, NodeId node) {
    if (!in_spawn_dispatch_) tick();
    ensure_current_walker_alive(w);
    account_access(w.id, node, false);
}

void ClusterSim::on_node_write(const Walker& w, NodeId node) {
    if (!in_spawn_dispatch_) tick();
    ensure_current_walker_alive(w);
    account_access(w.id, node, true);
}

void ClusterSim::on_write_committed(const Walker&, NodeId node) {
    std::size_t fanout = replicas_.propagate(node, rt_.graph().node(node).properties);
    if (fanout > 0) {
        MachineCounters& c = counters_[serving_machine(node)];
        c.replication_messages += fanout;
        c.messages += fanout;
    }
}

void ClusterSim::on_node_created(const Walker& w, NodeId node) {
    place_node(node, walker_machine(w.id));
}

void ClusterSim::on_step_boundary(const Walker& w) {
    in_spawn_dispatch_ = false;
    if (w.status == WalkerStatus::Active) {
        switch (config_.cadence) {
        case CheckpointCadence::EveryStep: checkpoint_unchecked(w.id); break;
        case CheckpointCadence::EveryK:
            if (config_.cadence_k > 0 && w.step_index % static_cast<std::uint64_t>(config_.cadence_k) == 0)
                checkpoint_unchecked(w.id);
            break;
        case CheckpointCadence::OnMigration:
            if (pending_checkpoint_.count(w.id) != 0) checkpoint_unchecked(w.id);
            break;
        default: break;
        }
    }
    pending_checkpoint_.erase(w.id);
    tick();
}

void ClusterSim::on_walker_finished(const Walker&) {}

}  // namespace trellis

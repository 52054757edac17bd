#include "trellis/runtime.hpp"

#include <algorithm>
#include <set>

namespace trellis {

// ---------------------------------------------------------------------------
// walker serialization
// ---------------------------------------------------------------------------

Value walker_to_json(const Walker& w) {
    Value queue = Value::array();
    for (NodeId n : w.queue) queue.push_back(n.value);
    Value path = Value::array();
    for (NodeId n : w.path) path.push_back(n.value);
    Value ctx{
        {"status", status_name(w.status)},
        {"location", w.location ? Value(w.location->value) : Value(nullptr)},
        {"queue", queue},
        {"path", path},
        {"result", w.result},
        {"step_index", w.step_index},
    };
    return Value{
        {"id", w.id.value},
        {"archetype", w.archetype},
        {"user", w.user ? Value(*w.user) : Value(nullptr)},
        {"properties", w.properties},
        {"context", ctx},
    };
}

Walker walker_from_json(const Value& v) {
    Walker w;
    w.id = WalkerId{v.at("id").get<std::uint64_t>()};
    w.archetype = v.at("archetype").get<std::string>();
    if (!v.at("user").is_null()) w.user = v.at("user").get<std::string>();
    w.properties = v.at("properties");
    const Value& ctx = v.at("context");
    std::string st = ctx.at("status").get<std::string>();
    if (st == "created") w.status = WalkerStatus::Created;
    else if (st == "active") w.status = WalkerStatus::Active;
    else if (st == "completed") w.status = WalkerStatus::Completed;
    else w.status = WalkerStatus::Disengaged;
    if (!ctx.at("location").is_null()) w.location = NodeId{ctx.at("location").get<std::uint64_t>()};
    for (const auto& q : ctx.at("queue")) w.queue.push_back(NodeId{q.get<std::uint64_t>()});
    for (const auto& p : ctx.at("path")) w.path.push_back(NodeId{p.get<std::uint64_t>()});
    w.result = ctx.at("result");
    w.step_index = ctx.at("step_index").get<std::uint64_t>();
    return w;
}

// ---------------------------------------------------------------------------
// AbilityContext
// ---------------------------------------------------------------------------

const std::string& AbilityContext::node_archetype() const {
    return rt_.node_archetype_with_buffer(here_);
}

const std::string& AbilityContext::archetype_of(NodeId n) const {
    return rt_.node_archetype_with_buffer(n);
}

bool AbilityContext::node_has(const std::string& name) {
    bool present = false;
    rt_.buffered_node_get(walker_, here_, name, nullptr, &present);
    return present;
}

Value AbilityContext::node_get(const std::string& name, Value fallback) {
    return rt_.buffered_node_get(walker_, here_, name, std::move(fallback), nullptr);
}

void AbilityContext::node_set(const std::string& name, Value v) {
    rt_.buffered_node_set(walker_, here_, name, std::move(v));
}

Value AbilityContext::walker_get(const std::string& name, Value fallback) const {
    auto it = walker_.properties.find(name);
    return it == walker_.properties.end() ? fallback : *it;
}

Value AbilityContext::result_get(const std::string& name, Value fallback) const {
    auto it = walker_.result.find(name);
    return it == walker_.result.end() ? fallback : *it;
}

std::vector<std::pair<EdgeId, NodeId>> AbilityContext::out_edges() {
    return rt_.adjacent_with_buffer(here_, true);
}

std::vector<std::pair<EdgeId, NodeId>> AbilityContext::in_edges() {
    return rt_.adjacent_with_buffer(here_, false);
}

Value AbilityContext::edge_data(EdgeId e) {
    if (rt_.step_) {
        for (const auto& pe : rt_.step_->edges)
            if (pe.id == e) return pe.data;
    }
    return rt_.graph().edge(e).data;
}

void AbilityContext::visit(NodeId destination) {
    // validates against the walker's location at enqueue time
    if (walker_.status != WalkerStatus::Active)
        raise(Errc::WalkerNotActive, "visit on " + std::string(status_name(walker_.status)) + " walker");
    NodeId from = walker_.location.value_or(here_);
    if (!rt_.edge_exists_with_buffer(from, destination))
        raise(Errc::NoSuchEdge, to_string(from) + " -> " + to_string(destination));
    walker_.queue.push_back(destination);
    rt_.trace_.record("enqueue", Value{{"walker", walker_.id.value}, {"node", destination.value}});
}

void AbilityContext::disengage() { rt_.disengage(walker_.id); }

NodeId AbilityContext::create_node(const std::string& archetype, ValueMap properties) {
    return rt_.buffered_create(walker_, archetype, std::move(properties));
}

EdgeId AbilityContext::connect(NodeId source, NodeId destination, ValueMap data) {
    return rt_.buffered_connect(walker_, source, destination, std::move(data));
}

// ---------------------------------------------------------------------------
// Runtime: construction ops
// ---------------------------------------------------------------------------

Runtime::Runtime() {
    registry_.register_node_archetype(kRootArchetype);
}

NodeId Runtime::create_node(const std::string& archetype, ValueMap properties) {
    if (!registry_.has_node_archetype(archetype))
        raise(Errc::UnknownArchetype, "node archetype " + archetype);
    if (!properties.is_object()) raise(Errc::BadConfig, "properties must be a map");
    NodeId id = graph_.add_node(archetype, properties);
    emit_mutation("create_node", Value{{"id", id.value}, {"archetype", archetype}, {"properties", properties}});
    return id;
}

namespace {

// Forward closure over committed edges, pruned at nodes already owned by
// `claimant`.  Throws on foreign ownership, otherwise returns the newly
// claimable nodes.
std::vector<NodeId> scan_closure_for_claim(const Graph& g, NodeId start, const UserId& claimant) {
    std::vector<NodeId> claimed;
    std::set<NodeId> seen;
    std::vector<NodeId> stack{start};
    while (!stack.empty()) {
        NodeId n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        const auto& owner = g.node(n).owner;
        if (owner && *owner != claimant)
            raise(Errc::IsolationViolation,
                  "node " + to_string(n) + " belongs to " + *owner + ", not " + claimant);
        if (owner) continue;  // already claimed closure, pruned
        claimed.push_back(n);
        for (EdgeId e : g.outgoing(n)) stack.push_back(g.edge(e).destination);
    }
    return claimed;
}

}  // namespace

EdgeId Runtime::connect(NodeId source, NodeId destination, ValueMap data) {
    if (!graph_.has_node(source)) raise(Errc::MissingNode, to_string(source));
    if (!graph_.has_node(destination)) raise(Errc::MissingNode, to_string(destination));
    const auto& src_owner = graph_.node(source).owner;
    std::vector<NodeId> claimed;
    if (src_owner) claimed = scan_closure_for_claim(graph_, destination, *src_owner);
    EdgeId id = graph_.add_edge(source, destination, data);
    for (NodeId n : claimed) graph_.node(n).owner = *src_owner;
    emit_mutation("connect", Value{{"id", id.value},
                                   {"source", source.value},
                                   {"destination", destination.value},
                                   {"data", data}});
    return id;
}

void Runtime::disconnect(EdgeId edge) {
    graph_.remove_edge(edge);  // throws MissingEdge
    emit_mutation("disconnect", Value{{"id", edge.value}});
    recompute_ownership();
}

void Runtime::set_node_property(NodeId node, const std::string& name, Value v) {
    graph_.node(node).properties[name] = v;
    emit_mutation("set_node_prop", Value{{"id", node.value}, {"name", name}, {"value", v}});
}

EdgeId Runtime::debug_connect_unchecked(NodeId source, NodeId destination) {
    return graph_.add_edge(source, destination, empty_map());
}

void Runtime::recompute_ownership() {
    for (auto& [id, node] : graph_.nodes_mutable()) node.owner.reset();
    for (const auto& [user, root] : roots_) {
        std::vector<NodeId> stack{root};
        std::set<NodeId> seen;
        while (!stack.empty()) {
            NodeId n = stack.back();
            stack.pop_back();
            if (!seen.insert(n).second) continue;
            auto& owner = graph_.node(n).owner;
            if (owner && *owner != user) continue;  // conflict: auditor reports it
            owner = user;
            for (EdgeId e : graph_.outgoing(n)) stack.push_back(graph_.edge(e).destination);
        }
    }
}

// ---------------------------------------------------------------------------
// Runtime: walker lifecycle
// ---------------------------------------------------------------------------

WalkerId Runtime::instantiate_walker(const std::string& archetype, std::optional<UserId> user) {
    const WalkerArchetype& type = registry_.walker_type(archetype);  // throws UnknownArchetype
    WalkerId id{next_walker_id_++};
    Walker w;
    w.id = id;
    w.archetype = archetype;
    w.user = std::move(user);
    w.properties = type.defaults;
    walkers_.emplace(id, std::move(w));
    return id;
}

WalkerId Runtime::spawn(const std::string& archetype, ValueMap properties, NodeId at) {
    WalkerId id = instantiate_walker(archetype);
    Walker& w = walkers_.at(id);
    for (auto it = properties.begin(); it != properties.end(); ++it) w.properties[it.key()] = it.value();
    spawn_at(id, at);
    return id;
}

void Runtime::spawn_at(WalkerId id, NodeId at) {
    Walker& w = walker(id);
    if (w.status != WalkerStatus::Created)
        raise(Errc::WalkerNotActive, "spawn of " + std::string(status_name(w.status)) + " walker");
    if (!graph_.has_node(at)) raise(Errc::MissingNode, to_string(at));
    execute_step(w, /*spawn_phase=*/true, at);
}

void Runtime::visit(WalkerId id, NodeId destination) {
    Walker& w = walker(id);
    if (w.status != WalkerStatus::Active)
        raise(Errc::WalkerNotActive, "visit on " + std::string(status_name(w.status)) + " walker");
    if (!graph_.has_node(destination)) raise(Errc::MissingNode, to_string(destination));
    if (!edge_exists_with_buffer(*w.location, destination))
        raise(Errc::NoSuchEdge, to_string(*w.location) + " -> " + to_string(destination));
    w.queue.push_back(destination);
    trace_.record("enqueue", Value{{"walker", id.value}, {"node", destination.value}});
}

WalkerStatus Runtime::step(WalkerId id) {
    Walker& w = walker(id);
    if (w.status != WalkerStatus::Active)
        raise(Errc::WalkerNotActive, "step on " + std::string(status_name(w.status)) + " walker");
    if (w.queue.empty()) raise(Errc::WalkerNotActive, "step with empty queue");
    execute_step(w, /*spawn_phase=*/false, NodeId{});
    return w.status;
}

void Runtime::disengage(WalkerId id) {
    Walker& w = walker(id);
    if (w.status != WalkerStatus::Active)
        raise(Errc::WalkerNotActive, "disengage on " + std::string(status_name(w.status)) + " walker");
    w.status = WalkerStatus::Disengaged;
    w.queue.clear();
    w.location.reset();
    trace_.record("disengage", Value{{"walker", id.value}});
}

WalkerStatus Runtime::run_to_completion(WalkerId id) {
    while (walker(id).status == WalkerStatus::Active) step(id);
    return walker(id).status;
}

Walker& Runtime::walker(WalkerId id) {
    auto it = walkers_.find(id);
    if (it == walkers_.end()) raise(Errc::MissingNode, "walker " + to_string(id));
    return it->second;
}

const Walker& Runtime::walker(WalkerId id) const {
    auto it = walkers_.find(id);
    if (it == walkers_.end()) raise(Errc::MissingNode, "walker " + to_string(id));
    return it->second;
}

bool Runtime::any_walker_active() const {
    for (const auto& [id, w] : walkers_)
        if (w.status == WalkerStatus::Active) return true;
    return false;
}

void Runtime::overwrite_walker(const Walker& st) {
    walker(st.id) = st;
}

// ---------------------------------------------------------------------------
// Runtime: step execution
// ---------------------------------------------------------------------------

void Runtime::execute_step(Walker& w, bool spawn_phase, NodeId spawn_node) {
    const StepEffects* replay = step_ ? step_->replay : nullptr;
    if (step_ && !replay) raise(Errc::WalkersActive, "engine re-entered mid-step");

    NodeId dest;
    NodeId old_location{};
    if (spawn_phase) {
        dest = spawn_node;
    } else {
        dest = w.queue.front();
        w.queue.pop_front();
        old_location = *w.location;
    }

    if (!step_) open_buffer(w, nullptr);
    if (spawn_phase && effect_sink_ && !step_->replay) step_->effects.spawn_node = dest.value;

    try {
        if (spawn_phase) {
            w.status = WalkerStatus::Active;
            w.location = dest;
            w.path.push_back(dest);
            trace_.record("spawn", Value{{"walker", w.id.value}, {"node", dest.value}});
            if (driver_ && !step_->replay) driver_->on_spawn(w, dest);
            dispatch(w, dest, Trigger::Entry);
        } else {
            dispatch(w, old_location, Trigger::Exit);
            if (w.status == WalkerStatus::Active) {
                if (driver_ && !step_->replay) driver_->on_traverse(w, old_location, dest);
                move_walker(w, dest);
                dispatch(w, dest, Trigger::Entry);
            }
        }
    } catch (const WalkerLostSignal&) {
        abort_buffer();
        // recovery rebuilds from the checkpoint; restoring the queue keeps
        // the unrecoverable-walker failure path consistent
        if (!spawn_phase) w.queue.push_front(dest);
        throw;
    } catch (const Error& e) {
        abort_buffer();
        if (w.status == WalkerStatus::Active) disengage(w.id);
        throw Error(e.code(), std::string(e.what()) + " (walker " + to_string(w.id) + ", step " +
                                  std::to_string(w.step_index + 1) + ")",
                    e.detail());
    } catch (const std::exception& e) {
        abort_buffer();
        if (w.status == WalkerStatus::Active) disengage(w.id);
        raise(Errc::WalkerFault, std::string(e.what()) + " (walker " + to_string(w.id) + ")");
    }

    const bool replaying = step_->replay != nullptr;
    w.step_index += 1;
    commit_buffer(w);
    finish_if_done(w);
    if (driver_ && !replaying) driver_->on_step_boundary(w);
    if (driver_ && !replaying && w.status != WalkerStatus::Active) driver_->on_walker_finished(w);
}

void Runtime::move_walker(Walker& w, NodeId to) {
    w.location = to;
    w.path.push_back(to);
    trace_.record("move", Value{{"walker", w.id.value}, {"node", to.value}});
}

void Runtime::finish_if_done(Walker& w) {
    if (w.status == WalkerStatus::Active && w.queue.empty()) {
        w.status = WalkerStatus::Completed;
        w.location.reset();
        trace_.record("complete", Value{{"walker", w.id.value}});
    }
}

void Runtime::dispatch(Walker& w, NodeId node, Trigger trigger) {
    const std::string& node_arch = node_archetype_with_buffer(node);
    // node-hosted abilities first, walker-hosted second; declaration order
    // within each host; nothing runs once the walker leaves Active.
    const auto& ntype = registry_.node_type(node_arch);
    for (const Ability& a : ntype.abilities) {
        if (w.status != WalkerStatus::Active) return;
        if (a.trigger != trigger) continue;
        if (a.filter != kAnyArchetype && a.filter != w.archetype) continue;
        run_ability(w, node, a, "node");
    }
    const auto& wtype = registry_.walker_type(w.archetype);
    for (const Ability& a : wtype.abilities) {
        if (w.status != WalkerStatus::Active) return;
        if (a.trigger != trigger) continue;
        if (a.filter != kAnyArchetype && a.filter != node_arch) continue;
        run_ability(w, node, a, "walker");
    }
}

void Runtime::run_ability(Walker& w, NodeId node, const Ability& ability, const char* host) {
    trace_.record("ability", Value{{"walker", w.id.value},
                                   {"node", node.value},
                                   {"name", ability.name},
                                   {"host", host},
                                   {"trigger", ability.trigger == Trigger::Entry ? "entry" : "exit"}});
    AbilityContext ctx(*this, w, node);
    ability.body(ctx);
}

// ---------------------------------------------------------------------------
// Runtime: step buffer
// ---------------------------------------------------------------------------

void Runtime::open_buffer(Walker&, const StepEffects* replay) {
    step_ = std::make_unique<StepBuffer>();
    step_->node_id_mark = graph_.next_node_id();
    step_->edge_id_mark = graph_.next_edge_id();
    step_->replay = replay;
}

void Runtime::abort_buffer() {
    if (!step_) return;
    graph_.rewind_node_ids(step_->node_id_mark);
    graph_.rewind_edge_ids(step_->edge_id_mark);
    step_.reset();
}

void Runtime::commit_buffer(Walker& w) {
    if (!step_) return;
    StepBuffer buf = std::move(*step_);
    step_.reset();
    if (buf.replay) return;  // effects were committed before the fault

    for (auto& pn : buf.nodes) {
        graph_.add_node_with_id(pn.id, pn.archetype, pn.properties, std::nullopt);
        emit_mutation("create_node", Value{{"id", pn.id.value},
                                           {"archetype", pn.archetype},
                                           {"properties", pn.properties}});
        if (driver_) driver_->on_node_created(w, pn.id);
    }
    bool added_edges = false;
    for (auto& pe : buf.edges) {
        graph_.add_edge_with_id(pe.id, pe.source, pe.destination, pe.data);
        emit_mutation("connect", Value{{"id", pe.id.value},
                                       {"source", pe.source.value},
                                       {"destination", pe.destination.value},
                                       {"data", pe.data}});
        added_edges = true;
    }
    for (auto& [key, value] : buf.writes) {
        graph_.node(key.first).properties[key.second] = value;
        emit_mutation("set_node_prop",
                      Value{{"id", key.first.value}, {"name", key.second}, {"value", value}});
        if (driver_) driver_->on_write_committed(w, key.first);
    }
    if (added_edges) recompute_ownership();

    if (effect_sink_) {
        buf.effects.step_index = w.step_index;
        effect_sink_->commit_step(w.id, std::move(buf.effects));
    }
}

void Runtime::replay_step(WalkerId id, const StepEffects& effects) {
    Walker& w = walker(id);
    open_buffer(w, &effects);
    if (effects.spawn_node) {
        execute_step(w, true, NodeId{*effects.spawn_node});
    } else {
        if (w.status != WalkerStatus::Active || w.queue.empty())
            raise(Errc::WalkerNotActive, "replay against non-pending walker");
        execute_step(w, false, NodeId{});
    }
}

Value Runtime::buffered_node_get(Walker& w, NodeId node, const std::string& name, Value fallback,
                                 bool* present_out) {
    if (step_ && step_->replay) {
        if (step_->replay_read_pos >= step_->replay->reads.size())
            raise(Errc::WalkerFault, "replay read past recorded effects");
        const Value& rec = step_->replay->reads[step_->replay_read_pos++];
        bool present = rec.at("p").get<bool>();
        if (present_out) *present_out = present;
        return present ? rec.at("v") : fallback;
    }

    if (driver_) driver_->on_node_read(w, node);

    bool present = false;
    Value out = fallback;
    if (step_) {
        auto it = step_->writes.find({node, name});
        if (it != step_->writes.end()) {
            present = true;
            out = it->second;
        }
    }
    if (!present && step_) {
        for (const auto& pn : step_->nodes) {
            if (pn.id == node) {
                if (pn.properties.contains(name)) {
                    present = true;
                    out = pn.properties.at(name);
                }
                break;
            }
        }
    }
    if (!present && graph_.has_node(node)) {
        const auto& props = graph_.node(node).properties;
        if (props.contains(name)) {
            present = true;
            out = props.at(name);
        }
    }

    if (step_ && effect_sink_)
        step_->effects.reads.push_back(Value{{"p", present}, {"v", present ? out : Value(nullptr)}});
    if (present_out) *present_out = present;
    return out;
}

void Runtime::buffered_node_set(Walker& w, NodeId node, const std::string& name, Value v) {
    if (step_ && step_->replay) return;  // committed before the fault
    if (driver_) driver_->on_node_write(w, node);
    if (!step_) {
        set_node_property(node, name, std::move(v));
        return;
    }
    if (effect_sink_)
        step_->effects.writes.push_back(Value{{"node", node.value}, {"prop", name}, {"value", v}});
    step_->writes[{node, name}] = std::move(v);
}

NodeId Runtime::buffered_create(Walker&, const std::string& archetype, ValueMap properties) {
    if (!registry_.has_node_archetype(archetype))
        raise(Errc::UnknownArchetype, "node archetype " + archetype);
    if (step_ && step_->replay) {
        if (step_->replay_node_pos >= step_->replay->created_nodes.size())
            raise(Errc::WalkerFault, "replay create past recorded effects");
        return NodeId{step_->replay->created_nodes[step_->replay_node_pos++]};
    }
    if (!step_) raise(Errc::WalkersActive, "create_node outside a step");
    NodeId id = graph_.allocate_node_id();
    if (effect_sink_) step_->effects.created_nodes.push_back(id.value);
    step_->nodes.push_back(PendingNode{id, archetype, std::move(properties)});
    return id;
}

EdgeId Runtime::buffered_connect(Walker&, NodeId source, NodeId destination, ValueMap data) {
    if (step_ && step_->replay) {
        if (step_->replay_edge_pos >= step_->replay->created_edges.size())
            raise(Errc::WalkerFault, "replay connect past recorded effects");
        return EdgeId{step_->replay->created_edges[step_->replay_edge_pos++]};
    }
    if (!step_) raise(Errc::WalkersActive, "connect outside a step");
    if (!node_exists_with_buffer(source)) raise(Errc::MissingNode, to_string(source));
    if (!node_exists_with_buffer(destination)) raise(Errc::MissingNode, to_string(destination));
    check_connect_isolation(source, destination);
    EdgeId id = graph_.allocate_edge_id();
    if (effect_sink_) step_->effects.created_edges.push_back(id.value);
    step_->edges.push_back(PendingEdge{id, source, destination, std::move(data)});
    return id;
}

bool Runtime::node_exists_with_buffer(NodeId node) const {
    if (graph_.has_node(node)) return true;
    if (step_)
        for (const auto& pn : step_->nodes)
            if (pn.id == node) return true;
    return false;
}

const std::string& Runtime::node_archetype_with_buffer(NodeId node) const {
    if (graph_.has_node(node)) return graph_.node(node).archetype;
    if (step_)
        for (const auto& pn : step_->nodes)
            if (pn.id == node) return pn.archetype;
    raise(Errc::MissingNode, to_string(node));
}

bool Runtime::edge_exists_with_buffer(NodeId source, NodeId destination) const {
    if (graph_.has_node(source) && graph_.connected(source, destination)) return true;
    if (step_)
        for (const auto& pe : step_->edges)
            if (pe.source == source && pe.destination == destination) return true;
    return false;
}

std::vector<std::pair<EdgeId, NodeId>> Runtime::adjacent_with_buffer(NodeId node,
                                                                     bool outgoing) const {
    std::vector<std::pair<EdgeId, NodeId>> out;
    if (graph_.has_node(node)) {
        for (EdgeId e : outgoing ? graph_.outgoing(node) : graph_.incoming(node)) {
            const Edge& edge = graph_.edge(e);
            out.emplace_back(e, outgoing ? edge.destination : edge.source);
        }
    }
    if (step_) {
        for (const auto& pe : step_->edges) {
            if (outgoing && pe.source == node) out.emplace_back(pe.id, pe.destination);
            if (!outgoing && pe.destination == node) out.emplace_back(pe.id, pe.source);
        }
    }
    return out;
}

std::optional<UserId> Runtime::owner_with_buffer(NodeId node) const {
    if (step_) {
        // buffer-created nodes are unowned until committed + reachable
        for (const auto& pn : step_->nodes)
            if (pn.id == node) return std::nullopt;
    }
    if (graph_.has_node(node)) return graph_.node(node).owner;
    return std::nullopt;
}

void Runtime::check_connect_isolation(NodeId source, NodeId destination) const {
    auto claimant = owner_with_buffer(source);
    if (!claimant) return;  // unreachable source: attaching transient state
    // forward closure of destination over committed + buffered edges
    std::set<NodeId> seen;
    std::vector<NodeId> stack{destination};
    while (!stack.empty()) {
        NodeId n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        auto owner = owner_with_buffer(n);
        if (owner && *owner != *claimant)
            raise(Errc::IsolationViolation,
                  "edge would join subgraphs of " + *claimant + " and " + *owner);
        if (owner && *owner == *claimant) continue;  // closed territory, pruned
        for (const auto& [e, next] : adjacent_with_buffer(n, true)) stack.push_back(next);
    }
}

void Runtime::emit_mutation(const std::string& op, Value args) {
    if (mutation_sink_) mutation_sink_(op, args);
}

}  // namespace trellis

#include "trellis/scenarios.hpp"

#include "trellis/user_context.hpp"

namespace trellis {

UserId scenario_user(int index) { return "user" + std::to_string(index); }

namespace {

// Hop to the first outgoing neighbor of the given archetype, if any.
void visit_first(AbilityContext& ctx, const std::string& archetype) {
    for (const auto& [e, n] : ctx.out_edges()) {
        if (ctx.archetype_of(n) == archetype) {
            ctx.visit(n);
            return;
        }
    }
}

Scenario make_counter() {
    Scenario sc;
    sc.name = "counter";
    sc.description = "per-user persistent counter cell under the root";
    sc.program = [](Runtime& rt, Gateway& gw) {
        rt.archetypes().register_node_archetype("counter_cell");
        rt.archetypes().register_walker_archetype("counter_incr");
        rt.archetypes().add_walker_ability(
            "counter_incr",
            Ability{"find_or_make_cell", Trigger::Entry, Runtime::kRootArchetype,
                    [](AbilityContext& ctx) {
                        for (const auto& [e, n] : ctx.out_edges()) {
                            if (ctx.archetype_of(n) == "counter_cell") {
                                ctx.visit(n);
                                return;
                            }
                        }
                        NodeId cell = ctx.create_node("counter_cell", ValueMap{{"count", 0}});
                        ctx.connect(ctx.here(), cell);
                        ctx.visit(cell);
                    }});
        rt.archetypes().add_walker_ability(
            "counter_incr", Ability{"bump", Trigger::Entry, "counter_cell",
                                    [](AbilityContext& ctx) {
                                        std::int64_t count =
                                            ctx.node_get("count", 0).get<std::int64_t>() + 1;
                                        ctx.node_set("count", count);
                                        ctx.result_set("count", count);
                                    }});
        gw.register_entrypoint(EntryPointSpec{"incr", "counter_incr", {}, {}});
    };
    sc.script = [](int users) {
        std::vector<InvocationRequest> script;
        for (int round = 0; round < 3; ++round)
            for (int u = 0; u < users; ++u)
                script.push_back(InvocationRequest{scenario_user(u), "incr", empty_map()});
        return script;
    };
    return sc;
}

Scenario make_social_graph() {
    Scenario sc;
    sc.name = "social_graph";
    sc.description = "per-user friend list: isolation plus fan-out traversal";
    sc.program = [](Runtime& rt, Gateway& gw) {
        rt.archetypes().register_node_archetype("person");
        rt.archetypes().register_walker_archetype("friend_adder", ValueMap{{"name", ""}});
        rt.archetypes().register_walker_archetype("friend_lister");
        rt.archetypes().add_walker_ability(
            "friend_adder", Ability{"attach_person", Trigger::Entry, Runtime::kRootArchetype,
                                    [](AbilityContext& ctx) {
                                        Value name = ctx.walker_get("name", "");
                                        NodeId person =
                                            ctx.create_node("person", ValueMap{{"name", name}});
                                        ctx.connect(ctx.here(), person);
                                        ctx.result_set("added", name);
                                    }});
        rt.archetypes().add_walker_ability(
            "friend_lister", Ability{"fan_out", Trigger::Entry, Runtime::kRootArchetype,
                                     [](AbilityContext& ctx) {
                                         for (const auto& [e, n] : ctx.out_edges())
                                             if (ctx.archetype_of(n) == "person") ctx.visit(n);
                                     }});
        rt.archetypes().add_walker_ability(
            "friend_lister",
            Ability{"collect", Trigger::Entry, "person", [](AbilityContext& ctx) {
                        Value list = ctx.result_get("friends", Value::array());
                        list.push_back(ctx.node_get("name", ""));
                        ctx.result_set("friends", list);
                    }});
        gw.register_entrypoint(EntryPointSpec{
            "add_friend",
            "friend_adder",
            {ParamSpec{"name", "name", ValueType::Text, true, nullptr}},
            {}});
        gw.register_entrypoint(EntryPointSpec{"list_friends", "friend_lister", {}, {}});
    };
    sc.script = [](int users) {
        std::vector<InvocationRequest> script;
        for (int u = 0; u < users; ++u) {
            for (int f = 0; f <= u; ++f)
                script.push_back(InvocationRequest{
                    scenario_user(u), "add_friend",
                    ValueMap{{"name", "friend" + std::to_string(f) + "_of_" + std::to_string(u)}}});
            script.push_back(InvocationRequest{scenario_user(u), "list_friends", empty_map()});
        }
        return script;
    };
    return sc;
}

void add_stage_walker(Runtime& rt, const std::string& walker_name) {
    rt.archetypes().register_walker_archetype(walker_name);
    rt.archetypes().add_walker_ability(
        walker_name, Ability{"enter_chain", Trigger::Entry, Runtime::kRootArchetype,
                             [](AbilityContext& ctx) { visit_first(ctx, "stage"); }});
    rt.archetypes().add_walker_ability(
        walker_name, Ability{"process_stage", Trigger::Entry, "stage", [](AbilityContext& ctx) {
                                 std::int64_t hits =
                                     ctx.node_get("hits", 0).get<std::int64_t>() + 1;
                                 ctx.node_set("hits", hits);
                                 ctx.result_set(
                                     "visited",
                                     ctx.result_get("visited", 0).get<std::int64_t>() + 1);
                                 ctx.result_set(
                                     "total",
                                     ctx.result_get("total", 0).get<std::int64_t>() + hits);
                                 visit_first(ctx, "stage");
                             }});
}

void build_stage_chain(Runtime& rt, const UserId& user, int length, ClusterSim* sim,
                       bool pin_halves) {
    NodeId root = user_context::resolve_root(rt, user);
    NodeId prev = root;
    for (int i = 0; i < length; ++i) {
        NodeId stage = rt.create_node("stage", ValueMap{{"hits", 0}});
        rt.connect(prev, stage);
        if (sim != nullptr && pin_halves && sim->config().machines >= 2) {
            // first half co-located with the root, second half on machine 1
            sim->set_affinity_hint(stage, MachineId{i < length / 2 ? 0ull : 1ull});
            if (i == 0) sim->set_affinity_hint(root, MachineId{0});
        }
        prev = stage;
    }
}

Scenario make_chain_pipeline() {
    Scenario sc;
    sc.name = "chain_pipeline";
    sc.description = "walker processes a 10-stage chain split across machines";
    sc.program = [](Runtime& rt, Gateway& gw) {
        rt.archetypes().register_node_archetype("stage");
        add_stage_walker(rt, "runner");
        gw.register_entrypoint(EntryPointSpec{"walk", "runner", {}, {}});
    };
    sc.fixture = [](Runtime& rt, Gateway&, const UserId& user, ClusterSim* sim) {
        build_stage_chain(rt, user, kChainLength, sim, /*pin_halves=*/true);
    };
    sc.script = [](int users) {
        std::vector<InvocationRequest> script;
        for (int u = 0; u < users; ++u)
            script.push_back(InvocationRequest{scenario_user(u), "walk", empty_map()});
        return script;
    };
    return sc;
}

Scenario make_star_fanout() {
    Scenario sc;
    sc.name = "star_fanout";
    sc.description = "walker reads 50 bulky leaves hanging off one remote hub";
    sc.program = [](Runtime& rt, Gateway& gw) {
        rt.archetypes().register_node_archetype("star_hub");
        rt.archetypes().register_node_archetype("star_leaf");
        rt.archetypes().register_walker_archetype("fan_reader");
        rt.archetypes().add_walker_ability(
            "fan_reader", Ability{"to_hub", Trigger::Entry, Runtime::kRootArchetype,
                                  [](AbilityContext& ctx) { visit_first(ctx, "star_hub"); }});
        rt.archetypes().add_walker_ability(
            "fan_reader", Ability{"fan", Trigger::Entry, "star_hub", [](AbilityContext& ctx) {
                                      for (const auto& [e, n] : ctx.out_edges())
                                          if (ctx.archetype_of(n) == "star_leaf") ctx.visit(n);
                                  }});
        rt.archetypes().add_walker_ability(
            "fan_reader",
            Ability{"accumulate", Trigger::Entry, "star_leaf", [](AbilityContext& ctx) {
                        std::int64_t sum = ctx.result_get("sum", 0).get<std::int64_t>() +
                                           ctx.node_get("value", 0).get<std::int64_t>();
                        ctx.result_set("sum", sum);
                    }});
        gw.register_entrypoint(EntryPointSpec{"read_all", "fan_reader", {}, {}});
    };
    sc.fixture = [](Runtime& rt, Gateway&, const UserId& user, ClusterSim* sim) {
        NodeId root = user_context::resolve_root(rt, user);
        NodeId hub = rt.create_node("star_hub", empty_map());
        rt.connect(root, hub);
        const std::string blob(kStarLeafBlobBytes, 'x');
        for (int i = 0; i < kStarLeaves; ++i) {
            NodeId leaf = rt.create_node("star_leaf", ValueMap{{"value", i + 1}, {"blob", blob}});
            rt.connect(hub, leaf);
            if (sim != nullptr && sim->config().machines >= 2)
                sim->set_affinity_hint(leaf, MachineId{1});
        }
        if (sim != nullptr && sim->config().machines >= 2) {
            sim->set_affinity_hint(root, MachineId{0});
            sim->set_affinity_hint(hub, MachineId{0});
        }
    };
    sc.script = [](int users) {
        std::vector<InvocationRequest> script;
        for (int u = 0; u < users; ++u)
            script.push_back(InvocationRequest{scenario_user(u), "read_all", empty_map()});
        return script;
    };
    return sc;
}

Scenario make_long_walk() {
    Scenario sc;
    sc.name = "long_walk";
    sc.description = "30-stage walk with replication and per-step checkpoints";
    sc.program = [](Runtime& rt, Gateway& gw) {
        rt.archetypes().register_node_archetype("stage");
        add_stage_walker(rt, "trekker");
        gw.register_entrypoint(EntryPointSpec{"trek", "trekker", {}, {}});
    };
    sc.fixture = [](Runtime& rt, Gateway&, const UserId& user, ClusterSim* sim) {
        build_stage_chain(rt, user, kLongWalkLength, sim, /*pin_halves=*/false);
    };
    sc.script = [](int users) {
        std::vector<InvocationRequest> script;
        for (int u = 0; u < users; ++u)
            script.push_back(InvocationRequest{scenario_user(u), "trek", empty_map()});
        return script;
    };
    sc.rep_factor = 2;
    sc.cadence = CheckpointCadence::EveryStep;
    return sc;
}

}  // namespace

const std::vector<Scenario>& bundled_scenarios() {
    static const std::vector<Scenario> all{make_counter(), make_social_graph(),
                                           make_chain_pipeline(), make_star_fanout(),
                                           make_long_walk()};
    return all;
}

const Scenario& find_scenario(const std::string& name) {
    for (const Scenario& sc : bundled_scenarios())
        if (sc.name == name) return sc;
    raise(Errc::BadConfig, "unknown scenario " + name);
}

}  // namespace trellis

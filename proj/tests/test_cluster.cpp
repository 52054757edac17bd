#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "trellis/harness.hpp"
#include "trellis/placement.hpp"
#include "trellis/user_context.hpp"

#include <random>

using namespace trellis;

namespace {

Runtime make_runtime() {
    Runtime rt;
    rt.archetypes().register_node_archetype("blob");
    rt.archetypes().register_walker_archetype("probe");
    return rt;
}

/// Independent cost oracle for a chain walk with one read and one write per
/// stage: plain arithmetic over the stage->machine map, no simulator code.
struct ChainCosts {
    std::uint64_t remote_accesses = 0;
    std::uint64_t migrations = 0;
    std::uint64_t messages = 0;
};

ChainCosts chain_cost_oracle(const std::vector<std::uint64_t>& stage_machine,
                             std::uint64_t walker_home, bool computation_centric) {
    ChainCosts costs;
    std::uint64_t at = walker_home;
    for (std::uint64_t m : stage_machine) {
        if (computation_centric) {
            if (m != at) {
                ++costs.migrations;
                at = m;
            }
        } else {
            if (m != at) costs.remote_accesses += 2;  // one read + one write
        }
    }
    costs.messages = 2 * costs.remote_accesses + costs.migrations;
    return costs;
}

}  // namespace

TEST_CASE("placement: single machine holds everything with zero cut") {
    Runtime rt = make_runtime();
    std::vector<NodeId> v;
    for (int i = 0; i < 8; ++i) v.push_back(rt.create_node("blob", empty_map()));
    for (int i = 0; i + 1 < 8; ++i) rt.connect(v[i], v[i + 1]);
    SizeModel sizes(rt);
    PlacementResult got = place_nodes(rt.graph(), sizes, 1, 1 << 20, 3);
    CHECK(got.cut_edges == 0);
    for (const auto& [n, m] : got.assignment) CHECK(m == MachineId{0});
}

TEST_CASE("placement: two 3-cliques with a bridge split cleanly") {
    Runtime rt = make_runtime();
    std::vector<NodeId> v;
    for (int i = 0; i < 6; ++i) v.push_back(rt.create_node("blob", empty_map()));
    std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}, {2, 3}};
    for (auto [a, b] : edges) rt.connect(v[a], v[b]);

    SizeModel sizes(rt);
    // exhaustive enumeration of balanced 2-partitions of 6 nodes
    std::uint64_t best = ~0ull;
    for (int mask = 0; mask < 64; ++mask) {
        if (__builtin_popcount(mask) != 3) continue;
        std::uint64_t cut = 0;
        for (auto [a, b] : edges)
            if (((mask >> a) & 1) != ((mask >> b) & 1)) ++cut;
        best = std::min(best, cut);
    }
    REQUIRE(best == 1);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        PlacementResult got = place_nodes(rt.graph(), sizes, 2, 1 << 20, seed);
        CHECK(got.cut_edges == 1);  // cliques stay intact
    }
}

TEST_CASE("placement: deterministic given seed, better than random baseline") {
    std::mt19937_64 rng(4242);
    int wins = 0;
    const int kInstances = 20;
    for (int t = 0; t < kInstances; ++t) {
        Runtime rt = make_runtime();
        int n = 20 + static_cast<int>(rng() % 21);
        std::vector<NodeId> v;
        for (int i = 0; i < n; ++i) v.push_back(rt.create_node("blob", empty_map()));
        for (int e = 0; e < 2 * n; ++e)
            rt.connect(v[rng() % n], v[rng() % n]);
        SizeModel sizes(rt);

        PlacementResult a = place_nodes(rt.graph(), sizes, 2, 1 << 24, 1234);
        PlacementResult b = place_nodes(rt.graph(), sizes, 2, 1 << 24, 1234);
        CHECK(a.assignment == b.assignment);  // determinism

        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::map<NodeId, MachineId> random_assign;
        for (int i = 0; i < n; ++i)
            random_assign[v[order[i]]] = MachineId{i < n / 2 ? 0ull : 1ull};
        if (a.cut_edges <= count_cut_edges(rt.graph(), random_assign)) ++wins;
    }
    CHECK(wins >= 19);
}

TEST_CASE("placement rejects workloads beyond total capacity") {
    Runtime rt = make_runtime();
    for (int i = 0; i < 4; ++i) rt.create_node("blob", ValueMap{{"pad", std::string(100, 'x')}});
    SizeModel sizes(rt);
    CHECK_THROWS_AS(place_nodes(rt.graph(), sizes, 2, 64, 1), Error);
}

TEST_CASE("affinity hints pin nodes when capacity allows") {
    Runtime rt = make_runtime();
    NodeId a = rt.create_node("blob", empty_map());
    NodeId b = rt.create_node("blob", empty_map());
    rt.connect(a, b);
    SizeModel sizes(rt);
    std::map<NodeId, MachineId> hints{{a, MachineId{1}}, {b, MachineId{0}}};
    PlacementResult got = place_nodes(rt.graph(), sizes, 2, 1 << 20, 9, hints);
    CHECK(got.assignment.at(a) == MachineId{1});  // pinned despite the cut cost
    CHECK(got.assignment.at(b) == MachineId{0});
}

TEST_CASE("access costs: local free, remote two messages scaled by strength") {
    for (std::uint64_t strength : {std::uint64_t{1}, std::uint64_t{3}}) {
        Runtime rt = make_runtime();
        ClusterConfig cfg;
        cfg.machines = 2;
        cfg.mode = DistributionMode::DataCentric;
        cfg.consistency_strength = strength;
        cfg.base_latency = 10;
        ClusterSim sim(rt, cfg);

        NodeId near = rt.create_node("blob", ValueMap{{"v", 1}});
        NodeId far = rt.create_node("blob", ValueMap{{"v", 2}});
        sim.place_node(near, MachineId{0});
        sim.place_node(far, MachineId{1});
        WalkerId w = rt.spawn("probe", empty_map(), near);
        REQUIRE(sim.walker_machine(w) == MachineId{0});

        auto [v1, local] = sim.read_property(w, near, "v");
        CHECK(v1 == Value(1));
        CHECK_FALSE(local.remote);
        CHECK(local.messages == 0);
        CHECK(sim.totals().messages == 0);

        auto [v2, remote] = sim.read_property(w, far, "v");
        CHECK(v2 == Value(2));
        CHECK(remote.remote);
        CHECK(remote.messages == 2);
        CHECK(remote.latency == 10 * strength);

        sim.write_property(w, far, "v", Value(9));
        CHECK(rt.graph().node(far).properties.at("v") == Value(9));
        CHECK(sim.totals().remote_accesses == 2);
        CHECK(sim.totals().messages == 4);
        CHECK(sim.totals().access_latency == 2 * 10 * strength);
        CHECK(sim.counters_conserved());
    }
}

TEST_CASE("remote-access latency totals scale exactly with consistency strength") {
    auto latency_for = [](std::uint64_t strength) {
        RunOptions opt;
        opt.scale = ScaleSpec{1, 2, false};
        opt.mode = DistributionMode::DataCentric;
        opt.seed = 11;
        opt.consistency_strength = strength;
        RunReport r = run_scenario(find_scenario("chain_pipeline"), opt);
        return r.metrics.at("totals").at("access_latency").get<std::uint64_t>();
    };
    std::uint64_t base = latency_for(1);
    CHECK(base > 0);
    CHECK(latency_for(3) == 3 * base);
}

TEST_CASE("latency never decreases as consistency strength grows") {
    std::uint64_t prev = 0;
    for (std::uint64_t strength : {1, 2, 5}) {
        RunOptions opt;
        opt.scale = ScaleSpec{1, 2, false};
        opt.mode = DistributionMode::DataCentric;
        opt.seed = 11;
        opt.consistency_strength = strength;
        RunReport r = run_scenario(find_scenario("star_fanout"), opt);
        std::uint64_t total = r.metrics.at("totals").at("modeled_latency").get<std::uint64_t>();
        CHECK(total >= prev);
        prev = total;
    }
}

TEST_CASE("chain traversal costs match the arithmetic oracle for any placement") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        for (bool comp : {false, true}) {
            Runtime rt;
            Gateway gw(rt);
            const Scenario& sc = find_scenario("chain_pipeline");
            sc.program(rt, gw);
            ClusterConfig cfg;
            cfg.machines = 2;
            cfg.mode = comp ? DistributionMode::ComputationCentric : DistributionMode::DataCentric;
            cfg.seed = seed;
            ClusterSim sim(rt, cfg);
            gw.attach_cluster(&sim);
            sc.fixture(rt, gw, "alice", &sim);
            sim.place_all();

            // stage nodes were created in chain order; ids are ascending
            std::vector<std::uint64_t> stage_machines;
            for (const auto& [id, node] : rt.graph().nodes())
                if (node.archetype == "stage")
                    stage_machines.push_back(sim.placement_of(id).value);
            REQUIRE(stage_machines.size() == kChainLength);
            std::uint64_t home = sim.placement_of(rt.roots().at("alice")).value;

            ValueMap result = gw.invoke("alice", "walk", empty_map());
            CHECK(result.at("visited") == Value(kChainLength));

            ChainCosts want = chain_cost_oracle(stage_machines, home, comp);
            MachineCounters got = sim.totals();
            CHECK(got.remote_accesses == want.remote_accesses);
            CHECK(got.migrations == want.migrations);
            CHECK(got.messages == want.messages);
            CHECK(sim.counters_conserved());
        }
    }
}

TEST_CASE("cross-machine traversal in computation-centric mode migrates the walker") {
    Runtime rt = make_runtime();
    rt.archetypes().register_walker_archetype("hopper");
    rt.archetypes().add_walker_ability(
        "hopper", Ability{"hop", Trigger::Entry, kAnyArchetype, [](AbilityContext& ctx) {
                              if (ctx.path_length() == 1)
                                  for (const auto& [e, n] : ctx.out_edges()) ctx.visit(n);
                          }});
    ClusterConfig cfg;
    cfg.machines = 2;
    cfg.mode = DistributionMode::ComputationCentric;
    ClusterSim sim(rt, cfg);
    NodeId a = rt.create_node("blob", empty_map());
    NodeId b = rt.create_node("blob", empty_map());
    rt.connect(a, b);
    sim.place_node(a, MachineId{0});
    sim.place_node(b, MachineId{1});

    WalkerId w = rt.spawn("hopper", empty_map(), a);
    rt.run_to_completion(w);
    CHECK(sim.totals().migrations == 1);
    CHECK(sim.walker_machine(w) == MachineId{1});
    CHECK(rt.walker(w).path == std::vector<NodeId>{a, b});
}

TEST_CASE("migrate round-trips walker state and refuses dead targets") {
    Runtime rt = make_runtime();
    rt.archetypes().register_walker_archetype("loaded");
    rt.archetypes().add_walker_ability(
        "loaded", Ability{"load_up", Trigger::Entry, kAnyArchetype, [](AbilityContext& ctx) {
                              if (ctx.path_length() > 1) return;
                              ctx.walker_set("cargo", ValueMap{{"weight", 12}});
                              ctx.result_set("trail", Value::array());
                              for (const auto& [e, n] : ctx.out_edges()) ctx.visit(n);
                              for (const auto& [e, n] : ctx.out_edges()) ctx.visit(n);
                          }});
    ClusterConfig cfg;
    cfg.machines = 3;
    cfg.mode = DistributionMode::DataCentric;
    ClusterSim sim(rt, cfg);
    NodeId a = rt.create_node("blob", empty_map());
    NodeId b = rt.create_node("blob", empty_map());
    NodeId c = rt.create_node("blob", empty_map());
    rt.connect(a, b);
    rt.connect(a, c);
    sim.place_node(a, MachineId{0});
    sim.place_node(b, MachineId{1});
    sim.place_node(c, MachineId{2});

    WalkerId w = rt.spawn("loaded", empty_map(), a);
    REQUIRE(rt.walker(w).queue.size() == 4);  // b,c,b,c pending mid-traversal

    Value before = walker_to_json(rt.walker(w));
    sim.migrate(w, MachineId{2});
    CHECK(walker_to_json(rt.walker(w)) == before);  // queue order preserved
    CHECK(sim.walker_machine(w) == MachineId{2});
    CHECK(sim.totals().migrations == 1);

    sim.kill_machine(MachineId{1});
    Value mid = walker_to_json(rt.walker(w));
    CHECK_THROWS_AS(sim.migrate(w, MachineId{1}), Error);
    CHECK(walker_to_json(rt.walker(w)) == mid);  // unchanged on failure
    CHECK(sim.walker_machine(w) == MachineId{2});
}

TEST_CASE("walker serialization round-trips random states") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 30; ++i) {
        Walker w;
        w.id = WalkerId{rng() % 1000 + 1};
        w.archetype = "probe";
        if (rng() % 2) w.user = "user" + std::to_string(rng() % 3);
        w.properties = ValueMap{{"a", static_cast<int>(rng() % 100)},
                                {"b", Value::array({1, 2, 3})}};
        int q = static_cast<int>(rng() % 5);
        for (int j = 0; j < q; ++j) w.queue.push_back(NodeId{rng() % 50 + 1});
        w.status = rng() % 2 ? WalkerStatus::Active : WalkerStatus::Completed;
        if (w.status == WalkerStatus::Active) w.location = NodeId{rng() % 50 + 1};
        int p = 1 + static_cast<int>(rng() % 6);
        for (int j = 0; j < p; ++j) w.path.push_back(NodeId{rng() % 50 + 1});
        w.result = ValueMap{{"r", static_cast<int>(rng() % 7)}};
        w.step_index = rng() % 20;

        Walker back = walker_from_json(walker_to_json(w));
        CHECK(walker_to_json(back) == walker_to_json(w));
        CHECK(back.queue == w.queue);
        CHECK(back.path == w.path);
        CHECK(back.status == w.status);
    }
}

TEST_CASE("choose_strategy follows the size rules and the MoveComp tie-break") {
    Runtime rt = make_runtime();
    ClusterConfig cfg;
    cfg.machines = 2;
    cfg.mode = DistributionMode::Hybrid;
    ClusterSim sim(rt, cfg);
    NodeId home = rt.create_node("blob", empty_map());
    NodeId target = rt.create_node("blob", empty_map());
    sim.place_node(home, MachineId{0});
    sim.place_node(target, MachineId{1});
    WalkerId w = rt.spawn("probe", empty_map(), home);

    sim.sizes().set_node_size(target, 1024);          // 1KB node
    sim.sizes().set_walker_size(w, 1024 * 1024);      // 1MB walker
    CHECK(sim.choose_strategy(w, target) == Strategy::MoveData);

    sim.sizes().set_node_size(target, 1024 * 1024);   // 1MB node
    sim.sizes().set_walker_size(w, 1024);             // 1KB walker
    CHECK(sim.choose_strategy(w, target) == Strategy::MoveComp);

    sim.sizes().set_node_size(target, 4096);          // equal sizes: tie
    sim.sizes().set_walker_size(w, 4096);
    CHECK(sim.choose_strategy(w, target) == Strategy::MoveComp);
}

TEST_CASE("scenario config files parse the documented schema") {
    Value doc{{"machines", 4},
              {"capacity_bytes", 65536},
              {"mode", "hybrid"},
              {"consistency_strength", 2},
              {"base_latency", 7},
              {"seed", 99},
              {"hybrid", Value{{"ratio_R", 8}, {"locality_pct", 0.9}, {"path_run_len", 5}}}};
    ClusterConfig cfg = ClusterConfig::from_json(doc);
    CHECK(cfg.machines == 4);
    CHECK(cfg.capacity_bytes == 65536);
    CHECK(cfg.mode == DistributionMode::Hybrid);
    CHECK(cfg.consistency_strength == 2);
    CHECK(cfg.base_latency == 7);
    CHECK(cfg.seed == 99);
    CHECK(cfg.hybrid.ratio_r == 8);
    CHECK(cfg.hybrid.locality_pct == doctest::Approx(0.9));
    CHECK(cfg.hybrid.path_run_len == 5);

    // round-trip through the file form
    ClusterConfig back = ClusterConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());

    CHECK_THROWS_AS(ClusterConfig::from_json(Value{{"machines", 0}}), Error);
    CHECK_THROWS_AS(ClusterConfig::from_json(Value{{"mode", "psychic"}}), Error);
}

TEST_CASE("sizes never drop below the serialized form") {
    Runtime rt = make_runtime();
    ClusterConfig cfg;
    ClusterSim sim(rt, cfg);
    NodeId n = rt.create_node("blob", ValueMap{{"payload", std::string(256, 'z')}});
    std::uint64_t serialized = sim.sizes().node_size(n);
    CHECK(serialized > 256);
    sim.sizes().set_node_size(n, 1);  // clamped up
    CHECK(sim.sizes().node_size(n) == serialized);
    sim.sizes().set_node_size(n, serialized * 10);
    CHECK(sim.sizes().node_size(n) == serialized * 10);
}

TEST_CASE("migration latency is proportional to the walker's serialized size") {
    Runtime rt = make_runtime();
    rt.archetypes().register_walker_archetype("heavy");
    rt.archetypes().add_walker_ability(
        "heavy", Ability{"loop_once", Trigger::Entry, kAnyArchetype, [](AbilityContext& ctx) {
                             if (ctx.path_length() == 1) ctx.visit(ctx.here());
                         }});
    ClusterConfig cfg;
    cfg.machines = 2;
    cfg.base_latency = 10;
    ClusterSim sim(rt, cfg);
    NodeId a = rt.create_node("blob", empty_map());
    rt.connect(a, a);
    sim.place_node(a, MachineId{0});
    WalkerId w = rt.spawn("heavy", ValueMap{{"ballast", std::string(500, 'b')}}, a);
    REQUIRE(rt.walker(w).status == WalkerStatus::Active);  // self-visit pending

    std::uint64_t size = sim.sizes().walker_size(w);
    sim.migrate(w, MachineId{1});
    CHECK(sim.totals().migration_latency == cfg.base_latency * size);
    CHECK(sim.totals().messages == 1);
}

TEST_CASE("metrics report carries the documented fields") {
    RunOptions opt;
    opt.scale = ScaleSpec{1, 2, false};
    opt.mode = DistributionMode::DataCentric;
    opt.seed = 2;
    RunReport r = run_scenario(find_scenario("chain_pipeline"), opt);
    CHECK(r.metrics.contains("per_machine_counters"));
    CHECK(r.metrics.contains("totals"));
    CHECK(r.metrics.contains("placement"));
    CHECK(r.metrics.contains("cut_edges"));
    CHECK(r.metrics.at("per_machine_counters").size() == 2);
}

TEST_CASE("distribution transparency sample: any machine count, same outcome") {
    for (const char* name : {"counter", "chain_pipeline"}) {
        RunOptions base;
        base.scale = ScaleSpec{2, 1, false};
        base.seed = 77;
        RunReport k1 = run_scenario(find_scenario(name), base);
        for (int k : {2, 4}) {
            RunOptions opt = base;
            opt.scale.machines = k;
            opt.mode = DistributionMode::ComputationCentric;
            RunReport kN = run_scenario(find_scenario(name), opt);
            CompareOutcome cmp = compare_reports(k1, kN);
            CHECK(cmp.equivalent);
            if (!cmp.equivalent) MESSAGE(cmp.diff);
        }
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "trellis/gateway.hpp"
#include "trellis/scenarios.hpp"
#include "trellis/user_context.hpp"

#include <httplib.h>

#include <algorithm>

using namespace trellis;

namespace {

struct CounterApp {
    Runtime rt;
    Gateway gw{rt};
    CounterApp() { find_scenario("counter").program(rt, gw); }
};

}  // namespace

TEST_CASE("register_entrypoint validates names, archetypes and mappings") {
    Runtime rt;
    Gateway gw(rt);
    rt.archetypes().register_walker_archetype("w", ValueMap{{"x", 0}});

    gw.register_entrypoint(EntryPointSpec{"go", "w", {}, {}});
    CHECK(gw.list_entrypoints() == std::vector<std::string>{"go"});

    CHECK_THROWS_AS(gw.register_entrypoint(EntryPointSpec{"go", "w", {}, {}}), Error);
    CHECK_THROWS_AS(gw.register_entrypoint(EntryPointSpec{"bad", "nope", {}, {}}), Error);
    CHECK_THROWS_AS(gw.register_entrypoint(EntryPointSpec{
                        "bad2", "w",
                        {ParamSpec{"p", "missing_prop", ValueType::Integer, false, nullptr}},
                        {}}),
                    Error);
}

TEST_CASE("invoke runs the counter walker and keeps per-user state") {
    CounterApp app;
    CHECK(app.gw.invoke("alice", "incr", empty_map()) == ValueMap{{"count", 1}});
    CHECK(app.gw.invoke("alice", "incr", empty_map()) == ValueMap{{"count", 2}});
    // a different user starts from an isolated root
    CHECK(app.gw.invoke("bob", "incr", empty_map()) == ValueMap{{"count", 1}});
    CHECK(user_context::audit_disjointness(app.rt).empty());
}

TEST_CASE("parameter validation is structural and reported per parameter") {
    Runtime rt;
    Gateway gw(rt);
    rt.archetypes().register_walker_archetype("greeter", ValueMap{{"who", ""}, {"times", 1}});
    gw.register_entrypoint(EntryPointSpec{
        "greet",
        "greeter",
        {ParamSpec{"who", "who", ValueType::Text, true, nullptr},
         ParamSpec{"times", "times", ValueType::Integer, false,
                   [](const Value& v) { return v.get<int>() > 0; }}},
        {}});

    try {
        gw.invoke("alice", "greet", empty_map());
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ValidationFailure);
        CHECK(e.detail().contains("who"));  // failure names the parameter
    }
    try {
        gw.invoke("alice", "greet", ValueMap{{"who", 7}});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.detail().contains("who"));
    }
    try {
        gw.invoke("alice", "greet", ValueMap{{"who", "x"}, {"times", 0}});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.detail().contains("times"));
    }
    try {
        gw.invoke("alice", "greet", ValueMap{{"who", "x"}, {"bogus", 1}});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.detail().contains("bogus"));
    }
    CHECK_THROWS_AS(gw.invoke("alice", "nonexistent", empty_map()), Error);
}

TEST_CASE("invocation trace shows the four protocol steps in order") {
    CounterApp app;
    Invocation inv = app.gw.invoke_traced("alice", "incr", empty_map());
    REQUIRE(inv.ok);
    std::vector<std::string> protocol;
    for (const auto& kind : inv.trace.kinds())
        if (kind == "instantiate" || kind == "map-params" || kind == "spawn-at-root" ||
            kind == "collect-result")
            protocol.push_back(kind);
    CHECK(protocol == std::vector<std::string>{"instantiate", "map-params", "spawn-at-root",
                                               "collect-result"});
}

TEST_CASE("explicit result mapping overrides the default identity mapping") {
    Runtime rt;
    Gateway gw(rt);
    rt.archetypes().register_walker_archetype("emitter");
    rt.archetypes().add_walker_ability(
        "emitter", Ability{"emit", Trigger::Entry, kAnyArchetype, [](AbilityContext& ctx) {
                               ctx.result_set("inner", 41);
                               ctx.result_set("noise", "hidden");
                           }});
    gw.register_entrypoint(EntryPointSpec{"emit_all", "emitter", {}, {}});
    gw.register_entrypoint(EntryPointSpec{"emit_mapped", "emitter", {},
                                          {ResultSpec{"inner", "outer"},
                                           ResultSpec{"absent_key", "never"}}});

    ValueMap all = gw.invoke("alice", "emit_all", empty_map());
    CHECK(all == ValueMap{{"inner", 41}, {"noise", "hidden"}});

    ValueMap mapped = gw.invoke("alice", "emit_mapped", empty_map());
    CHECK(mapped == ValueMap{{"outer", 41}});  // renamed; absent key omitted
}

TEST_CASE("same-user invocations serialize; distinct users interleave safely") {
    CounterApp app;
    std::vector<InvocationRequest> batch;
    for (int i = 0; i < 4; ++i) batch.push_back({"alice", "incr", empty_map()});
    for (int i = 0; i < 3; ++i) batch.push_back({"bob", "incr", empty_map()});
    for (int i = 0; i < 2; ++i) batch.push_back({"carol", "incr", empty_map()});

    std::vector<Invocation> got = app.gw.run_batch(batch, /*seed=*/7);
    std::map<UserId, std::vector<int>> counts;
    const std::vector<std::string> protocol{"instantiate", "map-params", "spawn-at-root",
                                            "collect-result"};
    for (const Invocation& inv : got) {
        REQUIRE(inv.ok);
        counts[inv.user].push_back(inv.result.at("count").get<int>());
        std::vector<std::string> steps;
        for (const auto& kind : inv.trace.kinds())
            if (std::find(protocol.begin(), protocol.end(), kind) != protocol.end())
                steps.push_back(kind);
        CHECK(steps == protocol);  // every invocation follows the protocol
    }
    CHECK(counts["alice"] == std::vector<int>{1, 2, 3, 4});  // FIFO per user
    CHECK(counts["bob"] == std::vector<int>{1, 2, 3});
    CHECK(counts["carol"] == std::vector<int>{1, 2});
    CHECK(user_context::audit_disjointness(app.rt).empty());
}

TEST_CASE("interleaving is deterministic given the seed") {
    auto run = [](std::uint64_t seed) {
        CounterApp app;
        std::vector<InvocationRequest> batch;
        for (int i = 0; i < 3; ++i) {
            batch.push_back({"alice", "incr", empty_map()});
            batch.push_back({"bob", "incr", empty_map()});
        }
        app.gw.run_batch(batch, seed);
        return app.rt.trace().to_json();
    };
    CHECK(run(5) == run(5));
}

TEST_CASE("walker faults surface with code and trace id preserved") {
    Runtime rt;
    Gateway gw(rt);
    rt.archetypes().register_walker_archetype("brittle");
    rt.archetypes().add_walker_ability(
        "brittle", Ability{"boom", Trigger::Entry, kAnyArchetype,
                           [](AbilityContext&) { raise(Errc::UnavailableNode, "synthetic"); }});
    gw.register_entrypoint(EntryPointSpec{"explode", "brittle", {}, {}});

    Invocation inv = gw.invoke_traced("alice", "explode", empty_map());
    CHECK_FALSE(inv.ok);
    CHECK(inv.error_code == Errc::UnavailableNode);
    CHECK_FALSE(inv.trace_id.empty());
    // the faulted walker is terminal, so the gateway stays quiescent
    CHECK_FALSE(rt.any_walker_active());
}

TEST_CASE("gateway-level quiescent ops collect garbage between invocations") {
    CounterApp app;
    app.gw.invoke("alice", "incr", empty_map());
    NodeId stray = app.rt.create_node("counter_cell", empty_map());
    (void)stray;
    CollectStats stats = app.gw.collect_transient();
    CHECK(stats.nodes_reclaimed == 1);
    CHECK(app.gw.invoke("alice", "incr", empty_map()) == ValueMap{{"count", 2}});
}

TEST_CASE("http wire layer mirrors invoke exactly") {
    CounterApp app;
    HttpServer server(app.gw);
    int port = server.start("127.0.0.1");
    httplib::Client client("127.0.0.1", port);

    auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);

    auto list = client.Get("/walkers");
    REQUIRE(list);
    CHECK(Value::parse(list->body).at("walkers")[0].at("name") == Value("incr"));

    // oracle: the direct invoke path on an identical fresh application
    CounterApp oracle;
    for (int i = 1; i <= 3; ++i) {
        httplib::Headers headers{{"X-User", "alice"}};
        auto res = client.Post("/walker/incr", headers, "{}", "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        ValueMap direct = oracle.gw.invoke("alice", "incr", empty_map());
        CHECK(Value::parse(res->body) == direct);
    }

    httplib::Headers bob{{"X-User", "bob"}};
    auto fresh = client.Post("/walker/incr", bob, "", "application/json");
    REQUIRE(fresh);
    CHECK(Value::parse(fresh->body) == ValueMap{{"count", 1}});

    auto unknown = client.Post("/walker/nothing", bob, "{}", "application/json");
    REQUIRE(unknown);
    CHECK(unknown->status == 404);

    auto malformed = client.Post("/walker/incr", bob, "{not json", "application/json");
    REQUIRE(malformed);
    CHECK(malformed->status == 400);

    auto anonymous = client.Post("/walker/incr", "{}", "application/json");
    REQUIRE(anonymous);
    CHECK(anonymous->status == 400);

    server.stop();
}

TEST_CASE("http maps isolation violations to 409 and walker faults to 500") {
    Runtime rt;
    Gateway gw(rt);
    rt.archetypes().register_node_archetype("blob");
    rt.archetypes().register_walker_archetype("intruder", ValueMap{{"target", 0}});
    rt.archetypes().add_walker_ability(
        "intruder", Ability{"reach_over", Trigger::Entry, kAnyArchetype, [](AbilityContext& ctx) {
                                NodeId target{ctx.walker_get("target", 0).get<std::uint64_t>()};
                                ctx.connect(ctx.here(), target);
                            }});
    gw.register_entrypoint(EntryPointSpec{
        "intrude", "intruder",
        {ParamSpec{"target", "target", ValueType::Integer, true, nullptr}}, {}});

    // bob owns a node; alice's walker tries to connect her root to it
    NodeId bob_root = user_context::resolve_root(rt, "bob");
    NodeId bob_node = rt.create_node("blob", empty_map());
    rt.connect(bob_root, bob_node);

    HttpServer server(gw);
    int port = server.start("127.0.0.1");
    httplib::Client client("127.0.0.1", port);
    httplib::Headers alice{{"X-User", "alice"}};

    auto res = client.Post("/walker/intrude", alice,
                           ValueMap{{"target", bob_node.value}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 409);
    CHECK(Value::parse(res->body).at("code") == Value("IsolationViolation"));
    CHECK(Value::parse(res->body).contains("trace_id"));

    auto crash = client.Post("/walker/intrude", alice, ValueMap{{"target", 999999}}.dump(),
                             "application/json");
    REQUIRE(crash);
    CHECK(crash->status == 500);

    server.stop();
}

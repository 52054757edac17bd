#include "trellis/harness.hpp"

#include "trellis/snapshot.hpp"
#include "trellis/user_context.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <set>

namespace trellis {

std::string temp_path(const std::string& tag) {
    static std::atomic<std::uint64_t> counter{0};
    auto dir = std::filesystem::temp_directory_path();
    std::string name = "trellis-" + tag + "-" + std::to_string(::getpid()) + "-" +
                       std::to_string(counter.fetch_add(1)) + ".json";
    return (dir / name).string();
}

std::string json_diff(const Value& a, const Value& b, const std::string& prefix) {
    if (a == b) return "";
    if (a.type() != b.type())
        return prefix + ": type " + a.type_name() + " vs " + std::string(b.type_name());
    if (a.is_object()) {
        std::set<std::string> keys;
        for (auto it = a.begin(); it != a.end(); ++it) keys.insert(it.key());
        for (auto it = b.begin(); it != b.end(); ++it) keys.insert(it.key());
        for (const auto& k : keys) {
            if (!a.contains(k)) return prefix + "." + k + ": missing on left";
            if (!b.contains(k)) return prefix + "." + k + ": missing on right";
            std::string d = json_diff(a.at(k), b.at(k), prefix + "." + k);
            if (!d.empty()) return d;
        }
        return prefix + ": objects differ";
    }
    if (a.is_array()) {
        if (a.size() != b.size())
            return prefix + ": length " + std::to_string(a.size()) + " vs " +
                   std::to_string(b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            std::string d = json_diff(a[i], b[i], prefix + "[" + std::to_string(i) + "]");
            if (!d.empty()) return d;
        }
        return prefix + ": arrays differ";
    }
    return prefix + ": " + a.dump() + " vs " + b.dump();
}

namespace {

struct EpochResult {
    std::vector<Invocation> outcomes;
    PersistentImage image;
    MachineCounters totals;
    bool conserved = true;
};

/// Canonical path labels: reachable nodes map to their image id, transient
/// nodes to "t<n>" in first-appearance order.
Value canonical_paths(const std::vector<Invocation>& outcomes, const PersistentImage& image,
                      std::map<std::uint64_t, std::string>& transient_labels) {
    Value arr = Value::array();
    for (const Invocation& inv : outcomes) {
        Value rec{{"user", inv.user}, {"entry", inv.entry_point}, {"ok", inv.ok}};
        if (inv.ok) {
            rec["result"] = inv.result;
        } else {
            rec["error"] = errc_name(inv.error_code);
        }
        Value path = Value::array();
        for (NodeId n : inv.path) {
            auto it = image.node_remap.find(n);
            if (it != image.node_remap.end()) {
                path.push_back(it->second);
            } else {
                auto [jt, fresh] = transient_labels.emplace(
                    n.value, "t" + std::to_string(transient_labels.size()));
                path.push_back(jt->second);
            }
        }
        rec["path"] = path;
        arr.push_back(rec);
    }
    return arr;
}

ClusterConfig effective_config(const Scenario& sc, const RunOptions& opt) {
    ClusterConfig cfg;
    cfg.machines = opt.scale.machines;
    cfg.mode = opt.mode;
    cfg.seed = opt.seed;
    cfg.consistency_strength = opt.consistency_strength;
    cfg.base_latency = opt.base_latency;
    int rep = opt.rep_factor.value_or(sc.rep_factor);
    cfg.rep_factor = std::min(rep, opt.scale.machines);  // clamp at cluster size
    cfg.cadence = opt.cadence.value_or(sc.cadence);
    cfg.cadence_k = opt.cadence_k.value_or(cfg.cadence_k);
    return cfg;
}

void prepare_user(Runtime& rt, Gateway& gw, const Scenario& sc, const UserId& user,
                  ClusterSim* sim) {
    bool fresh = rt.roots().count(user) == 0;
    user_context::resolve_root(rt, user);
    if (fresh && sc.fixture) sc.fixture(rt, gw, user, sim);
}

}  // namespace

Value RunReport::to_json() const {
    return Value{{"scenario", scenario},
                 {"scale", Value{{"users", scale.users},
                                 {"machines", scale.machines},
                                 {"persistent", scale.persistent}}},
                 {"mode", mode},
                 {"seed", seed},
                 {"invocations", invocations},
                 {"graph", graph},
                 {"metrics", metrics},
                 {"counters_conserved", counters_conserved}};
}

RunReport run_scenario(const Scenario& sc, const RunOptions& opt) {
    const std::vector<InvocationRequest> script = sc.script(opt.scale.users);
    const ClusterConfig cfg = effective_config(sc, opt);

    RunReport report;
    report.scenario = sc.name;
    report.scale = opt.scale;
    report.mode = mode_name(opt.mode);
    report.seed = opt.seed;

    std::map<std::uint64_t, std::string> transient_labels;

    if (!opt.scale.persistent) {
        Runtime rt;
        Gateway gw(rt);
        sc.program(rt, gw);
        ClusterSim sim(rt, cfg);
        gw.attach_cluster(&sim);
        std::set<UserId> users;
        for (const auto& req : script) users.insert(req.user);
        for (const UserId& user : users) prepare_user(rt, gw, sc, user, &sim);
        sim.place_all();
        sim.set_fault_plan(opt.faults);

        std::vector<Invocation> outcomes = gw.run_batch(script, opt.seed);

        PersistentImage image = snapshot_document(rt);
        report.invocations = canonical_paths(outcomes, image, transient_labels);
        report.graph = image.document;
        report.metrics = sim.metrics_json();
        report.counters_conserved = sim.counters_conserved();
        return report;
    }

    // persistent: one execution epoch per invocation, state carried through
    // the snapshot file, program re-registered each epoch
    if (!opt.faults.empty())
        raise(Errc::BadConfig, "fault plans pair with non-persistent runs");
    const std::string path = opt.persist_path.empty() ? temp_path(sc.name) : opt.persist_path;
    bool have_image = false;
    report.invocations = Value::array();
    MachineCounters cumulative;
    bool conserved = true;
    Value final_graph;

    for (std::size_t i = 0; i < script.size(); ++i) {
        Runtime rt;
        Gateway gw(rt);
        sc.program(rt, gw);
        if (have_image) restore(rt, path);
        ClusterSim sim(rt, cfg);
        gw.attach_cluster(&sim);
        prepare_user(rt, gw, sc, script[i].user, &sim);
        sim.place_all();

        std::vector<Invocation> outcomes = gw.run_batch({script[i]}, opt.seed);

        PersistentImage image = snapshot(rt, path);
        have_image = true;
        Value rec = canonical_paths(outcomes, image, transient_labels);
        report.invocations.push_back(rec[0]);
        cumulative += sim.totals();
        conserved = conserved && sim.counters_conserved();
        if (i + 1 == script.size()) final_graph = image.document;
    }

    report.graph = final_graph;
    report.metrics = Value{{"totals", Value{{"remote_accesses", cumulative.remote_accesses},
                                            {"migrations", cumulative.migrations},
                                            {"messages", cumulative.messages},
                                            {"replication_messages", cumulative.replication_messages},
                                            {"modeled_latency", cumulative.modeled_latency()}}},
                           {"epochs", script.size()}};
    report.counters_conserved = conserved;
    std::error_code ec;
    if (opt.persist_path.empty()) std::filesystem::remove(path, ec);
    return report;
}

CompareOutcome compare_reports(const RunReport& a, const RunReport& b) {
    CompareOutcome out;
    std::string d = json_diff(a.invocations, b.invocations, "$.invocations");
    if (d.empty()) d = json_diff(a.graph, b.graph, "$.graph");
    out.equivalent = d.empty();
    out.diff = d;
    return out;
}

std::vector<BenchRow> bench_scenario(const Scenario& sc, const std::vector<DistributionMode>& modes,
                                     ScaleSpec scale, std::uint64_t seed) {
    std::vector<BenchRow> rows;
    for (DistributionMode mode : modes) {
        RunOptions opt;
        opt.scale = scale;
        opt.mode = mode;
        opt.seed = seed;
        RunReport report = run_scenario(sc, opt);
        const Value& totals = report.metrics.at("totals");
        BenchRow row;
        row.mode = mode_name(mode);
        row.remote_accesses = totals.at("remote_accesses").get<std::uint64_t>();
        row.migrations = totals.at("migrations").get<std::uint64_t>();
        row.messages = totals.at("messages").get<std::uint64_t>();
        row.replication_messages = totals.at("replication_messages").get<std::uint64_t>();
        row.modeled_latency = totals.at("modeled_latency").get<std::uint64_t>();
        rows.push_back(row);
    }
    return rows;
}

Value bench_table_json(const std::vector<BenchRow>& rows) {
    Value table = Value::array();
    for (const BenchRow& r : rows)
        table.push_back(Value{{"mode", r.mode},
                              {"remote_accesses", r.remote_accesses},
                              {"migrations", r.migrations},
                              {"messages", r.messages},
                              {"replication_messages", r.replication_messages},
                              {"modeled_latency", r.modeled_latency}});
    return table;
}

}  // namespace trellis

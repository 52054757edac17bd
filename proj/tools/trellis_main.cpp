#include "trellis/acceptance.hpp"
#include "trellis/harness.hpp"
#include "trellis/snapshot.hpp"
#include "trellis/user_context.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace trellis;

std::vector<DistributionMode> parse_modes(const std::string& csv) {
    std::vector<DistributionMode> modes;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        std::size_t comma = csv.find(',', pos);
        std::string token = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!token.empty()) modes.push_back(parse_mode(token));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (modes.empty()) raise(Errc::BadConfig, "no modes given");
    return modes;
}

ClusterConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::IoFailure, "cannot open config " + path);
    Value doc = Value::parse(in, nullptr, false);
    if (doc.is_discarded()) raise(Errc::BadConfig, "unparseable config " + path);
    return ClusterConfig::from_json(doc);
}

int cmd_run(const std::string& scenario_name, int users, int machines, const std::string& mode,
            std::uint64_t seed, const std::string& persist, const std::string& faults_path,
            const std::string& config_path, const std::string& out_path) {
    const Scenario& sc = find_scenario(scenario_name);
    RunOptions opt;
    opt.scale.users = users;
    opt.scale.machines = machines;
    opt.mode = parse_mode(mode);
    opt.seed = seed;
    if (!config_path.empty()) {
        ClusterConfig cfg = load_config(config_path);
        opt.scale.machines = cfg.machines;
        opt.mode = cfg.mode;
        opt.seed = cfg.seed;
        opt.consistency_strength = cfg.consistency_strength;
        opt.base_latency = cfg.base_latency;
        if (cfg.rep_factor > 0) opt.rep_factor = cfg.rep_factor;
        if (cfg.cadence != CheckpointCadence::None) opt.cadence = cfg.cadence;
    }
    if (!persist.empty()) {
        opt.scale.persistent = true;
        opt.persist_path = persist;
    }
    if (!faults_path.empty()) opt.faults = load_fault_plan(faults_path);

    RunReport report = run_scenario(sc, opt);
    std::string body = report.to_json().dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << body;
    } else {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        out << body;
        std::cout << "report written to " << out_path << "\n";
    }
    for (const auto& inv : report.invocations)
        if (!inv.at("ok").get<bool>()) return 1;
    return report.counters_conserved ? 0 : 1;
}

int cmd_serve(const std::string& listen, const std::string& scenario_name,
              const std::string& persist) {
    std::string host = listen;
    int port = 8080;
    if (auto colon = listen.rfind(':'); colon != std::string::npos) {
        host = listen.substr(0, colon);
        port = std::stoi(listen.substr(colon + 1));
    }

    Runtime rt;
    Gateway gw(rt);
    const Scenario& sc = find_scenario(scenario_name);
    sc.program(rt, gw);
    if (!persist.empty() && std::ifstream(persist).good()) {
        restore(rt, persist);
        std::cout << "restored persistent image from " << persist << "\n";
    }

    HttpServer server(gw);
    int bound = server.start(host, port);
    std::cout << "serving scenario '" << sc.name << "' on " << host << ":" << bound << "\n";
    std::cout << "POST /walker/{name} with X-User header; GET /walkers; GET /health\n";
    std::cout << "press enter to stop\n";
    std::cin.get();
    server.stop();
    if (!persist.empty()) {
        snapshot(rt, persist);
        std::cout << "persistent image written to " << persist << "\n";
    }
    return 0;
}

int cmd_bench(const std::string& scenario_name, const std::string& modes_csv, int users,
              int machines, std::uint64_t seed) {
    const Scenario& sc = find_scenario(scenario_name);
    ScaleSpec scale{users, machines, false};
    auto rows = bench_scenario(sc, parse_modes(modes_csv), scale, seed);
    std::cout << bench_table_json(rows).dump(2) << "\n";
    return 0;
}

int cmd_verify(std::uint64_t seed, const std::string& out_path) {
    std::vector<CheckResult> results = run_acceptance(seed, &std::cout);
    Value report = acceptance_report(results, seed);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        out << report.dump(2) << "\n";
    }
    return all_passed(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trellis — a data-spatial walker runtime with a simulated cluster"};
    app.require_subcommand(1);

    std::string scenario = "counter", mode = "data_centric", persist, faults, config, out;
    std::string listen = "127.0.0.1:8080", modes = "data_centric,computation_centric,hybrid";
    int users = 1, machines = 1;
    std::uint64_t seed = 1;

    auto* run = app.add_subcommand("run", "run a bundled scenario at a given scale");
    run->add_option("scenario", scenario, "scenario name")->required();
    run->add_option("--users", users, "number of users");
    run->add_option("--machines", machines, "simulated machine count");
    run->add_option("--mode", mode, "data_centric | computation_centric | hybrid");
    run->add_option("--seed", seed, "deterministic seed");
    run->add_option("--persist", persist, "snapshot path; enables snapshot/restore between invocations");
    run->add_option("--faults", faults, "fault plan file");
    run->add_option("--config", config, "scenario cluster config file");
    run->add_option("--out", out, "write the run report here instead of stdout");

    auto* serve = app.add_subcommand("serve", "expose entry points over HTTP");
    serve->add_option("--listen", listen, "host:port");
    serve->add_option("--scenario", scenario, "scenario whose entry points to expose");
    serve->add_option("--persist", persist, "snapshot file loaded at start, written at stop");

    auto* bench = app.add_subcommand("bench", "per-mode cost table for a scenario");
    bench->add_option("scenario", scenario, "scenario name")->required();
    bench->add_option("--modes", modes, "comma-separated mode list");
    bench->add_option("--users", users, "number of users");
    bench->add_option("--machines", machines, "simulated machine count");
    bench->add_option("--seed", seed, "deterministic seed");

    auto* verify = app.add_subcommand("verify", "run the full verification matrix");
    verify->add_option("--seed", seed, "deterministic seed");
    verify->add_option("--out", out, "write the machine-readable report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(scenario, users, machines, mode, seed, persist, faults, config, out);
        if (serve->parsed()) return cmd_serve(listen, scenario, persist);
        if (bench->parsed()) return cmd_bench(scenario, modes, users, machines, seed);
        if (verify->parsed()) return cmd_verify(seed, out);
    } catch (const trellis::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

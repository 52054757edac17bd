#pragma once

#include "trellis/cluster.hpp"
#include "trellis/runtime.hpp"
#include "trellis/snapshot.hpp"
#include "trellis/trace.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace trellis {

/// How one external parameter maps onto a declared walker property.
struct ParamSpec {
    std::string external_name;
    std::string walker_property;
    ValueType type = ValueType::Any;
    bool required = false;
    std::function<bool(const Value&)> validator;  // optional extra check
};

/// Which walker result keys are returned, and under what external names.
struct ResultSpec {
    std::string result_key;
    std::string external_name;
};

struct EntryPointSpec {
    std::string name;
    std::string walker_archetype;
    std::vector<ParamSpec> params;
    /// Empty list = identity mapping on the walker's result map; explicit
    /// mappings override it.  Keys absent from the result map are omitted.
    std::vector<ResultSpec> results;
};

struct InvocationRequest {
    UserId user;
    std::string entry_point;
    ValueMap params = empty_map();
};

/// One external invocation, outcome set exactly once.
struct Invocation {
    UserId user;
    std::string entry_point;
    ValueMap params = empty_map();
    bool ok = false;
    ValueMap result = empty_map();
    Errc error_code = Errc::WalkerFault;
    std::string error;
    Value error_detail;
    std::string trace_id;
    TraceLog trace;  // instantiate -> map-params -> spawn-at-root -> collect-result
    WalkerId walker;
    std::vector<NodeId> path;
};

/// Registers walker archetypes as externally invokable entry points and runs
/// the invocation protocol: instantiate, map parameters, spawn at the
/// caller's root, return the mapped result after the traversal finishes.
/// Within-user invocations are fully serialized; distinct users interleave
/// deterministically (seed-chosen) at step granularity.
class Gateway {
public:
    explicit Gateway(Runtime& rt) : rt_(rt) {}

    void attach_cluster(ClusterSim* sim) { sim_ = sim; }
    ClusterSim* cluster() const { return sim_; }

    void register_entrypoint(EntryPointSpec spec);
    std::vector<std::string> list_entrypoints() const;
    bool has_entrypoint(const std::string& name) const { return specs_.count(name) != 0; }
    const EntryPointSpec& spec(const std::string& name) const;

    /// Execute one invocation to completion; throws on failure.
    ValueMap invoke(const UserId& user, const std::string& name, ValueMap params);
    /// As invoke, but returns the full record instead of throwing.
    Invocation invoke_traced(const UserId& user, const std::string& name, ValueMap params);
    /// Per-user FIFO, cross-user seeded interleaving, lost walkers
    /// auto-recovered.  Returns one record per request, in request order.
    std::vector<Invocation> run_batch(const std::vector<InvocationRequest>& requests,
                                      std::uint64_t seed);

    /// Quiescent operations through the gateway (refused while any walker
    /// is active).
    PersistentImage snapshot(const std::string& path);
    CollectStats collect_transient();

    Runtime& runtime() { return rt_; }

private:
    struct UserTask;
    void start_invocation(UserTask& task, Invocation& inv);
    bool advance(UserTask& task, Invocation& inv);  // true when finished
    void finish(Invocation& inv);
    void fail(Invocation& inv, const Error& e);
    ValueMap validate_and_bind(const EntryPointSpec& spec, const ValueMap& params) const;

    Runtime& rt_;
    ClusterSim* sim_ = nullptr;
    std::map<std::string, EntryPointSpec> specs_;
    std::uint64_t invocation_seq_ = 0;
};

/// Minimal HTTP exposure over one Gateway: POST /walker/{name} with the
/// declared identity in the X-User header; GET /walkers; GET /health.
/// Responses mirror invoke exactly; the wire layer adds nothing.
class HttpServer {
public:
    explicit HttpServer(Gateway& gw);
    ~HttpServer();

    /// Bind and serve on a background thread; returns the bound port.
    int start(const std::string& host, int port = 0);
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace trellis

#include "trellis/gateway.hpp"

#include "trellis/user_context.hpp"

#include <deque>
#include <random>
#include <set>

namespace trellis {

void Gateway::register_entrypoint(EntryPointSpec spec) {
    if (specs_.count(spec.name) != 0) raise(Errc::DuplicateEntryPoint, spec.name);
    const WalkerArchetype& type = rt_.archetypes().walker_type(spec.walker_archetype);
    std::set<std::string> seen;
    for (const auto& p : spec.params) {
        if (!seen.insert(p.external_name).second)
            raise(Errc::BadConfig, "duplicate external parameter " + p.external_name);
        if (!type.defaults.contains(p.walker_property))
            raise(Errc::BadConfig, "walker archetype " + spec.walker_archetype +
                                       " has no property " + p.walker_property);
    }
    std::set<std::string> out_seen;
    for (const auto& r : spec.results)
        if (!out_seen.insert(r.external_name).second)
            raise(Errc::BadConfig, "duplicate external result field " + r.external_name);
    specs_.emplace(spec.name, std::move(spec));
}

std::vector<std::string> Gateway::list_entrypoints() const {
    std::vector<std::string> names;
    for (const auto& [name, s] : specs_) names.push_back(name);
    return names;
}

const EntryPointSpec& Gateway::spec(const std::string& name) const {
    auto it = specs_.find(name);
    if (it == specs_.end()) raise(Errc::UnknownEntryPoint, name);
    return it->second;
}

ValueMap Gateway::validate_and_bind(const EntryPointSpec& spec, const ValueMap& params) const {
    if (!params.is_object()) raise(Errc::ValidationFailure, "params must be a map");
    Value problems = Value::object();
    for (const auto& p : spec.params) {
        if (!params.contains(p.external_name)) {
            if (p.required) problems[p.external_name] = "required parameter missing";
            continue;
        }
        const Value& v = params.at(p.external_name);
        if (!value_matches(p.type, v)) {
            problems[p.external_name] =
                std::string("expected ") + value_type_name(p.type) + ", got " + v.type_name();
            continue;
        }
        if (p.validator && !p.validator(v)) problems[p.external_name] = "validator rejected value";
    }
    for (auto it = params.begin(); it != params.end(); ++it) {
        bool known = false;
        for (const auto& p : spec.params)
            if (p.external_name == it.key()) known = true;
        if (!known) problems[it.key()] = "unknown parameter";
    }
    if (!problems.empty()) raise(Errc::ValidationFailure, "invalid parameters", problems);

    ValueMap bound = empty_map();
    for (const auto& p : spec.params)
        if (params.contains(p.external_name)) bound[p.walker_property] = params.at(p.external_name);
    return bound;
}

// ---------------------------------------------------------------------------
// batch scheduler
// ---------------------------------------------------------------------------

struct Gateway::UserTask {
    UserId user;
    std::deque<std::size_t> pending;  // request indexes, FIFO
    std::optional<std::size_t> running;
    NodeId root;
    bool root_resolved = false;
};

void Gateway::start_invocation(UserTask& task, Invocation& inv) {
    const EntryPointSpec& sp = spec(inv.entry_point);
    ValueMap bound = validate_and_bind(sp, inv.params);

    inv.trace.record("instantiate", Value{{"archetype", sp.walker_archetype}});
    WalkerId w = rt_.instantiate_walker(sp.walker_archetype, inv.user);
    inv.walker = w;

    inv.trace.record("map-params", bound);
    Walker& walker = rt_.walker(w);
    for (auto it = bound.begin(); it != bound.end(); ++it) walker.properties[it.key()] = it.value();

    if (!task.root_resolved) {
        task.root = user_context::resolve_root(rt_, task.user);
        task.root_resolved = true;
    }
    if (sim_) sim_->begin_invocation(w);

    inv.trace.record("spawn-at-root", Value{{"root", task.root.value}});
    rt_.spawn_at(w, task.root);
}

void Gateway::finish(Invocation& inv) {
    const Walker& w = rt_.walker(inv.walker);
    const EntryPointSpec& sp = spec(inv.entry_point);
    ValueMap out;
    if (sp.results.empty()) {
        out = w.result;
    } else {
        out = empty_map();
        for (const auto& r : sp.results)
            if (w.result.contains(r.result_key)) out[r.external_name] = w.result.at(r.result_key);
    }
    inv.trace.record("collect-result", out);
    inv.result = std::move(out);
    inv.path = w.path;
    inv.ok = true;
}

void Gateway::fail(Invocation& inv, const Error& e) {
    inv.ok = false;
    inv.error_code = e.code();
    inv.error = e.what();
    inv.error_detail = e.detail();
    if (inv.walker.value != 0 && rt_.has_walker(inv.walker)) {
        inv.path = rt_.walker(inv.walker).path;
        if (rt_.walker(inv.walker).status == WalkerStatus::Active) {
            if (sim_) sim_->abandon_lost(inv.walker);
            rt_.disengage(inv.walker);
        }
    }
}

bool Gateway::advance(UserTask& task, Invocation& inv) {
    try {
        if (sim_ && sim_->is_lost(inv.walker)) {
            sim_->recover(inv.walker);
            const Walker& w = rt_.walker(inv.walker);
            if (w.status == WalkerStatus::Created) {
                // spawn never committed: run it again, live
                inv.trace.record("spawn-at-root", Value{{"root", task.root.value}, {"replay", true}});
                rt_.spawn_at(inv.walker, task.root);
            }
        } else {
            rt_.step(inv.walker);
        }
    } catch (const WalkerLostSignal&) {
        return false;  // recovered on the next turn
    } catch (const Error& e) {
        fail(inv, e);
        return true;
    }
    if (rt_.walker(inv.walker).status != WalkerStatus::Active) {
        finish(inv);
        return true;
    }
    return false;
}

std::vector<Invocation> Gateway::run_batch(const std::vector<InvocationRequest>& requests,
                                           std::uint64_t seed) {
    std::vector<Invocation> out(requests.size());
    std::map<UserId, UserTask> tasks;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        out[i].user = requests[i].user;
        out[i].entry_point = requests[i].entry_point;
        out[i].params = requests[i].params;
        out[i].trace_id = "inv-" + std::to_string(++invocation_seq_);
        auto& task = tasks[requests[i].user];
        task.user = requests[i].user;
        task.pending.push_back(i);
    }

    std::mt19937_64 rng(seed ^ 0x5bf03635d1a2bd93ULL);
    while (true) {
        std::vector<UserTask*> ready;
        for (auto& [user, task] : tasks)
            if (task.running || !task.pending.empty()) ready.push_back(&task);
        if (ready.empty()) break;
        UserTask& task = *ready[ready.size() == 1 ? 0 : rng() % ready.size()];

        if (!task.running) {
            std::size_t idx = task.pending.front();
            task.pending.pop_front();
            task.running = idx;
            Invocation& inv = out[idx];
            try {
                start_invocation(task, inv);
            } catch (const WalkerLostSignal&) {
                continue;  // lost during spawn; recovered on the next turn
            } catch (const Error& e) {
                fail(inv, e);
                task.running.reset();
                continue;
            }
            if (rt_.walker(inv.walker).status != WalkerStatus::Active) {
                finish(inv);
                task.running.reset();
            }
            continue;
        }

        if (advance(task, out[*task.running])) task.running.reset();
    }
    return out;
}

Invocation Gateway::invoke_traced(const UserId& user, const std::string& name, ValueMap params) {
    std::vector<Invocation> got = run_batch({InvocationRequest{user, name, std::move(params)}}, 0);
    return std::move(got.front());
}

ValueMap Gateway::invoke(const UserId& user, const std::string& name, ValueMap params) {
    Invocation inv = invoke_traced(user, name, std::move(params));
    if (!inv.ok)
        throw Error(inv.error_code, inv.error + " [" + inv.trace_id + "]", inv.error_detail);
    return inv.result;
}

PersistentImage Gateway::snapshot(const std::string& path) {
    if (rt_.any_walker_active()) raise(Errc::WalkersActive, "snapshot requires quiescence");
    return trellis::snapshot(rt_, path);
}

CollectStats Gateway::collect_transient() {
    if (rt_.any_walker_active()) raise(Errc::WalkersActive, "collect requires quiescence");
    return trellis::collect_transient(rt_);
}

}  // namespace trellis

#pragma once

#include "trellis/cluster.hpp"
#include "trellis/gateway.hpp"
#include "trellis/runtime.hpp"

#include <functional>
#include <string>
#include <vector>

namespace trellis {

/// A runnable program: archetypes, abilities and entry points registered
/// against the runtime API (there is no surface language), per-user graph
/// fixtures, and an invocation script.  Deterministic given seed.
struct Scenario {
    std::string name;
    std::string description;
    /// Register archetypes, abilities, entry points.  Runs once per
    /// execution (program code is never persisted).
    std::function<void(Runtime&, Gateway&)> program;
    /// Build the user's starting subgraph under a fresh root.  Only called
    /// the first time a user appears; restored users keep their graphs.
    /// May pin nodes via affinity hints when a cluster is attached.
    std::function<void(Runtime&, Gateway&, const UserId&, ClusterSim*)> fixture;
    /// The ordered invocation script for a given user count.
    std::function<std::vector<InvocationRequest>(int users)> script;
    /// Cluster knobs the scenario needs (replication, checkpoint cadence).
    int rep_factor = 0;
    CheckpointCadence cadence = CheckpointCadence::None;
};

const std::vector<Scenario>& bundled_scenarios();
const Scenario& find_scenario(const std::string& name);

/// Canonical per-index user name used by scripts ("user0", "user1", ...).
UserId scenario_user(int index);

inline constexpr int kChainLength = 10;
inline constexpr int kLongWalkLength = 30;
inline constexpr int kStarLeaves = 50;
inline constexpr std::size_t kStarLeafBlobBytes = 4096;

}  // namespace trellis

#pragma once

#include "trellis/cluster.hpp"
#include "trellis/gateway.hpp"
#include "trellis/scenarios.hpp"

#include <optional>
#include <string>
#include <vector>

namespace trellis {

struct ScaleSpec {
    int users = 1;
    int machines = 1;
    bool persistent = false;
};

struct RunOptions {
    ScaleSpec scale;
    DistributionMode mode = DistributionMode::DataCentric;
    std::uint64_t seed = 1;
    std::uint64_t consistency_strength = 1;
    std::uint64_t base_latency = 10;
    /// Snapshot file used between invocations in persistent mode; a fresh
    /// temp path is used when empty.
    std::string persist_path;
    std::vector<FaultAction> faults;
    /// Overrides of the scenario's own resilience knobs, when set.
    std::optional<int> rep_factor;
    std::optional<CheckpointCadence> cadence;
    std::optional<int> cadence_k;
};

/// Everything a scenario execution produced, in canonical (id-remap
/// tolerant) form.  to_json() is byte-stable given identical seeds.
struct RunReport {
    std::string scenario;
    ScaleSpec scale;
    std::string mode;
    std::uint64_t seed = 0;
    Value invocations;  // [{user, entry, ok, result | error, path}]
    Value graph;        // canonical persistent image body (no checksum)
    Value metrics;
    bool counters_conserved = true;

    Value to_json() const;
};

RunReport run_scenario(const Scenario& sc, const RunOptions& options);

struct CompareOutcome {
    bool equivalent = true;
    std::string diff;  // first difference, named down to the field
};

/// Equivalence of results and final persistent graphs (isomorphic up to id
/// remap; both sides are already canonical).  Metrics are not compared.
CompareOutcome compare_reports(const RunReport& a, const RunReport& b);

struct BenchRow {
    std::string mode;
    std::uint64_t remote_accesses = 0;
    std::uint64_t migrations = 0;
    std::uint64_t messages = 0;
    std::uint64_t replication_messages = 0;
    std::uint64_t modeled_latency = 0;
};

/// Per-mode cost table for a scenario at a fixed scale.
std::vector<BenchRow> bench_scenario(const Scenario& sc, const std::vector<DistributionMode>& modes,
                                     ScaleSpec scale, std::uint64_t seed);
Value bench_table_json(const std::vector<BenchRow>& rows);

/// First differing field between two json documents, as a dotted path, or
/// empty when equal.
std::string json_diff(const Value& a, const Value& b, const std::string& prefix = "$");

/// Unique scratch file path under the system temp directory.
std::string temp_path(const std::string& tag);

}  // namespace trellis

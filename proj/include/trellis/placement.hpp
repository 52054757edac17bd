#pragma once

#include "trellis/cluster.hpp"
#include "trellis/graph.hpp"

#include <map>

namespace trellis {

struct PlacementResult {
    std::map<NodeId, MachineId> assignment;
    std::uint64_t cut_edges = 0;
};

/// Balanced partition of the graph across `machines`, minimizing directed
/// cut edges with multi-start greedy local search (moves + swaps).
/// Deterministic given seed.  Affinity hints pin nodes to their machine when
/// capacity allows.  Errors when total node bytes exceed machines*capacity.
PlacementResult place_nodes(const Graph& g, const SizeModel& sizes, int machines,
                            std::uint64_t capacity_bytes, std::uint64_t seed,
                            const std::map<NodeId, MachineId>& hints = {});

/// Directed edges whose endpoints sit on different machines (self-loops are
/// never cut).
std::uint64_t count_cut_edges(const Graph& g, const std::map<NodeId, MachineId>& assignment);

}  // namespace trellis

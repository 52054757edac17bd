#pragma once

#include "trellis/graph.hpp"
#include "trellis/ids.hpp"

#include <set>

namespace trellis {

/// Closure of a root under outgoing edges.  Reachability follows edge
/// direction (source -> destination); an edge is included iff both endpoints
/// are in the node set, which under directed closure is exactly the edges
/// whose source is reachable.
struct ReachableSet {
    NodeId root;
    std::set<NodeId> nodes;
    std::set<EdgeId> edges;

    bool contains(NodeId n) const { return nodes.count(n) != 0; }
};

/// Pure breadth-first closure from `root`; throws MissingNode if absent.
ReachableSet reachable_set(const Graph& g, NodeId root);

}  // namespace trellis

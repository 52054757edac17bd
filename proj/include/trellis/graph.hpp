#pragma once

#include "trellis/errors.hpp"
#include "trellis/ids.hpp"
#include "trellis/value.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trellis {

/// A discrete data location in the program topology.  `owner` is set iff the
/// node was inside some user's reachable set at the last reachability pass;
/// unowned nodes are transient.
struct Node {
    NodeId id;
    std::string archetype;
    ValueMap properties = empty_map();
    std::optional<UserId> owner;
};

/// Directed, data-carrying relationship (source, destination, data).
/// Self-loops are permitted; parallel edges are permitted.
struct Edge {
    EdgeId id;
    NodeId source;
    NodeId destination;
    ValueMap data = empty_map();
};

/// Plain node/edge storage with adjacency, no behavior.  Key-ordered maps
/// keep every iteration deterministic.
class Graph {
public:
    NodeId add_node(std::string archetype, ValueMap properties);
    /// Insert with a caller-chosen id (snapshot restore, journal replay).
    /// The internal counter advances past `id`.
    void add_node_with_id(NodeId id, std::string archetype, ValueMap properties,
                          std::optional<UserId> owner);

    EdgeId add_edge(NodeId source, NodeId destination, ValueMap data);
    void add_edge_with_id(EdgeId id, NodeId source, NodeId destination, ValueMap data);

    void remove_edge(EdgeId id);
    /// Removes the node and every incident edge.
    void remove_node(NodeId id);

    bool has_node(NodeId id) const { return nodes_.count(id) != 0; }
    bool has_edge(EdgeId id) const { return edges_.count(id) != 0; }

    Node& node(NodeId id);
    const Node& node(NodeId id) const;
    Edge& edge(EdgeId id);
    const Edge& edge(EdgeId id) const;

    /// Outgoing edge ids of `source` in creation order.
    const std::vector<EdgeId>& outgoing(NodeId source) const;
    /// Incoming edge ids of `destination` in creation order.
    const std::vector<EdgeId>& incoming(NodeId destination) const;

    /// True iff some edge source -> destination exists.
    bool connected(NodeId source, NodeId destination) const;

    const std::map<NodeId, Node>& nodes() const { return nodes_; }
    std::map<NodeId, Node>& nodes_mutable() { return nodes_; }
    const std::map<EdgeId, Edge>& edges() const { return edges_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    std::uint64_t next_node_id() const { return next_node_id_; }
    std::uint64_t next_edge_id() const { return next_edge_id_; }
    /// Reserve an id without inserting; used by the step buffer so aborted
    /// steps can return their ids.
    NodeId allocate_node_id() { return NodeId{next_node_id_++}; }
    EdgeId allocate_edge_id() { return EdgeId{next_edge_id_++}; }
    /// Step-buffer abort support: ids handed out after `mark` are forgotten.
    /// Only valid while none of those ids have been published.
    void rewind_node_ids(std::uint64_t mark) { next_node_id_ = mark; }
    void rewind_edge_ids(std::uint64_t mark) { next_edge_id_ = mark; }

private:
    std::map<NodeId, Node> nodes_;
    std::map<EdgeId, Edge> edges_;
    std::map<NodeId, std::vector<EdgeId>> out_;
    std::map<NodeId, std::vector<EdgeId>> in_;
    std::uint64_t next_node_id_ = 1;
    std::uint64_t next_edge_id_ = 1;
};

}  // namespace trellis

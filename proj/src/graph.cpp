#include "trellis/graph.hpp"

#include <algorithm>

namespace trellis {

namespace {
const std::vector<EdgeId> kNoEdges;
}

NodeId Graph::add_node(std::string archetype, ValueMap properties) {
    NodeId id{next_node_id_++};
    nodes_.emplace(id, Node{id, std::move(archetype), std::move(properties), std::nullopt});
    return id;
}

void Graph::add_node_with_id(NodeId id, std::string archetype, ValueMap properties,
                             std::optional<UserId> owner) {
    if (nodes_.count(id) != 0) raise(Errc::IoFailure, "node id already present: " + to_string(id));
    nodes_.emplace(id, Node{id, std::move(archetype), std::move(properties), std::move(owner)});
    next_node_id_ = std::max(next_node_id_, id.value + 1);
}

EdgeId Graph::add_edge(NodeId source, NodeId destination, ValueMap data) {
    EdgeId id{next_edge_id_++};
    add_edge_with_id(id, source, destination, std::move(data));
    return id;
}

void Graph::add_edge_with_id(EdgeId id, NodeId source, NodeId destination, ValueMap data) {
    if (!has_node(source)) raise(Errc::MissingNode, "edge source " + to_string(source));
    if (!has_node(destination)) raise(Errc::MissingNode, "edge destination " + to_string(destination));
    if (edges_.count(id) != 0) raise(Errc::IoFailure, "edge id already present: " + to_string(id));
    edges_.emplace(id, Edge{id, source, destination, std::move(data)});
    out_[source].push_back(id);
    in_[destination].push_back(id);
    next_edge_id_ = std::max(next_edge_id_, id.value + 1);
}

void Graph::remove_edge(EdgeId id) {
    auto it = edges_.find(id);
    if (it == edges_.end()) raise(Errc::MissingEdge, to_string(id));
    auto drop = [id](std::vector<EdgeId>& v) { v.erase(std::remove(v.begin(), v.end(), id), v.end()); };
    drop(out_[it->second.source]);
    drop(in_[it->second.destination]);
    edges_.erase(it);
}

void Graph::remove_node(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) raise(Errc::MissingNode, to_string(id));
    std::vector<EdgeId> incident;
    if (auto o = out_.find(id); o != out_.end()) incident.insert(incident.end(), o->second.begin(), o->second.end());
    if (auto i = in_.find(id); i != in_.end()) incident.insert(incident.end(), i->second.begin(), i->second.end());
    std::sort(incident.begin(), incident.end());
    incident.erase(std::unique(incident.begin(), incident.end()), incident.end());
    for (EdgeId e : incident) remove_edge(e);
    out_.erase(id);
    in_.erase(id);
    nodes_.erase(it);
}

Node& Graph::node(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) raise(Errc::MissingNode, to_string(id));
    return it->second;
}

const Node& Graph::node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) raise(Errc::MissingNode, to_string(id));
    return it->second;
}

Edge& Graph::edge(EdgeId id) {
    auto it = edges_.find(id);
    if (it == edges_.end()) raise(Errc::MissingEdge, to_string(id));
    return it->second;
}

const Edge& Graph::edge(EdgeId id) const {
    auto it = edges_.find(id);
    if (it == edges_.end()) raise(Errc::MissingEdge, to_string(id));
    return it->second;
}

const std::vector<EdgeId>& Graph::outgoing(NodeId source) const {
    auto it = out_.find(source);
    return it == out_.end() ? kNoEdges : it->second;
}

const std::vector<EdgeId>& Graph::incoming(NodeId destination) const {
    auto it = in_.find(destination);
    return it == in_.end() ? kNoEdges : it->second;
}

bool Graph::connected(NodeId source, NodeId destination) const {
    for (EdgeId e : outgoing(source)) {
        if (edges_.at(e).destination == destination) return true;
    }
    return false;
}

}  // namespace trellis

#include "trellis/reachability.hpp"

#include "trellis/errors.hpp"

#include <deque>

namespace trellis {

ReachableSet reachable_set(const Graph& g, NodeId root) {
    if (!g.has_node(root)) raise(Errc::MissingNode, "root " + to_string(root));
    ReachableSet out;
    out.root = root;
    std::deque<NodeId> frontier{root};
    out.nodes.insert(root);
    while (!frontier.empty()) {
        NodeId n = frontier.front();
        frontier.pop_front();
        for (EdgeId e : g.outgoing(n)) {
            out.edges.insert(e);
            NodeId next = g.edge(e).destination;
            if (out.nodes.insert(next).second) frontier.push_back(next);
        }
    }
    return out;
}

}  // namespace trellis

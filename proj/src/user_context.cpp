#include "trellis/user_context.hpp"

#include "trellis/reachability.hpp"

#include <map>

namespace trellis::user_context {

NodeId resolve_root(Runtime& rt, const UserId& user) {
    auto& roots = rt.roots_mutable();
    auto it = roots.find(user);
    if (it != roots.end()) return it->second;
    NodeId root = rt.graph().add_node(Runtime::kRootArchetype, empty_map());
    rt.graph().node(root).owner = user;
    roots.emplace(user, root);
    rt.emit_journal("resolve_root", Value{{"user", user}, {"id", root.value}});
    return root;
}

IsolationVerdict check_isolation(const Runtime& rt, NodeId source, NodeId destination) {
    const auto& a = rt.graph().node(source).owner;
    const auto& b = rt.graph().node(destination).owner;
    if (!a || !b || *a == *b) return IsolationVerdict::Ok;
    return IsolationVerdict::Violation;
}

std::vector<NodeId> audit_disjointness(const Runtime& rt) {
    std::map<NodeId, UserId> claimed;
    std::vector<NodeId> shared;
    for (const auto& [user, root] : rt.roots()) {
        ReachableSet rs = reachable_set(rt.graph(), root);
        for (NodeId n : rs.nodes) {
            auto [it, fresh] = claimed.emplace(n, user);
            if (!fresh && it->second != user) shared.push_back(n);
        }
    }
    return shared;
}

}  // namespace trellis::user_context

#pragma once

#include "trellis/runtime.hpp"

#include <vector>

namespace trellis {

/// Per-user persistent anchors and the isolation checks between users'
/// subgraphs.  The registry itself (user -> root node) lives on the Runtime;
/// these are the operations over it.
namespace user_context {

/// Existing root for `user`, or a fresh one (owner = user, no edges).
/// Idempotent after the first call.
NodeId resolve_root(Runtime& rt, const UserId& user);

enum class IsolationVerdict { Ok, Violation };

/// Pairwise ownership compatibility: ok iff owners are equal or at least one
/// endpoint is unowned (attaching transient state is permitted; the node
/// acquires the owner once reachable).  Edge creation additionally scans the
/// destination closure; see Runtime::connect.
IsolationVerdict check_isolation(const Runtime& rt, NodeId source, NodeId destination);

/// Runtime self-check: empty iff all users' reachable sets are pairwise
/// disjoint.  Returns the shared nodes otherwise.
std::vector<NodeId> audit_disjointness(const Runtime& rt);

}  // namespace user_context

}  // namespace trellis

#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace trellis {

/// Opaque ids are distinct wrapper types so a NodeId cannot be passed where a
/// WalkerId is expected.  Ids are unique within a runtime instance and are
/// never reused after deletion.
template <class Tag>
struct Id {
    std::uint64_t value = 0;

    constexpr Id() = default;
    constexpr explicit Id(std::uint64_t v) : value(v) {}

    friend constexpr bool operator==(Id a, Id b) { return a.value == b.value; }
    friend constexpr bool operator!=(Id a, Id b) { return a.value != b.value; }
    friend constexpr bool operator<(Id a, Id b) { return a.value < b.value; }
    friend constexpr bool operator>(Id a, Id b) { return a.value > b.value; }
    friend constexpr bool operator<=(Id a, Id b) { return a.value <= b.value; }
    friend constexpr bool operator>=(Id a, Id b) { return a.value >= b.value; }
};

struct NodeTag {};
struct EdgeTag {};
struct WalkerTag {};
struct MachineTag {};

using NodeId = Id<NodeTag>;
using EdgeId = Id<EdgeTag>;
using WalkerId = Id<WalkerTag>;
using MachineId = Id<MachineTag>;

/// Users are identified by a declared string identity supplied by the caller
/// (the gateway's X-User header or the CLI); there is no authentication stack.
using UserId = std::string;

template <class Tag>
inline std::string to_string(Id<Tag> id) {
    return std::to_string(id.value);
}

}  // namespace trellis

template <class Tag>
struct std::hash<trellis::Id<Tag>> {
    std::size_t operator()(trellis::Id<Tag> id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};

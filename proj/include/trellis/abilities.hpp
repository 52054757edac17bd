#pragma once

#include "trellis/errors.hpp"
#include "trellis/ids.hpp"
#include "trellis/value.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace trellis {

class AbilityContext;

enum class Trigger { Entry, Exit };

/// Wildcard archetype filter: the ability fires for any counterpart.
inline constexpr const char* kAnyArchetype = "*";

/// A procedure hosted on a node or walker archetype, fired on walker
/// entry/exit events.  Bodies must be deterministic given the (walker state,
/// node state) pair they observe through the context.
struct Ability {
    std::string name;
    Trigger trigger = Trigger::Entry;
    /// Archetype name the counterpart must match ("*" = any): for a
    /// node-hosted ability this filters the walker archetype, for a
    /// walker-hosted ability the node archetype.
    std::string filter = kAnyArchetype;
    std::function<void(AbilityContext&)> body;
};

struct NodeArchetype {
    std::string name;
    std::vector<Ability> abilities;  // declaration order
};

struct WalkerArchetype {
    std::string name;
    /// Declared properties with their default values; instantiation starts
    /// from a copy of these.
    ValueMap defaults = empty_map();
    std::vector<Ability> abilities;  // declaration order
};

/// Archetypes are program code, not data: they are registered by the program
/// builder each execution and are never persisted.
class ArchetypeRegistry {
public:
    void register_node_archetype(const std::string& name) {
        node_types_.emplace(name, NodeArchetype{name, {}});
    }

    void register_walker_archetype(const std::string& name, ValueMap defaults = empty_map()) {
        walker_types_.emplace(name, WalkerArchetype{name, std::move(defaults), {}});
    }

    void add_node_ability(const std::string& archetype, Ability ability) {
        node_type(archetype).abilities.push_back(std::move(ability));
    }

    void add_walker_ability(const std::string& archetype, Ability ability) {
        walker_type(archetype).abilities.push_back(std::move(ability));
    }

    bool has_node_archetype(const std::string& name) const { return node_types_.count(name) != 0; }
    bool has_walker_archetype(const std::string& name) const { return walker_types_.count(name) != 0; }

    NodeArchetype& node_type(const std::string& name) {
        auto it = node_types_.find(name);
        if (it == node_types_.end()) raise(Errc::UnknownArchetype, "node archetype " + name);
        return it->second;
    }

    const WalkerArchetype& walker_type(const std::string& name) const {
        auto it = walker_types_.find(name);
        if (it == walker_types_.end()) raise(Errc::UnknownArchetype, "walker archetype " + name);
        return it->second;
    }

    WalkerArchetype& walker_type(const std::string& name) {
        auto it = walker_types_.find(name);
        if (it == walker_types_.end()) raise(Errc::UnknownArchetype, "walker archetype " + name);
        return it->second;
    }

    const NodeArchetype& node_type(const std::string& name) const {
        auto it = node_types_.find(name);
        if (it == node_types_.end()) raise(Errc::UnknownArchetype, "node archetype " + name);
        return it->second;
    }

private:
    std::map<std::string, NodeArchetype> node_types_;
    std::map<std::string, WalkerArchetype> walker_types_;
};

}  // namespace trellis

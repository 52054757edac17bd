#include "trellis/snapshot.hpp"

#include "trellis/reachability.hpp"

#include <cstdio>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace trellis {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

PersistentImage snapshot_document(Runtime& rt) {
    if (rt.engine_busy() || rt.any_walker_active())
        raise(Errc::WalkersActive, "snapshot requires quiescence");
    rt.recompute_ownership();

    const Graph& g = rt.graph();
    PersistentImage image;
    image.format_version = kImageFormatVersion;

    Value users = Value::array();
    std::uint64_t next_node = 0;
    std::uint64_t next_edge = 0;

    for (const auto& [user, root] : rt.roots()) {
        // breadth-first discovery order; neighbors in adjacency creation
        // order, which restore reproduces, making re-snapshots byte-stable
        std::vector<NodeId> order;
        std::deque<NodeId> frontier{root};
        std::set<NodeId> seen{root};
        while (!frontier.empty()) {
            NodeId n = frontier.front();
            frontier.pop_front();
            order.push_back(n);
            for (EdgeId e : g.outgoing(n)) {
                NodeId next = g.edge(e).destination;
                if (seen.insert(next).second) frontier.push_back(next);
            }
        }

        Value nodes = Value::array();
        for (NodeId n : order) {
            image.node_remap[n] = next_node;
            const Node& node = g.node(n);
            nodes.push_back(Value{{"id", next_node}, {"archetype", node.archetype},
                                  {"properties", node.properties}});
            ++next_node;
        }
        Value edges = Value::array();
        for (NodeId n : order) {
            for (EdgeId e : g.outgoing(n)) {
                const Edge& edge = g.edge(e);
                image.edge_remap[e] = next_edge;
                edges.push_back(Value{{"id", next_edge},
                                      {"source", image.node_remap.at(edge.source)},
                                      {"destination", image.node_remap.at(edge.destination)},
                                      {"data", edge.data}});
                ++next_edge;
            }
        }
        users.push_back(Value{{"user", user},
                              {"root", image.node_remap.at(root)},
                              {"nodes", nodes},
                              {"edges", edges}});
    }

    image.dropped_transient_nodes = g.node_count() - image.node_remap.size();
    image.dropped_transient_edges = g.edge_count() - image.edge_remap.size();

    Value body{{"format_version", kImageFormatVersion}, {"users", users}};
    image.checksum = hex64(fnv1a64(body.dump(2)));
    body["checksum"] = image.checksum;
    image.document = std::move(body);
    return image;
}

PersistentImage snapshot(Runtime& rt, const std::string& path) {
    PersistentImage image = snapshot_document(rt);
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::IoFailure, "cannot open " + tmp);
        out << image.document.dump(2) << "\n";
        if (!out.flush()) raise(Errc::IoFailure, "write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        raise(Errc::IoFailure, "rename " + tmp + " -> " + path);
    return image;
}

RestoreReport restore_document(Runtime& rt, const Value& doc) {
    if (rt.engine_busy() || rt.any_walker_active())
        raise(Errc::WalkersActive, "restore requires quiescence");
    if (!doc.is_object() || !doc.contains("format_version") || !doc.contains("checksum") ||
        !doc.contains("users"))
        raise(Errc::CorruptImage, "missing image fields");
    if (doc.at("format_version").get<int>() != kImageFormatVersion)
        raise(Errc::VersionMismatch,
              "image format " + doc.at("format_version").dump() + ", expected " +
                  std::to_string(kImageFormatVersion));
    Value body{{"format_version", doc.at("format_version")}, {"users", doc.at("users")}};
    std::string expect = hex64(fnv1a64(body.dump(2)));
    if (doc.at("checksum").get<std::string>() != expect)
        raise(Errc::CorruptImage, "checksum mismatch");

    // validate before touching the runtime: failure must leave it untouched
    for (const auto& section : doc.at("users")) {
        const std::string user = section.at("user").get<std::string>();
        if (rt.roots().count(user) != 0)
            raise(Errc::BadConfig, "user already present: " + user);
        for (const auto& n : section.at("nodes"))
            if (!rt.archetypes().has_node_archetype(n.at("archetype").get<std::string>()))
                raise(Errc::UnknownArchetype,
                      "image node archetype " + n.at("archetype").get<std::string>() +
                          " is not registered");
    }

    RestoreReport report;
    for (const auto& section : doc.at("users")) {
        const std::string user = section.at("user").get<std::string>();
        for (const auto& n : section.at("nodes")) {
            NodeId id = rt.graph().add_node(n.at("archetype").get<std::string>(),
                                            n.at("properties"));
            rt.graph().node(id).owner = user;
            report.node_map[n.at("id").get<std::uint64_t>()] = id;
        }
        for (const auto& e : section.at("edges")) {
            EdgeId id = rt.graph().add_edge(report.node_map.at(e.at("source").get<std::uint64_t>()),
                                            report.node_map.at(e.at("destination").get<std::uint64_t>()),
                                            e.at("data"));
            report.edge_map[e.at("id").get<std::uint64_t>()] = id;
        }
        rt.roots_mutable()[user] = report.node_map.at(section.at("root").get<std::uint64_t>());
        ++report.users;
    }
    return report;
}

RestoreReport restore(Runtime& rt, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::IoFailure, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    Value doc = Value::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) raise(Errc::CorruptImage, "unparseable image: " + path);
    return restore_document(rt, doc);
}

CollectStats collect_transient(Runtime& rt) {
    if (rt.engine_busy()) raise(Errc::WalkersActive, "collect_transient mid-ability");
    rt.recompute_ownership();

    std::set<NodeId> keep;
    for (const auto& [user, root] : rt.roots()) {
        ReachableSet rs = reachable_set(rt.graph(), root);
        keep.insert(rs.nodes.begin(), rs.nodes.end());
    }
    // safety rule: anything a live walker stands on or intends to visit stays
    for (const auto& [id, w] : rt.walkers()) {
        if (w.status != WalkerStatus::Active && w.status != WalkerStatus::Created) continue;
        if (w.location) keep.insert(*w.location);
        for (NodeId n : w.queue) keep.insert(n);
    }

    std::vector<NodeId> doomed;
    for (const auto& [id, node] : rt.graph().nodes())
        if (keep.count(id) == 0) doomed.push_back(id);

    CollectStats stats;
    std::size_t edges_before = rt.graph().edge_count();
    for (NodeId n : doomed) {
        rt.graph().remove_node(n);
        rt.emit_journal("delete_node", Value{{"id", n.value}});
        ++stats.nodes_reclaimed;
    }
    stats.edges_reclaimed = edges_before - rt.graph().edge_count();
    return stats;
}

// ---------------------------------------------------------------------------
// journal
// ---------------------------------------------------------------------------

JournalWriter::JournalWriter(std::string path) : path_(std::move(path)) {
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::IoFailure, "cannot open journal " + path_);
}

void JournalWriter::record_base(const PersistentImage& image) {
    Value nodes = Value::object();
    for (const auto& [rt_id, image_id] : image.node_remap)
        nodes[std::to_string(rt_id.value)] = image_id;
    Value edges = Value::object();
    for (const auto& [rt_id, image_id] : image.edge_remap)
        edges[std::to_string(rt_id.value)] = image_id;
    append("base", Value{{"nodes", nodes}, {"edges", edges}});
}

void JournalWriter::attach(Runtime& rt) {
    rt.set_mutation_sink([this](const std::string& op, const Value& args) { append(op, args); });
}

void JournalWriter::append(const std::string& op, const Value& args) {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) raise(Errc::IoFailure, "cannot append to journal " + path_);
    Value rec{{"seq", ++seq_}, {"op", op}, {"args", args}};
    out << rec.dump() << "\n";
}

namespace {

/// Journal id -> target runtime id, seeded from the base record and extended
/// as post-snapshot ids first appear.  Ids of pre-journal transient elements
/// are unbound: mutating or deleting those is skipped (they never reach the
/// persistent image), attaching one is an error (its content is undeducible).
struct IdBindings {
    std::map<std::uint64_t, NodeId> nodes;
    std::map<std::uint64_t, EdgeId> edges;

    bool has_node(std::uint64_t journal_id) const { return nodes.count(journal_id) != 0; }
    bool has_edge(std::uint64_t journal_id) const { return edges.count(journal_id) != 0; }

    NodeId node(std::uint64_t journal_id) const {
        auto it = nodes.find(journal_id);
        if (it == nodes.end()) raise(Errc::CorruptImage, "journal references unknown node");
        return it->second;
    }
    EdgeId edge(std::uint64_t journal_id) const {
        auto it = edges.find(journal_id);
        if (it == edges.end()) raise(Errc::CorruptImage, "journal references unknown edge");
        return it->second;
    }
};

}  // namespace

std::size_t replay_journal(Runtime& rt, const std::string& path, const RestoreReport* restored) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::IoFailure, "cannot open journal " + path);
    std::size_t applied = 0;
    std::string line;
    bool edges_changed = false;
    IdBindings bind;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Value rec = Value::parse(line, nullptr, false);
        if (rec.is_discarded()) raise(Errc::CorruptImage, "unparseable journal record");
        const std::string op = rec.at("op").get<std::string>();
        const Value& a = rec.at("args");
        if (op == "base") {
            if (restored == nullptr)
                raise(Errc::BadConfig, "journal has a base image; pass the restore report");
            for (auto it = a.at("nodes").begin(); it != a.at("nodes").end(); ++it)
                bind.nodes[std::stoull(it.key())] =
                    restored->node_map.at(it.value().get<std::uint64_t>());
            for (auto it = a.at("edges").begin(); it != a.at("edges").end(); ++it)
                bind.edges[std::stoull(it.key())] =
                    restored->edge_map.at(it.value().get<std::uint64_t>());
        } else if (op == "create_node") {
            NodeId id = rt.graph().add_node(a.at("archetype").get<std::string>(),
                                            a.at("properties"));
            bind.nodes[a.at("id").get<std::uint64_t>()] = id;
        } else if (op == "connect") {
            EdgeId id = rt.graph().add_edge(bind.node(a.at("source").get<std::uint64_t>()),
                                            bind.node(a.at("destination").get<std::uint64_t>()),
                                            a.at("data"));
            bind.edges[a.at("id").get<std::uint64_t>()] = id;
            edges_changed = true;
        } else if (op == "disconnect") {
            std::uint64_t id = a.at("id").get<std::uint64_t>();
            if (bind.has_edge(id)) {
                rt.graph().remove_edge(bind.edge(id));
                edges_changed = true;
            }
        } else if (op == "set_node_prop") {
            std::uint64_t id = a.at("id").get<std::uint64_t>();
            if (bind.has_node(id))
                rt.graph().node(bind.node(id)).properties[a.at("name").get<std::string>()] =
                    a.at("value");
        } else if (op == "delete_node") {
            std::uint64_t id = a.at("id").get<std::uint64_t>();
            if (bind.has_node(id)) {
                rt.graph().remove_node(bind.node(id));
                bind.nodes.erase(id);
                edges_changed = true;
            }
        } else if (op == "resolve_root") {
            NodeId id = rt.graph().add_node(Runtime::kRootArchetype, empty_map());
            const std::string user = a.at("user").get<std::string>();
            rt.graph().node(id).owner = user;
            rt.roots_mutable()[user] = id;
            bind.nodes[a.at("id").get<std::uint64_t>()] = id;
        } else {
            raise(Errc::CorruptImage, "unknown journal op " + op);
        }
        ++applied;
    }
    if (edges_changed) rt.recompute_ownership();
    return applied;
}

}  // namespace trellis

#pragma once

#include "trellis/runtime.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace trellis {

/// Versioned snapshot of the union of all users' reachable subgraphs.
/// The on-disk body carries only canonical dense ids; the remap tables
/// (runtime id -> image id) are in-memory bookkeeping for the caller.
struct PersistentImage {
    int format_version = 0;
    Value document;  // the full file content, checksum included
    std::string checksum;
    std::map<NodeId, std::uint64_t> node_remap;
    std::map<EdgeId, std::uint64_t> edge_remap;
    std::size_t dropped_transient_nodes = 0;
    std::size_t dropped_transient_edges = 0;
};

struct RestoreReport {
    std::map<std::uint64_t, NodeId> node_map;  // image id -> runtime id
    std::map<std::uint64_t, EdgeId> edge_map;
    std::size_t users = 0;
};

struct CollectStats {
    std::size_t nodes_reclaimed = 0;
    std::size_t edges_reclaimed = 0;
};

inline constexpr int kImageFormatVersion = 1;

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

/// Canonical image of the runtime's persistent state: sections sorted by
/// user, nodes in breadth-first order from each root (adjacency creation
/// order), globally dense ids.  Two runtimes holding isomorphic persistent
/// state produce byte-identical documents.
PersistentImage snapshot_document(Runtime& rt);

/// snapshot_document + atomic write (temp file, then rename).  Requires
/// quiescence: no active walker.
PersistentImage snapshot(Runtime& rt, const std::string& path);

/// Load an image into a runtime that does not yet know the imaged users.
/// Fresh runtime ids are assigned; roots are registered; walker state is not
/// restored.  On any validation failure the runtime is untouched.
RestoreReport restore(Runtime& rt, const std::string& path);
RestoreReport restore_document(Runtime& rt, const Value& document);

/// Delete every node unreachable from all roots and not referenced by a
/// walker's location or pending destinations, plus incident edges.  Refuses
/// to run mid-ability.
CollectStats collect_transient(Runtime& rt);

/// Append-only mutation journal: newline-delimited {seq, op, args} records.
/// Replaying a journal over the snapshot it started from reproduces the
/// final state; the snapshot remains the correctness baseline.
///
/// Journal ids are the writing runtime's ids.  A restored runtime assigns
/// fresh ids, so the journal opens with a base record holding the snapshot's
/// runtime-to-image id maps; replay composes them with the restore report's
/// image-to-runtime maps and binds post-snapshot ids as they first appear.
class JournalWriter {
public:
    explicit JournalWriter(std::string path);
    /// Record the id maps of the snapshot this journal extends.  Call once,
    /// before any mutation, when journaling on top of an image.
    void record_base(const PersistentImage& image);
    /// Install this journal as the runtime's mutation sink.
    void attach(Runtime& rt);
    void append(const std::string& op, const Value& args);
    std::uint64_t sequence() const { return seq_; }

private:
    std::string path_;
    std::uint64_t seq_ = 0;
};

/// Apply a journal file's records in sequence order.  `restored` maps the
/// base image's ids onto the target runtime; required when the journal
/// carries a base record, ignored otherwise.
std::size_t replay_journal(Runtime& rt, const std::string& path,
                           const RestoreReport* restored = nullptr);

}  // namespace trellis

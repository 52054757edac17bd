#include "trellis/placement.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace trellis {

std::uint64_t count_cut_edges(const Graph& g, const std::map<NodeId, MachineId>& assignment) {
    std::uint64_t cut = 0;
    for (const auto& [id, e] : g.edges()) {
        if (e.source == e.destination) continue;
        if (assignment.at(e.source) != assignment.at(e.destination)) ++cut;
    }
    return cut;
}

namespace {

struct Workspace {
    std::vector<NodeId> nodes;                       // sorted by id
    std::map<NodeId, std::size_t> index;
    std::vector<std::uint64_t> size;                 // by index
    std::vector<std::vector<std::size_t>> neighbors; // undirected multi-adjacency
    std::vector<int> pinned;                         // -1 or machine
    int k = 0;
    std::uint64_t bound = 0;
    std::uint64_t capacity = 0;
};

std::uint64_t cut_of(const Workspace& ws, const std::vector<int>& part) {
    std::uint64_t cut = 0;
    for (std::size_t i = 0; i < ws.nodes.size(); ++i)
        for (std::size_t j : ws.neighbors[i])
            if (part[i] != part[static_cast<int>(j)]) ++cut;
    return cut / 2;  // each undirected record counted from both ends
}

/// Best-improvement move/swap refinement until a fixed point.
void refine(const Workspace& ws, std::vector<int>& part, std::vector<std::uint64_t>& load) {
    const std::size_t n = ws.nodes.size();
    bool improved = true;
    int rounds = 0;
    auto degree_to = [&](std::size_t i, int m) {
        std::uint64_t d = 0;
        for (std::size_t j : ws.neighbors[i])
            if (part[j] == m) ++d;
        return d;
    };
    while (improved && rounds++ < 200) {
        improved = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (ws.pinned[i] >= 0) continue;
            const int cur = part[i];
            const std::uint64_t home = degree_to(i, cur);
            std::int64_t best_gain = 0;
            int best_m = -1;
            for (int m = 0; m < ws.k; ++m) {
                if (m == cur) continue;
                if (load[m] + ws.size[i] > ws.bound) continue;
                std::int64_t gain = static_cast<std::int64_t>(degree_to(i, m)) -
                                    static_cast<std::int64_t>(home);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_m = m;
                }
            }
            if (best_m >= 0) {
                load[cur] -= ws.size[i];
                load[best_m] += ws.size[i];
                part[i] = best_m;
                improved = true;
            }
        }
        // swap pass: equalizes when loads block single moves
        for (std::size_t i = 0; i < n; ++i) {
            if (ws.pinned[i] >= 0) continue;
            for (std::size_t j : ws.neighbors[i]) {
                if (j <= i || ws.pinned[j] >= 0) continue;
                const int a = part[i], b = part[j];
                if (a == b) continue;
                if (load[a] - ws.size[i] + ws.size[j] > ws.bound) continue;
                if (load[b] - ws.size[j] + ws.size[i] > ws.bound) continue;
                // gain of exchanging i and j (the i-j edges stay cut)
                std::int64_t before = static_cast<std::int64_t>(degree_to(i, b)) -
                                      static_cast<std::int64_t>(degree_to(i, a)) +
                                      static_cast<std::int64_t>(degree_to(j, a)) -
                                      static_cast<std::int64_t>(degree_to(j, b));
                std::int64_t self = 0;
                for (std::size_t x : ws.neighbors[i])
                    if (x == j) self += 2;
                if (before - self > 0) {
                    load[a] += ws.size[j] - ws.size[i];
                    load[b] += ws.size[i] - ws.size[j];
                    part[i] = b;
                    part[j] = a;
                    improved = true;
                }
            }
        }
    }
}

}  // namespace

PlacementResult place_nodes(const Graph& g, const SizeModel& sizes, int machines,
                            std::uint64_t capacity_bytes, std::uint64_t seed,
                            const std::map<NodeId, MachineId>& hints) {
    if (machines < 1) raise(Errc::BadConfig, "machine count must be >= 1");

    Workspace ws;
    ws.k = machines;
    ws.capacity = capacity_bytes;
    for (const auto& [id, node] : g.nodes()) {
        ws.index[id] = ws.nodes.size();
        ws.nodes.push_back(id);
        ws.size.push_back(sizes.node_size(id));
    }
    const std::size_t n = ws.nodes.size();
    std::uint64_t total = std::accumulate(ws.size.begin(), ws.size.end(), std::uint64_t{0});
    if (total > static_cast<std::uint64_t>(machines) * capacity_bytes)
        raise(Errc::CapacityExceeded,
              std::to_string(total) + " bytes over " + std::to_string(machines) + " machines");

    PlacementResult result;
    if (machines == 1 || n == 0) {
        for (NodeId id : ws.nodes) result.assignment[id] = MachineId{0};
        result.cut_edges = 0;
        return result;
    }

    ws.neighbors.resize(n);
    for (const auto& [id, e] : g.edges()) {
        if (e.source == e.destination) continue;
        std::size_t a = ws.index.at(e.source), b = ws.index.at(e.destination);
        ws.neighbors[a].push_back(b);
        ws.neighbors[b].push_back(a);
    }

    const std::uint64_t mean = (total + machines - 1) / machines;
    const std::uint64_t max_size = n ? *std::max_element(ws.size.begin(), ws.size.end()) : 0;
    // +-20% of mean when item granularity allows, otherwise one item of slack
    ws.bound = std::min(capacity_bytes, std::max(mean + (mean + 4) / 5, mean + max_size));

    ws.pinned.assign(n, -1);
    for (const auto& [node, machine] : hints) {
        auto it = ws.index.find(node);
        if (it == ws.index.end()) continue;
        if (machine.value >= static_cast<std::uint64_t>(machines)) continue;
        ws.pinned[it->second] = static_cast<int>(machine.value);
    }

    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    std::vector<int> best;
    std::uint64_t best_cut = ~0ull;

    const int starts = 12;
    for (int s = 0; s < starts; ++s) {
        std::vector<int> part(n, -1);
        std::vector<std::uint64_t> load(machines, 0);
        // pinned first, in node-id order, capacity permitting
        for (std::size_t i = 0; i < n; ++i) {
            if (ws.pinned[i] < 0) continue;
            if (load[ws.pinned[i]] + ws.size[i] > ws.capacity) {
                continue;  // hint unsatisfiable, node falls through to normal flow
            }
            part[i] = ws.pinned[i];
            load[ws.pinned[i]] += ws.size[i];
        }
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < n; ++i)
            if (part[i] < 0) order.push_back(i);
        if (s == 0) {
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return ws.size[a] > ws.size[b]; });
        } else {
            std::shuffle(order.begin(), order.end(), rng);
        }
        for (std::size_t i : order) {
            int pick = -1;
            if (s > 0) {
                int m = static_cast<int>(rng() % machines);
                if (load[m] + ws.size[i] <= ws.bound) pick = m;
            }
            if (pick < 0) {
                // least-loaded feasible machine, lowest id on ties
                for (int m = 0; m < machines; ++m)
                    if (pick < 0 || load[m] < load[pick]) pick = m;
            }
            part[i] = pick;
            load[pick] += ws.size[i];
        }

        // unpinned copy of pins so refine treats satisfied hints as fixed
        Workspace pass = ws;
        for (std::size_t i = 0; i < n; ++i)
            if (ws.pinned[i] >= 0 && part[i] != ws.pinned[i]) pass.pinned[i] = -1;
        refine(pass, part, load);

        std::uint64_t cut = cut_of(ws, part);
        if (cut < best_cut || (cut == best_cut && part < best)) {
            best_cut = cut;
            best = part;
        }
    }

    for (std::size_t i = 0; i < n; ++i) result.assignment[ws.nodes[i]] = MachineId{static_cast<std::uint64_t>(best[i])};
    result.cut_edges = count_cut_edges(g, result.assignment);
    return result;
}

}  // namespace trellis

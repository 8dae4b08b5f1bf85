#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace blocksim {

// Undirected multigraph of peers. Parallel links and self-loops only ever
// come out of the preferential-attachment generator; all other families
// produce simple graphs.
struct PeerGraph {
    int peer_count = 0;
    std::vector<std::pair<int, int>> links;  // unordered pairs, u <= v
    std::vector<int> degree;                 // self-loop counts 2
    std::string family_tag;
    int requested_peer_count = 0;  // before largest-component extraction
    bool connected = false;

    // link endpoints per peer with multiplicity; a self-loop contributes the
    // peer itself twice. Used for uniform neighbor selection in gossip.
    std::vector<std::vector<int>> adjacency;

    void finalize();  // fills degree, adjacency, connected
    bool is_simple() const;
};

// Nonempty proper subset of peers.
struct Cut {
    std::vector<int> members;  // sorted, 1 <= size <= N-1
};

struct StabilityBounds {
    double lower = 0.0;       // blocks/second
    double upper = 0.0;       // blocks/second
    double bandwidth = 1.0;   // per-peer rate B
    double conductance = 0.0; // phi_H value used
    bool exact = false;       // false: upper bound is an upper estimate
    std::optional<Cut> argmin_cut;
};

struct TopologySpec {
    std::string family;  // complete star torus btree erdos_renyi random_regular pref_attach geometric
    int n = 0;
    int dim = 1;      // torus
    int k = 1;        // torus range / btree depth
    int b = 2;        // btree branching
    double p = 0.0;   // erdos_renyi
    int d = 3;        // random_regular / pref_attach
    double c = 1.5;   // geometric radius constant
};

PeerGraph generate(const TopologySpec& spec, uint64_t seed);

// Degree-normalized cut ratio; numerator over ordered pairs p in S, q in S^C,
// counting parallel links with multiplicity. Self-loops never cross a cut.
double cut_conductance(const PeerGraph& graph, const Cut& cut);

// Exhaustive infimum over all 2^N - 2 cuts; N <= 20. Ties broken by the
// lexicographically smallest member set.
std::pair<double, Cut> graph_conductance_exact(const PeerGraph& graph);

StabilityBounds stability_bounds(const PeerGraph& graph, double bandwidth, bool exact);

// Global cap N/(N-1) and per-peer cap 1/(N-1).
std::pair<double, double> per_peer_rate_cap(int peer_count);

// Closed form for the root-side subtree cut of the b-ary tree of depth k.
double tree_cut_conductance(int branching, int depth);

// The explicit cut the closed form evaluates: root plus all but one of the
// root's subtrees.
Cut tree_root_side_cut(int branching, int depth);

std::string export_edge_list(const PeerGraph& graph);
PeerGraph import_edge_list(const std::string& text);

}  // namespace blocksim

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace blocksim {

inline constexpr int kNoMiner = -1;  // genesis

struct Block {
    int index = 0;
    int miner = kNoMiner;
    double arrival_time = 0.0;
    std::vector<int> out_refs;  // strictly smaller indices, fixed at creation
};

// Global DAG, acyclic by construction. Depth of a block is the length of the
// longest directed path to genesis; under the tree policy the maximal path
// from a block is unique so this is the plain hop distance.
class BlockDag {
  public:
    BlockDag();  // starts with genesis

    // refs must be nonempty (except genesis), strictly below index, and
    // present in the DAG.
    void add_block(int miner, double arrival_time, std::vector<int> out_refs);

    int size() const { return static_cast<int>(blocks_.size()); }
    const Block& block(int index) const { return blocks_[index]; }
    const std::vector<int>& in_refs(int index) const { return in_refs_[index]; }
    int depth(int index) const { return depth_[index]; }
    int max_depth() const { return max_depth_; }

    bool has_path(int from, int to) const;
    int max_in_degree() const;

    std::string export_text() const;
    static BlockDag import_text(const std::string& text);

  private:
    std::vector<Block> blocks_;
    std::vector<std::vector<int>> in_refs_;
    std::vector<int> depth_;
    int max_depth_ = 0;
};

// One peer's knowledge of the DAG. Blocks only ever get added; the set stays
// reference-closed because gossip delivers lowest-index-first and miners only
// reference what they know.
class PeerView {
  public:
    PeerView(const BlockDag* dag, int peer);

    int peer() const { return peer_; }
    int known_count() const { return count_; }
    bool contains(int index) const;
    void add(int index);  // throws if reference closure would break

    std::vector<int> known_blocks() const;  // ascending

    // least index known here but not by other, -1 if none (FCFS transfer pick)
    int first_missing_from(const PeerView& other) const;

    // cached tip of the longest-chain frontier: depth and least index at that
    // depth
    int frontier_depth() const { return best_depth_; }
    int frontier_start() const { return best_start_; }
    int max_known() const { return max_known_; }

    // current leaves (no in-references from known blocks), ascending
    const std::vector<int>& leaves() const { return leaves_; }

    const BlockDag& dag() const { return *dag_; }

  private:
    const BlockDag* dag_;
    int peer_;
    std::vector<uint64_t> bits_;
    int count_ = 0;
    int best_depth_ = 0;
    int best_start_ = 0;
    int max_known_ = 0;
    std::vector<int> leaves_{0};
};

// All known blocks at maximal hop distance from genesis.
std::vector<int> longest_chain_frontier(const PeerView& view);

// Tree policy: the least-indexed frontier block. below_index restricts the
// candidate set to blocks the new block may legally reference.
std::vector<int> select_refs_tree(const PeerView& view,
                                  int below_index = std::numeric_limits<int>::max());

// Throughput-optimal policy: every current leaf of the view.
std::vector<int> select_refs_throughput(const PeerView& view,
                                        int below_index = std::numeric_limits<int>::max());

// Longest maximal path, tip first, ending at genesis; ties among maximal
// lengths broken by least starting index.
std::vector<int> distinguished_path(const BlockDag& dag);
std::vector<int> distinguished_path(const BlockDag& dag, const std::vector<int>& members);

// Blocks determined (at a consistency time, tree policy) to be eventually
// confirmed: exactly the distinguished path of the snapshot.
std::vector<int> confirmed_at_consistency(const BlockDag& dag_at_consistency);

// Debug check: every maximal path from every block ends at genesis.
bool all_maximal_paths_end_at_genesis(const BlockDag& dag);

}  // namespace blocksim

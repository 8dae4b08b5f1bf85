#include "blocksim/chaindag.hpp"

#include <algorithm>
#include <bit>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace blocksim {

BlockDag::BlockDag() {
    blocks_.push_back(Block{0, kNoMiner, 0.0, {}});
    in_refs_.emplace_back();
    depth_.push_back(0);
}

void BlockDag::add_block(int miner, double arrival_time, std::vector<int> out_refs) {
    int index = size();
    if (out_refs.empty()) throw std::invalid_argument("add_block: out_refs must be nonempty");
    int d = 0;
    for (int r : out_refs) {
        if (r < 0 || r >= index) throw std::invalid_argument("add_block: reference must point to a smaller index");
        d = std::max(d, depth_[r] + 1);
    }
    std::sort(out_refs.begin(), out_refs.end());
    for (int r : out_refs) in_refs_[r].push_back(index);
    blocks_.push_back(Block{index, miner, arrival_time, std::move(out_refs)});
    in_refs_.emplace_back();
    depth_.push_back(d);
    max_depth_ = std::max(max_depth_, d);
}

bool BlockDag::has_path(int from, int to) const {
    if (from < 0 || from >= size() || to < 0 || to >= size())
        throw std::invalid_argument("has_path: block index not present");
    if (from == to) return true;
    if (from < to) return false;  // references point downward
    std::vector<char> seen(from + 1, 0);
    std::queue<int> q;
    q.push(from);
    seen[from] = 1;
    while (!q.empty()) {
        int b = q.front();
        q.pop();
        for (int r : blocks_[b].out_refs) {
            if (r == to) return true;
            if (r > to && !seen[r]) {
                seen[r] = 1;
                q.push(r);
            }
        }
    }
    return false;
}

int BlockDag::max_in_degree() const {
    size_t best = 0;
    for (const auto& in : in_refs_) best = std::max(best, in.size());
    return static_cast<int>(best);
}

std::string BlockDag::export_text() const {
    std::ostringstream out;
    for (const Block& b : blocks_) {
        out << b.index << " ";
        if (b.miner == kNoMiner)
            out << "-";
        else
            out << b.miner;
        out << " " << b.arrival_time << " ";
        if (b.out_refs.empty())
            out << "-";
        else
            for (size_t i = 0; i < b.out_refs.size(); ++i)
                out << (i ? "," : "") << b.out_refs[i];
        out << "\n";
    }
    return out.str();
}

BlockDag BlockDag::import_text(const std::string& text) {
    BlockDag dag;
    std::istringstream in(text);
    std::string line;
    int expected = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        int index;
        std::string miner_s, refs_s;
        double time;
        if (!(ls >> index >> miner_s >> time >> refs_s))
            throw std::invalid_argument("dag import: malformed line: " + line);
        if (index != expected)
            throw std::invalid_argument("dag import: blocks must appear in index order");
        if (index == 0) {
            if (refs_s != "-") throw std::invalid_argument("dag import: genesis must have no refs");
            expected++;
            continue;
        }
        int miner = (miner_s == "-") ? kNoMiner : std::stoi(miner_s);
        std::vector<int> refs;
        std::istringstream rs(refs_s);
        std::string tok;
        while (std::getline(rs, tok, ','))
            if (!tok.empty()) refs.push_back(std::stoi(tok));
        dag.add_block(miner, time, std::move(refs));
        expected++;
    }
    return dag;
}

PeerView::PeerView(const BlockDag* dag, int peer) : dag_(dag), peer_(peer) {
    bits_.assign(1, 0);
    bits_[0] = 1;  // genesis
    count_ = 1;
}

bool PeerView::contains(int index) const {
    size_t w = static_cast<size_t>(index) >> 6;
    if (w >= bits_.size()) return false;
    return (bits_[w] >> (index & 63)) & 1ull;
}

void PeerView::add(int index) {
    if (index >= dag_->size()) throw std::invalid_argument("PeerView::add: unknown block");
    if (contains(index)) return;
    for (int r : dag_->block(index).out_refs)
        if (!contains(r))
            throw std::logic_error("PeerView::add: reference closure violated");
    size_t w = static_cast<size_t>(index) >> 6;
    if (w >= bits_.size()) bits_.resize(w + 1, 0);
    bits_[w] |= 1ull << (index & 63);
    count_++;
    max_known_ = std::max(max_known_, index);

    int d = dag_->depth(index);
    if (d > best_depth_ || (d == best_depth_ && index < best_start_)) {
        best_depth_ = d;
        best_start_ = index;
    }
    // leaf bookkeeping: the new block unseats its references; it is itself a
    // leaf unless some already-known block references it
    for (int r : dag_->block(index).out_refs) {
        auto it = std::lower_bound(leaves_.begin(), leaves_.end(), r);
        if (it != leaves_.end() && *it == r) leaves_.erase(it);
    }
    bool is_leaf = true;
    for (int r : dag_->in_refs(index))
        if (contains(r)) {
            is_leaf = false;
            break;
        }
    if (is_leaf) leaves_.insert(std::lower_bound(leaves_.begin(), leaves_.end(), index), index);
}

std::vector<int> PeerView::known_blocks() const {
    std::vector<int> out;
    out.reserve(count_);
    for (size_t w = 0; w < bits_.size(); ++w) {
        uint64_t word = bits_[w];
        while (word) {
            int bit = std::countr_zero(word);
            out.push_back(static_cast<int>(w * 64 + bit));
            word &= word - 1;
        }
    }
    return out;
}

int PeerView::first_missing_from(const PeerView& other) const {
    for (size_t w = 0; w < bits_.size(); ++w) {
        uint64_t o = w < other.bits_.size() ? other.bits_[w] : 0;
        uint64_t diff = bits_[w] & ~o;
        if (diff) return static_cast<int>(w * 64 + std::countr_zero(diff));
    }
    return -1;
}

std::vector<int> longest_chain_frontier(const PeerView& view) {
    std::vector<int> out;
    int best = view.frontier_depth();
    for (int b : view.known_blocks())
        if (view.dag().depth(b) == best) out.push_back(b);
    return out;
}

std::vector<int> select_refs_tree(const PeerView& view, int below_index) {
    if (view.max_known() < below_index) return {view.frontier_start()};
    // out-of-order arrivals (replayed perturbations) can put higher-indexed
    // blocks in the view before the minting block; restrict the frontier
    int best_depth = -1, best_start = 0;
    for (int b : view.known_blocks()) {
        if (b >= below_index) continue;
        int d = view.dag().depth(b);
        if (d > best_depth || (d == best_depth && b < best_start)) {
            best_depth = d;
            best_start = b;
        }
    }
    return {best_start};
}

std::vector<int> select_refs_throughput(const PeerView& view, int below_index) {
    if (view.max_known() < below_index) return view.leaves();
    // restricted case: leaves of the sub-view on indices < below_index
    std::vector<int> out;
    for (int b : view.known_blocks()) {
        if (b >= below_index) continue;
        bool is_leaf = true;
        for (int r : view.dag().in_refs(b))
            if (r < below_index && view.contains(r)) {
                is_leaf = false;
                break;
            }
        if (is_leaf) out.push_back(b);
    }
    return out;
}

namespace {

std::vector<int> walk_path(const BlockDag& dag, int start,
                           const std::vector<char>* in_set) {
    std::vector<int> path{start};
    int cur = start;
    while (dag.depth(cur) > 0) {
        int want = dag.depth(cur) - 1;
        int next = -1;
        for (int r : dag.block(cur).out_refs) {
            if (in_set && !(*in_set)[r]) continue;
            if (dag.depth(r) == want && (next < 0 || r < next)) next = r;
        }
        if (next < 0) throw std::logic_error("distinguished_path: depth chain broken");
        path.push_back(next);
        cur = next;
    }
    return path;
}

}  // namespace

std::vector<int> distinguished_path(const BlockDag& dag) {
    int best = dag.max_depth();
    int start = 0;
    for (int b = 0; b < dag.size(); ++b)
        if (dag.depth(b) == best) {
            start = b;
            break;
        }
    return walk_path(dag, start, nullptr);
}

std::vector<int> distinguished_path(const BlockDag& dag, const std::vector<int>& members) {
    std::vector<char> in_set(dag.size(), 0);
    for (int m : members) {
        if (m < 0 || m >= dag.size())
            throw std::invalid_argument("distinguished_path: member not in DAG");
        in_set[m] = 1;
    }
    for (int m : members)
        for (int r : dag.block(m).out_refs)
            if (!in_set[r]) throw std::invalid_argument("distinguished_path: restriction not reference-closed");
    // depth within the restriction equals global depth because the
    // restriction is reference-closed
    int best = -1, start = -1;
    for (int b = 0; b < dag.size(); ++b) {
        if (!in_set[b]) continue;
        if (dag.depth(b) > best) {
            best = dag.depth(b);
            start = b;
        }
    }
    return walk_path(dag, start, &in_set);
}

std::vector<int> confirmed_at_consistency(const BlockDag& dag_at_consistency) {
    std::vector<int> path = distinguished_path(dag_at_consistency);
    std::sort(path.begin(), path.end());
    return path;
}

bool all_maximal_paths_end_at_genesis(const BlockDag& dag) {
    // every nonempty out_refs set recursively reaches a vertex with no
    // outgoing edges; that vertex must be genesis
    std::vector<int> terminal(dag.size(), -1);  // 1 ok, 0 bad
    for (int b = 0; b < dag.size(); ++b) {
        if (dag.block(b).out_refs.empty()) {
            terminal[b] = (b == 0) ? 1 : 0;
            continue;
        }
        terminal[b] = 1;
        for (int r : dag.block(b).out_refs)
            if (terminal[r] != 1) terminal[b] = 0;  // refs have smaller index, already set
    }
    return std::all_of(terminal.begin(), terminal.end(), [](int t) { return t == 1; });
}

}  // namespace blocksim

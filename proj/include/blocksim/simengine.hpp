#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "blocksim/chaindag.hpp"
#include "blocksim/metrics.hpp"
#include "blocksim/netgraph.hpp"

namespace blocksim {

enum class Policy { Tree, ThroughputOptimal };

struct ArrivalSource {
    enum class Kind { Poisson, Deterministic, Trace };
    Kind kind = Kind::Poisson;
    double rate = 0.0;  // blocks/second, Poisson
    // Deterministic: block i+1 arrives at arrivals[i]; times need not be
    // monotone, the position in this list fixes the block index.
    std::vector<std::pair<double, int>> arrivals;  // (time, peer), peer -1 = random
    std::vector<double> trace_times;               // Trace: sorted, peers drawn uniformly
};

// Per-peer gossip epochs replayed from a recording instead of drawn fresh.
struct ReplaySchedule {
    // per peer, (time, target) in increasing time order
    std::vector<std::vector<std::pair<double, int>>> epochs;
};

struct CommMode {
    enum class Kind { Stochastic, Replay };
    Kind kind = Kind::Stochastic;
    double rate = 1.0;  // per-peer epoch rate B
    bool dense = false; // Stochastic only: every peer stays armed at all times
    ReplaySchedule schedule;
};

struct StopRule {
    enum class Kind { Cycles, Blocks, SimTime, AllDisseminated };
    Kind kind = Kind::SimTime;
    double value = 0.0;
};

struct TransferRecord {
    double time = 0.0;
    int from = 0, to = 0, block = 0;
};

struct SimObservation {
    const BlockDag* dag = nullptr;
    const std::vector<PeerView>* views = nullptr;
    double time = 0.0;
};

struct SimConfig {
    PeerGraph graph;
    Policy policy = Policy::Tree;
    ArrivalSource arrivals;
    CommMode comm;
    StopRule stop;
    int warmup_cycles = 0;
    uint64_t master_seed = 1;
    bool debug_checks = false;
    bool record_transfers = false;
    bool record_epochs = false;  // capture the realized gossip schedule

    std::function<void(const SimObservation&)> on_consistency;
    std::ostream* timeseries_csv = nullptr;
};

struct SimResult {
    SimReport report;
    BlockDag dag;
    std::vector<TransferRecord> transfers;     // if record_transfers
    ReplaySchedule realized_epochs;            // if record_epochs
    double end_time = 0.0;
    double last_full_dissemination = -1.0;     // AllDisseminated completion
    std::vector<double> onset_times;           // consistency onsets, in order
};

SimResult run_simulation(const SimConfig& config);

// Time for one block, minted at t=0 by a uniformly random peer, to reach
// every peer. One sample per replication.
std::vector<double> simulate_single_block_spread(const PeerGraph& graph, double rate,
                                                 int replications, uint64_t seed);

// Earliest time every peer holds every block, for blocks injected at the given
// times (block index = list position + 1). Zero arrivals clear at time 0.
double dissemination_completion_time(const PeerGraph& graph, const CommMode& comm,
                                     const std::vector<std::pair<double, int>>& arrivals,
                                     uint64_t seed);

// Batch variant: all blocks present at their peers at time 0.
double clearing_time(const PeerGraph& graph, const CommMode& comm,
                     const std::vector<int>& batch_peers, uint64_t seed);

const char* policy_name(Policy p);
Policy policy_from_name(const std::string& name);

}  // namespace blocksim

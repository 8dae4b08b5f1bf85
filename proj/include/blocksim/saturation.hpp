#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "blocksim/metrics.hpp"
#include "blocksim/netgraph.hpp"
#include "blocksim/simengine.hpp"

namespace blocksim {

struct SaturationSweep {
    std::vector<long long> ladder;       // doubling batch sizes
    std::vector<MetricValue> clearing;   // E[X_n] with CI, per ladder entry
    MetricValue mu_hat;                  // estimated critical rate
    StabilityBounds bounds;
    bool within_bounds = false;
};

// Clearing times X_n for batches of n blocks placed uniformly at t = 0,
// across a doubling ladder with matched randomness per replication.
// mu_hat^{-1} is the difference quotient between the top two ladder rungs.
SaturationSweep estimate_mu(const PeerGraph& graph, double bandwidth, int n_max,
                            int replications, uint64_t seed);

nlohmann::json sweep_to_json(const SaturationSweep& sweep);

// Deterministic instance for the monotone-separability properties: explicit
// arrivals plus a replay gossip schedule that clears them.
struct PropertyInstance {
    PeerGraph graph;
    std::vector<std::pair<double, int>> arrivals;  // explicit peers, time order
    ReplaySchedule schedule;
};

struct Verdict {
    bool pass = true;
    int checked = 0;
    int skipped = 0;
    std::string detail;  // counterexample description on failure
};

// X for the instance's full arrival list under its replay schedule.
double instance_clearing(const PropertyInstance& instance);

Verdict check_causality(const PropertyInstance& instance);
Verdict check_external_monotonicity(const PropertyInstance& instance,
                                    const std::vector<double>& delays);
Verdict check_homogeneity(const PropertyInstance& instance, double shift);
Verdict check_separability(const PropertyInstance& instance);

// Small randomized instance (N <= 5, n <= 10) on a dyadic time grid so shift
// arithmetic is exact; the schedule is drawn long enough to clear.
PropertyInstance random_instance(uint64_t seed);

}  // namespace blocksim

#include <doctest.h>

#include <stdexcept>

#include "blocksim/rng.hpp"
#include "blocksim/saturation.hpp"

using namespace blocksim;

namespace {

PeerGraph make_graph(const std::string& family, int n) {
    TopologySpec s;
    s.family = family;
    s.n = n;
    return generate(s, 1);
}

// the worked two-peer instance: 4 arrivals, 4 replay epochs
PropertyInstance figure_instance() {
    PropertyInstance inst;
    inst.graph = make_graph("complete", 2);
    inst.arrivals = {{1.1, 0}, {2.4, 0}, {4.0, 1}, {6.2, 1}};
    inst.schedule.epochs = {{{2.6, 1}, {5.2, 1}}, {{5.8, 0}, {6.9, 0}}};
    return inst;
}

}  // namespace

TEST_CASE("clearing of the worked example happens at the last transfer") {
    CHECK(instance_clearing(figure_instance()) == 6.9);
}

TEST_CASE("causality holds on the worked example") {
    Verdict v = check_causality(figure_instance());
    CHECK(v.pass);
    CHECK(v.checked == 1);
}

TEST_CASE("delaying one arrival never speeds clearing") {
    PropertyInstance inst = figure_instance();
    Verdict zero = check_external_monotonicity(inst, {0, 0, 0, 0});
    CHECK(zero.pass);

    // push the first arrival past peer 0's first epoch at 2.6
    Verdict delayed = check_external_monotonicity(inst, {1.6, 0, 0, 0});
    CHECK(delayed.pass);

    CHECK_THROWS_AS(check_external_monotonicity(inst, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(check_external_monotonicity(inst, {-1, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("time shifts translate clearing exactly") {
    Verdict v = check_homogeneity(figure_instance(), 10.0);
    CHECK(v.pass);
    PropertyInstance shifted = figure_instance();
    for (auto& [t, p] : shifted.arrivals) t += 10.0;
    for (auto& pe : shifted.schedule.epochs)
        for (auto& [t, q] : pe) t += 10.0;
    CHECK(instance_clearing(shifted) == 16.9);
    CHECK(check_homogeneity(figure_instance(), 0.0).pass);
}

TEST_CASE("separability on a constructed split") {
    // blocks 1-2 arrive early and clear by t=3; block 3 arrives at t=5
    PropertyInstance inst;
    inst.graph = make_graph("complete", 2);
    inst.arrivals = {{0.5, 0}, {1.0, 0}, {5.0, 1}};
    inst.schedule.epochs = {{{2.0, 1}, {3.0, 1}}, {{6.0, 0}}};
    Verdict v = check_separability(inst);
    CHECK(v.pass);
    CHECK(v.checked >= 1);  // split after block 2 satisfies the premise
}

TEST_CASE("randomized property sweep finds no violations") {
    Rng rng = make_rng(2024, "sweep");
    int checked = 0;
    for (int i = 0; i < 60; ++i) {
        PropertyInstance inst = random_instance(derive_seed(2024, "case", i));
        CHECK(check_causality(inst).pass);
        std::vector<double> delays(inst.arrivals.size(), 0.0);
        delays[uniform_below(rng, delays.size())] = exponential_dyadic(rng, 0.5);
        CHECK(check_external_monotonicity(inst, delays).pass);
        CHECK(check_homogeneity(inst, exponential_dyadic(rng, 0.1)).pass);
        Verdict sep = check_separability(inst);
        CHECK(sep.pass);
        checked += sep.checked;
    }
    CHECK(checked > 0);  // the sweep exercised non-vacuous splits
}

TEST_CASE("mu estimation on K2 with unit-rate alternating epochs") {
    // one epoch per unit time in each direction clears one block per epoch
    PeerGraph k2 = make_graph("complete", 2);
    CommMode replay;
    replay.kind = CommMode::Kind::Replay;
    std::vector<std::pair<double, int>> fwd, bwd;
    for (int i = 1; i <= 200; ++i) {
        fwd.push_back({static_cast<double>(i), 1});
        bwd.push_back({i + 0.5, 0});
    }
    replay.schedule.epochs = {fwd, bwd};
    // n blocks at peer 0: cleared at epoch n
    for (int n : {1, 4, 16}) {
        std::vector<int> batch(n, 0);
        CHECK(clearing_time(k2, replay, batch, 1) == static_cast<double>(n));
    }
}

TEST_CASE("saturation sweep brackets the critical rate on K10") {
    PeerGraph k10 = make_graph("complete", 10);
    SaturationSweep sweep = estimate_mu(k10, 1.0, 32, 12, 5);
    REQUIRE(sweep.ladder.size() == 6);
    CHECK(sweep.ladder.front() == 1);
    CHECK(sweep.ladder.back() == 32);
    for (size_t i = 1; i < sweep.ladder.size(); ++i)
        CHECK(sweep.clearing[i].mean >= sweep.clearing[i - 1].mean);
    CHECK(sweep.mu_hat.mean > 0);
    CHECK(sweep.bounds.lower == doctest::Approx(0.2413).epsilon(1e-3));
    CHECK(sweep.bounds.upper == doctest::Approx(10.0 / 9.0).epsilon(1e-6));
    CHECK(sweep.within_bounds);

    nlohmann::json sj = sweep_to_json(sweep);
    CHECK(sj["within_bounds"] == true);
    CHECK(sj["ladder"].size() == 6);

    CHECK_THROWS_AS(estimate_mu(k10, 1.0, 4, 12, 5), std::invalid_argument);
    CHECK_THROWS_AS(estimate_mu(k10, 1.0, 32, 3, 5), std::invalid_argument);
}

TEST_CASE("random instances respect their advertised shape") {
    for (int i = 0; i < 20; ++i) {
        PropertyInstance inst = random_instance(derive_seed(7, "shape", i));
        CHECK(inst.graph.peer_count >= 2);
        CHECK(inst.graph.peer_count <= 5);
        CHECK(inst.arrivals.size() >= 1);
        CHECK(inst.arrivals.size() <= 10);
        for (size_t j = 1; j < inst.arrivals.size(); ++j)
            CHECK(inst.arrivals[j].first > inst.arrivals[j - 1].first);
    }
}

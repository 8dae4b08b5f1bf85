#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "blocksim/metrics.hpp"

using namespace blocksim;

TEST_CASE("ci95 basics") {
    MetricValue constant = ci95({1, 1, 1, 1});
    CHECK(constant.mean == doctest::Approx(1.0));
    CHECK(*constant.halfwidth == doctest::Approx(0.0));

    MetricValue two = ci95({0, 2});
    CHECK(two.mean == doctest::Approx(1.0));
    // sample sd is sqrt(2), so the halfwidth is t_{0.975,1} = 12.706
    CHECK(*two.halfwidth == doctest::Approx(12.706).epsilon(1e-3));

    MetricValue one = ci95({5.0});
    CHECK(one.mean == doctest::Approx(5.0));
    CHECK_FALSE(one.halfwidth.has_value());

    CHECK_THROWS_AS(ci95({}), std::invalid_argument);
}

namespace {

// replays the two-peer example trajectory into an accumulator:
// consistency on [0,1.1), [5.8,6.2), [6.9,...]; events change the
// consistent-peer count and the knowledge deficit
MetricsAccumulator example_trajectory() {
    MetricsAccumulator acc;
    acc.begin(0.0, 2, 2, 0, true);
    acc.advance(1.1, 1, 1);  // block 1 at p
    acc.on_consistency_break(1.1);
    acc.advance(2.4, 1, 2);  // block 2 at p
    acc.advance(2.6, 1, 1);  // transfer block 1
    acc.advance(4.0, 1, 2);  // block 3 at q
    acc.advance(5.2, 1, 1);  // transfer block 2
    acc.advance(5.8, 2, 0);  // transfer block 3
    acc.on_consistency_onset(5.8, 2);
    acc.advance(6.2, 1, 1);  // block 4 at q
    acc.on_consistency_break(6.2);
    acc.advance(6.9, 2, 0);  // transfer block 4
    acc.on_consistency_onset(6.9, 3);
    return acc;
}

}  // namespace

TEST_CASE("busy and idle periods of the example trajectory") {
    SimReport r = example_trajectory().finalize(6.9, true);
    std::vector<double> busy = r.period_log.busy_samples();
    REQUIRE(busy.size() == 2);
    CHECK(busy[0] == doctest::Approx(4.7));
    CHECK(busy[1] == doctest::Approx(0.7));
    REQUIRE(r.time_to_consistency.has_value());
    CHECK(r.time_to_consistency->mean == doctest::Approx(2.7));
    REQUIRE(r.cycle_length.has_value());
    CHECK(r.cycle_length->mean == doctest::Approx(2.7 + 0.75));
    CHECK(r.cycles == 2);
    CHECK(r.cycle_length->mean >= r.time_to_consistency->mean);
}

TEST_CASE("integral metrics are exact piecewise sums") {
    SimReport r = example_trajectory().finalize(6.9, true);
    // consistent intervals: [0,1.1) and [5.8,6.2) -> 1.5 of 6.9 at fraction 1,
    // the rest at 1/2
    double expect_fraction = (1.5 * 1.0 + 5.4 * 0.5) / 6.9;
    CHECK(r.consistency_fraction->mean == doctest::Approx(expect_fraction).epsilon(1e-12));
    // aoi_sum trajectory integral: 1*(2.4-1.1) + 2*(2.6-2.4) + 1*(4.0-2.6)
    //  + 2*(5.2-4.0) + 1*(5.8-5.2) + 0 + 1*(6.9-6.2), divided by T*N
    double expect_aoi = (1 * 1.3 + 2 * 0.2 + 1 * 1.4 + 2 * 1.2 + 1 * 0.6 + 1 * 0.7) / (6.9 * 2);
    CHECK(r.age_of_information->mean == doctest::Approx(expect_aoi).epsilon(1e-12));
}

TEST_CASE("growth rate spans first to last onset") {
    SimReport r = example_trajectory().finalize(6.9, true);
    REQUIRE(r.growth_rate.has_value());
    CHECK(r.growth_rate->mean == doctest::Approx((3.0 - 2.0) / (6.9 - 5.8)));
    SimReport nt = example_trajectory().finalize(6.9, false);
    CHECK_FALSE(nt.growth_rate.has_value());
}

TEST_CASE("empty run reports full consistency and no cycle metrics") {
    MetricsAccumulator acc;
    acc.begin(0.0, 5, 5, 0, true);
    SimReport r = acc.finalize(100.0, true);
    CHECK(r.consistency_fraction->mean == doctest::Approx(1.0));
    CHECK(r.age_of_information->mean == doctest::Approx(0.0));
    CHECK_FALSE(r.time_to_consistency.has_value());
    CHECK_FALSE(r.cycle_length.has_value());
    REQUIRE(r.period_log.intervals.size() == 1);
    CHECK_FALSE(r.period_log.intervals[0].busy);
}

TEST_CASE("integral metrics match a dense-sampling oracle") {
    SimReport r = example_trajectory().finalize(6.9, true);
    double dt = 1e-3;
    double frac = 0, aoi = 0;
    for (double t = 0; t < 6.9; t += dt) {
        int consistent;
        int deficit;
        if (t < 1.1 || (t >= 5.8 && t < 6.2)) {
            consistent = 2;
            deficit = 0;
        } else {
            consistent = 1;
            deficit = (t < 2.4)                ? 1
                      : (t < 2.6)              ? 2
                      : (t < 4.0)              ? 1
                      : (t < 5.2)              ? 2
                      : (t < 5.8)              ? 1
                                               : 1;  // [6.2, 6.9)
        }
        frac += dt * consistent / 2.0;
        aoi += dt * deficit;
    }
    CHECK(r.consistency_fraction->mean == doctest::Approx(frac / 6.9).epsilon(1e-3));
    CHECK(r.age_of_information->mean == doctest::Approx(aoi / (6.9 * 2)).epsilon(1e-3));
}

TEST_CASE("aggregate across replications") {
    SimReport a;
    a.time_to_consistency = MetricValue{2.0, std::nullopt};
    a.consistency_fraction = MetricValue{0.9, std::nullopt};
    a.cycles = 10;
    a.config_echo = {{"policy", "tree"}, {"seed", 1}};
    SimReport b = a;
    b.config_echo["seed"] = 2;

    SimReport agg = aggregate({a, b});
    CHECK(agg.time_to_consistency->mean == doctest::Approx(2.0));
    CHECK(*agg.time_to_consistency->halfwidth == doctest::Approx(0.0));
    CHECK(agg.cycles == 20);
    CHECK(agg.config_echo["replication_seeds"].size() == 2);

    SimReport single = aggregate({a});
    CHECK(single.time_to_consistency->mean == doctest::Approx(2.0));
    CHECK_FALSE(single.time_to_consistency->halfwidth.has_value());

    SimReport mismatched = a;
    mismatched.config_echo["policy"] = "throughput_optimal";
    CHECK_THROWS_AS(aggregate({a, mismatched}), std::invalid_argument);
    CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
}

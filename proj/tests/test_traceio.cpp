#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "blocksim/traceio.hpp"

using namespace blocksim;

TEST_CASE("trace parsing and summary") {
    std::istringstream in("# comment\n0\n600\n1200\n");
    ArrivalTrace trace = parse_trace(in, TraceFormat::EpochSeconds);
    CHECK(trace.times == std::vector<double>{0, 600, 1200});
    CHECK(trace.mean_interarrival == doctest::Approx(600.0));
    CHECK(trace.rate == doctest::Approx(1.0 / 600.0));
    CHECK(trace.source_count == 3);
}

TEST_CASE("trace normalization subtracts the first timestamp") {
    std::istringstream in("1700000000\n1700000500\n1700001000\n");
    ArrivalTrace trace = parse_trace(in, TraceFormat::EpochSeconds);
    CHECK(trace.times[0] == 0.0);
    CHECK(trace.times[2] == 1000.0);
    CHECK(trace.source_first == 1700000000.0);
}

TEST_CASE("trace rejects bad input with line numbers") {
    std::istringstream nonmono("5\n3\n");
    CHECK_THROWS_WITH_AS(parse_trace(nonmono, TraceFormat::Seconds),
                         "trace: non-monotone timestamp at line 2", std::invalid_argument);
    std::istringstream single("5\n");
    CHECK_THROWS_AS(parse_trace(single, TraceFormat::Seconds), std::invalid_argument);
    std::istringstream garbage("1.0\nbogus\n");
    CHECK_THROWS_WITH_AS(parse_trace(garbage, TraceFormat::Seconds),
                         "trace: unparseable value at line 2", std::invalid_argument);
    std::istringstream fractional("1.5\n2.5\n");
    CHECK_THROWS_AS(parse_trace(fractional, TraceFormat::EpochSeconds), std::invalid_argument);
    std::istringstream fractional2("1.5\n2.5\n");
    CHECK_NOTHROW(parse_trace(fractional2, TraceFormat::Seconds));
}

TEST_CASE("synthetic traces look like the target process") {
    std::string text = synthetic_trace_text(2000, 1.0 / 600.0, 4);
    std::istringstream in(text);
    ArrivalTrace trace = parse_trace(in, TraceFormat::EpochSeconds);
    CHECK(trace.source_count == 2000);
    CHECK(trace.rate == doctest::Approx(1.0 / 600.0).epsilon(0.1));
    // exponential inter-arrivals: sd close to the mean
    CHECK(std::sqrt(trace.var_interarrival) ==
          doctest::Approx(trace.mean_interarrival).epsilon(0.15));
}

TEST_CASE("minimal config loads with defaults") {
    nlohmann::json doc{
        {"topology", {{"family", "complete"}, {"params", {{"n", 10}}}}},
        {"policy", "tree"},
        {"arrivals", {{"kind", "poisson"}, {"rate", 0.2}}},
        {"comm", {{"mode", "stochastic"}, {"rate", 1.0}}},
        {"stop", {{"kind", "cycles"}, {"value", 50}}},
        {"master_seed", 7},
    };
    ExperimentConfig cfg = parse_config(doc);
    CHECK(cfg.topology.family == "complete");
    CHECK(cfg.topology.n == 10);
    CHECK(cfg.policy == Policy::Tree);
    CHECK(cfg.arrivals.rate == doctest::Approx(0.2));
    CHECK(cfg.comm.rate == doctest::Approx(1.0));
    CHECK(cfg.stop.kind == StopRule::Kind::Cycles);
    CHECK(cfg.warmup_cycles == 10);
    CHECK(cfg.replications == 1);
    CHECK(cfg.master_seed == 7);
}

TEST_CASE("config errors name the offending key path") {
    nlohmann::json doc{
        {"topology", {{"family", "complete"}, {"params", {{"n", 10}}}}},
        {"policy", "tree"},
        {"arrivals", {{"kind", "poisson"}, {"rate", 0.2}}},
        {"comm", {{"mode", "stochastic"}, {"rate", 1.0}}},
        {"stop", {{"kind", "cycles"}, {"value", 50}}},
    };

    nlohmann::json typo = doc;
    typo["topolgy"] = typo["topology"];
    typo.erase("topology");
    CHECK_THROWS_WITH_AS(parse_config(typo), "config: missing key $.topology",
                         std::invalid_argument);

    nlohmann::json unknown = doc;
    unknown["extra"] = 1;
    CHECK_THROWS_WITH_AS(parse_config(unknown), "config: unknown key $.extra",
                         std::invalid_argument);

    nlohmann::json badparam = doc;
    badparam["topology"]["params"]["q"] = 3;
    CHECK_THROWS_WITH_AS(parse_config(badparam), "config: unknown key topology.params.q",
                         std::invalid_argument);

    nlohmann::json badtype = doc;
    badtype["policy"] = 3;
    CHECK_THROWS_WITH_AS(parse_config(badtype), "config: $.policy must be a string",
                         std::invalid_argument);

    nlohmann::json norate = doc;
    norate["arrivals"].erase("rate");
    CHECK_THROWS_WITH_AS(parse_config(norate), "config: missing key arrivals.rate",
                         std::invalid_argument);
}

TEST_CASE("large-network config values survive a round trip") {
    nlohmann::json doc{
        {"topology", {{"family", "random_regular"}, {"params", {{"n", 3500}, {"d", 32}}}}},
        {"policy", "tree"},
        {"arrivals", {{"kind", "poisson"}, {"rate", 1.0 / 600.0}}},
        {"comm", {{"mode", "stochastic"}, {"rate", 9.14}}},
        {"stop", {{"kind", "cycles"}, {"value", 500}}},
        {"replications", 30},
        {"master_seed", 1},
    };
    ExperimentConfig cfg = parse_config(doc);
    CHECK(cfg.topology.n == 3500);
    CHECK(cfg.topology.d == 32);
    CHECK(cfg.comm.rate == doctest::Approx(9.14));
    ExperimentConfig again = parse_config(config_to_json(cfg));
    CHECK(config_to_json(again) == config_to_json(cfg));
}

TEST_CASE("schedule text round-trips") {
    std::string text = "arrival 1.1 0\narrival 2.4 0\nepoch 0 2.6 1\nepoch 1 5.8 0\n";
    ScheduleFile sched = parse_schedule_text(text);
    CHECK(sched.arrivals == std::vector<std::pair<double, int>>{{1.1, 0}, {2.4, 0}});
    REQUIRE(sched.epochs.epochs.size() == 2);
    CHECK(sched.epochs.epochs[0] == std::vector<std::pair<double, int>>{{2.6, 1}});
    ScheduleFile back = parse_schedule_text(format_schedule(sched));
    CHECK(back.arrivals == sched.arrivals);
    CHECK(back.epochs.epochs == sched.epochs.epochs);
    CHECK_THROWS_AS(parse_schedule_text("bogus 1 2\n"), std::invalid_argument);
}

TEST_CASE("report JSON round-trips byte-identically") {
    SimReport r;
    r.time_to_consistency = MetricValue{2.7, 0.3};
    r.consistency_fraction = MetricValue{0.93, std::nullopt};
    r.cycles = 12;
    r.blocks = 40;
    r.events = 500;
    r.period_log.intervals = {{0.0, 1.1, false}, {1.1, 5.8, true}};
    r.config_echo = {{"policy", "tree"}, {"seed", 7}};

    std::string path = "test_report_roundtrip.json";
    write_report(r, path);
    SimReport back = read_report(path);
    CHECK(report_to_json(back) == report_to_json(r));
    CHECK(report_to_json(back).dump() == report_to_json(r).dump());

    // canonical serialization: writing the re-read report gives identical bytes
    std::string path2 = "test_report_roundtrip2.json";
    write_report(back, path2);
    std::ifstream a(path), b(path2);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

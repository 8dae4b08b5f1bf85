#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace blocksim {

struct Interval {
    double start = 0.0;
    double end = 0.0;
    bool busy = false;
};

// Alternating idle/busy intervals. An idle interval begins at each
// consistency onset, a busy interval at each consistency break.
struct PeriodLog {
    std::vector<Interval> intervals;

    std::vector<double> busy_samples() const;
    std::vector<double> idle_samples() const;
};

struct MetricValue {
    double mean = 0.0;
    std::optional<double> halfwidth;  // 95% CI; absent for < 2 samples
};

struct SimReport {
    std::optional<MetricValue> time_to_consistency;   // mean busy period (s)
    std::optional<MetricValue> cycle_length;          // mean busy + mean idle (s)
    std::optional<MetricValue> consistency_fraction;  // time average in [0, 1]
    std::optional<MetricValue> growth_rate;           // tree policy only (blocks/s)
    std::optional<MetricValue> age_of_information;    // mean blocks behind per peer
    std::optional<MetricValue> per_block_dissemination;

    long long cycles = 0;  // completed post-warmup busy periods
    long long blocks = 0;  // minted blocks, excluding genesis
    long long events = 0;

    PeriodLog period_log;
    nlohmann::json config_echo;  // includes all seeds used
    nlohmann::json saturation;   // optional sweep results
};

// Student-t 95% interval. Throws on empty input; halfwidth absent for a
// single sample.
MetricValue ci95(const std::vector<double>& samples);

// Per-metric mean and CI across replications; inputs must share a config
// modulo the replication seed.
SimReport aggregate(const std::vector<SimReport>& reports);

// Online accumulation for one run. The engine advances time and reports
// state changes; integral metrics are exact for the piecewise-constant
// trajectories between events.
class MetricsAccumulator {
  public:
    void begin(double t0, int peer_count, int consistent_count, long long aoi_sum,
               bool initially_consistent);

    // integrate up to t with the current integrand, then switch state
    void advance(double t, int consistent_count, long long aoi_sum);

    void on_consistency_onset(double t, int distinguished_path_length);
    void on_consistency_break(double t);
    void add_dissemination_sample(double seconds);

    // closes the trailing interval at t_end and computes the metric fields;
    // counts are left for the engine to fill
    SimReport finalize(double t_end, bool tree_policy);

    long long completed_busy_periods() const { return busy_count_; }

  private:
    bool started_ = false;
    double t0_ = 0.0, last_t_ = 0.0;
    int peer_count_ = 0;
    int cur_consistent_ = 0;
    long long cur_aoi_ = 0;
    bool in_idle_ = true;
    double fraction_integral_ = 0.0;
    double aoi_integral_ = 0.0;
    PeriodLog log_;
    double open_start_ = 0.0;
    long long busy_count_ = 0;
    std::vector<double> dissemination_;
    std::optional<std::pair<double, int>> first_onset_;
    std::optional<std::pair<double, int>> last_onset_;
};

}  // namespace blocksim

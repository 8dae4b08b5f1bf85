#include "blocksim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace blocksim {

std::vector<double> PeriodLog::busy_samples() const {
    std::vector<double> out;
    for (const Interval& iv : intervals)
        if (iv.busy) out.push_back(iv.end - iv.start);
    return out;
}

std::vector<double> PeriodLog::idle_samples() const {
    std::vector<double> out;
    for (const Interval& iv : intervals)
        if (!iv.busy) out.push_back(iv.end - iv.start);
    return out;
}

MetricValue ci95(const std::vector<double>& samples) {
    if (samples.empty()) throw std::invalid_argument("ci95: no samples");
    size_t n = samples.size();
    double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    MetricValue v{mean, std::nullopt};
    if (n < 2) return v;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    double sd = std::sqrt(ss / (n - 1));
    boost::math::students_t dist(static_cast<double>(n - 1));
    double t = boost::math::quantile(dist, 0.975);
    v.halfwidth = t * sd / std::sqrt(static_cast<double>(n));
    return v;
}

namespace {

// means of a per-replication metric, skipping replications where it is absent
std::optional<MetricValue> across(const std::vector<SimReport>& reports,
                                  std::optional<MetricValue> SimReport::*field) {
    std::vector<double> means;
    for (const SimReport& r : reports)
        if (r.*field) means.push_back((r.*field)->mean);
    if (means.empty()) return std::nullopt;
    return ci95(means);
}

nlohmann::json echo_without_seed(const nlohmann::json& echo) {
    nlohmann::json e = echo;
    e.erase("seed");
    e.erase("derived_seeds");
    return e;
}

}  // namespace

SimReport aggregate(const std::vector<SimReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
    for (const SimReport& r : reports)
        if (echo_without_seed(r.config_echo) != echo_without_seed(reports.front().config_echo))
            throw std::invalid_argument("aggregate: replication configs differ");
    SimReport out;
    out.time_to_consistency = across(reports, &SimReport::time_to_consistency);
    out.cycle_length = across(reports, &SimReport::cycle_length);
    out.consistency_fraction = across(reports, &SimReport::consistency_fraction);
    out.growth_rate = across(reports, &SimReport::growth_rate);
    out.age_of_information = across(reports, &SimReport::age_of_information);
    out.per_block_dissemination = across(reports, &SimReport::per_block_dissemination);
    for (const SimReport& r : reports) {
        out.cycles += r.cycles;
        out.blocks += r.blocks;
        out.events += r.events;
    }
    out.config_echo = echo_without_seed(reports.front().config_echo);
    out.config_echo["replications"] = reports.size();
    nlohmann::json seeds = nlohmann::json::array();
    for (const SimReport& r : reports)
        if (r.config_echo.contains("seed")) seeds.push_back(r.config_echo["seed"]);
    out.config_echo["replication_seeds"] = seeds;
    return out;
}

void MetricsAccumulator::begin(double t0, int peer_count, int consistent_count,
                               long long aoi_sum, bool initially_consistent) {
    started_ = true;
    t0_ = last_t_ = open_start_ = t0;
    peer_count_ = peer_count;
    cur_consistent_ = consistent_count;
    cur_aoi_ = aoi_sum;
    in_idle_ = initially_consistent;
}

void MetricsAccumulator::advance(double t, int consistent_count, long long aoi_sum) {
    if (!started_) return;
    double dt = t - last_t_;
    if (dt > 0) {
        fraction_integral_ += dt * cur_consistent_ / static_cast<double>(peer_count_);
        aoi_integral_ += dt * static_cast<double>(cur_aoi_);
        last_t_ = t;
    }
    cur_consistent_ = consistent_count;
    cur_aoi_ = aoi_sum;
}

void MetricsAccumulator::on_consistency_onset(double t, int distinguished_path_length) {
    if (!started_) return;
    if (!in_idle_) {
        log_.intervals.push_back({open_start_, t, true});
        busy_count_++;
        open_start_ = t;
        in_idle_ = true;
    }
    if (!first_onset_) first_onset_ = {t, distinguished_path_length};
    last_onset_ = {t, distinguished_path_length};
}

void MetricsAccumulator::on_consistency_break(double t) {
    if (!started_) return;
    if (in_idle_) {
        log_.intervals.push_back({open_start_, t, false});
        open_start_ = t;
        in_idle_ = false;
    }
}

void MetricsAccumulator::add_dissemination_sample(double seconds) {
    if (started_) dissemination_.push_back(seconds);
}

SimReport MetricsAccumulator::finalize(double t_end, bool tree_policy) {
    SimReport r;
    if (!started_) return r;
    advance(t_end, cur_consistent_, cur_aoi_);
    // trailing partial period is kept in the log but excluded from samples
    PeriodLog full = log_;
    if (t_end > open_start_) full.intervals.push_back({open_start_, t_end, !in_idle_});
    r.period_log = full;

    auto busy = log_.busy_samples();
    auto idle = log_.idle_samples();
    if (!busy.empty()) r.time_to_consistency = ci95(busy);
    if (!busy.empty() && !idle.empty()) {
        double mb = std::accumulate(busy.begin(), busy.end(), 0.0) / busy.size();
        double mi = std::accumulate(idle.begin(), idle.end(), 0.0) / idle.size();
        // CI from idle+busy pairs, mean from the (possibly unbalanced) period means
        std::vector<double> cyc;
        double pending_idle = -1;
        for (const Interval& iv : log_.intervals) {
            if (!iv.busy)
                pending_idle = iv.end - iv.start;
            else if (pending_idle >= 0) {
                cyc.push_back(pending_idle + (iv.end - iv.start));
                pending_idle = -1;
            }
        }
        MetricValue cv;
        cv.mean = mb + mi;
        if (cyc.size() >= 2) cv.halfwidth = ci95(cyc).halfwidth;
        r.cycle_length = cv;
    }
    double span = t_end - t0_;
    if (span > 0) {
        r.consistency_fraction = MetricValue{fraction_integral_ / span, std::nullopt};
        r.age_of_information =
            MetricValue{aoi_integral_ / (span * peer_count_), std::nullopt};
    }
    if (!dissemination_.empty()) r.per_block_dissemination = ci95(dissemination_);
    if (tree_policy && first_onset_ && last_onset_ &&
        last_onset_->first > first_onset_->first) {
        r.growth_rate = MetricValue{
            (last_onset_->second - first_onset_->second) /
                (last_onset_->first - first_onset_->first),
            std::nullopt};
    }
    r.cycles = busy_count_;
    return r;
}

}  // namespace blocksim

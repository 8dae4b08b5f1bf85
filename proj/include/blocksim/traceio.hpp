#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "blocksim/metrics.hpp"
#include "blocksim/netgraph.hpp"
#include "blocksim/simengine.hpp"

namespace blocksim {

enum class TraceFormat { Seconds, EpochSeconds };

struct ArrivalTrace {
    std::vector<double> times;  // normalized, times[0] == 0, strictly increasing
    long long source_count = 0;
    double source_first = 0.0;
    double mean_interarrival = 0.0;
    double var_interarrival = 0.0;
    double rate = 0.0;  // blocks/second
};

// One timestamp per line, '#' comments allowed; input must be strictly
// increasing (error with line number, never a silent sort).
ArrivalTrace parse_trace(std::istream& in, TraceFormat format);
ArrivalTrace parse_trace_file(const std::string& path, TraceFormat format);

// Exponential inter-arrivals at the given rate, epoch-seconds style text.
std::string synthetic_trace_text(int count, double rate, uint64_t seed);

struct ExperimentConfig {
    TopologySpec topology;
    Policy policy = Policy::Tree;
    ArrivalSource arrivals;
    std::string trace_path;     // arrivals kind == Trace
    std::string arrivals_path;  // arrivals kind == Deterministic
    CommMode comm;
    std::string schedule_path;  // comm kind == Replay
    StopRule stop;
    int warmup_cycles = 10;
    int replications = 1;
    uint64_t master_seed = 1;
};

// Strict schema: unknown or missing keys are errors naming the JSON path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

// `arrival <time> <peer>` and `epoch <peer> <time> <target>` lines.
struct ScheduleFile {
    std::vector<std::pair<double, int>> arrivals;
    ReplaySchedule epochs;
};
ScheduleFile parse_schedule(std::istream& in);
ScheduleFile parse_schedule_text(const std::string& text);
std::string format_schedule(const ScheduleFile& schedule);

nlohmann::json report_to_json(const SimReport& report);
SimReport report_from_json(const nlohmann::json& doc);
void write_report(const SimReport& report, const std::string& path);
SimReport read_report(const std::string& path);

}  // namespace blocksim

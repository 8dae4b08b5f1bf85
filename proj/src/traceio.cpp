#include "blocksim/traceio.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "blocksim/rng.hpp"

namespace blocksim {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// locale-independent double parse of a whole token
double parse_number(const std::string& tok, int line_no) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v))
        fail("trace: unparseable value at line " + std::to_string(line_no));
    return v;
}

}  // namespace

ArrivalTrace parse_trace(std::istream& in, TraceFormat format) {
    std::vector<double> raw;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        size_t pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos || line[pos] == '#') continue;
        size_t last = line.find_last_not_of(" \t\r");
        std::string tok = line.substr(pos, last - pos + 1);
        if (format == TraceFormat::EpochSeconds && tok.find_first_not_of("0123456789") != std::string::npos)
            fail("trace: epoch timestamps must be integer seconds at line " + std::to_string(line_no));
        double t = parse_number(tok, line_no);
        if (!raw.empty() && t <= raw.back())
            fail("trace: non-monotone timestamp at line " + std::to_string(line_no));
        raw.push_back(t);
    }
    if (raw.size() < 2) fail("trace: need at least 2 timestamps");

    ArrivalTrace trace;
    trace.source_count = static_cast<long long>(raw.size());
    trace.source_first = raw.front();
    trace.times.reserve(raw.size());
    for (double t : raw) trace.times.push_back(t - raw.front());

    size_t n = raw.size() - 1;
    double sum = trace.times.back();
    trace.mean_interarrival = sum / n;
    double ss = 0;
    for (size_t i = 1; i < trace.times.size(); ++i) {
        double d = trace.times[i] - trace.times[i - 1] - trace.mean_interarrival;
        ss += d * d;
    }
    trace.var_interarrival = n > 1 ? ss / (n - 1) : 0.0;
    trace.rate = 1.0 / trace.mean_interarrival;
    return trace;
}

ArrivalTrace parse_trace_file(const std::string& path, TraceFormat format) {
    std::ifstream in(path);
    if (!in) fail("trace: cannot open " + path);
    return parse_trace(in, format);
}

std::string synthetic_trace_text(int count, double rate, uint64_t seed) {
    Rng rng = make_rng(seed, "trace");
    std::ostringstream out;
    double t = 0;
    long long prev = -1;
    for (int i = 0; i < count; ++i) {
        // integer-second resolution; bump collisions to stay strictly increasing
        long long s = std::llround(t);
        if (s <= prev) s = prev + 1;
        out << s << "\n";
        prev = s;
        t += exponential(rng, rate);
    }
    return out.str();
}

namespace {

void require_keys(const nlohmann::json& obj, const std::string& path,
                  std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional) {
    if (!obj.is_object()) fail("config: " + path + " must be an object");
    for (const char* k : required)
        if (!obj.contains(k)) fail("config: missing key " + path + "." + k);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : required)
            if (it.key() == k) known = true;
        for (const char* k : optional)
            if (it.key() == k) known = true;
        if (!known) fail("config: unknown key " + path + "." + it.key());
    }
}

double get_number(const nlohmann::json& obj, const std::string& path, const char* key) {
    if (!obj[key].is_number()) fail("config: " + path + "." + key + " must be a number");
    return obj[key].get<double>();
}

int get_int(const nlohmann::json& obj, const std::string& path, const char* key) {
    if (!obj[key].is_number_integer()) fail("config: " + path + "." + key + " must be an integer");
    return obj[key].get<int>();
}

std::string get_string(const nlohmann::json& obj, const std::string& path, const char* key) {
    if (!obj[key].is_string()) fail("config: " + path + "." + key + " must be a string");
    return obj[key].get<std::string>();
}

TopologySpec parse_topology(const nlohmann::json& t) {
    require_keys(t, "topology", {"family"}, {"params"});
    TopologySpec spec;
    spec.family = get_string(t, "topology", "family");
    nlohmann::json params = t.contains("params") ? t["params"] : nlohmann::json::object();
    require_keys(params, "topology.params", {}, {"n", "dim", "k", "b", "p", "d", "c"});
    if (params.contains("n")) spec.n = get_int(params, "topology.params", "n");
    if (params.contains("dim")) spec.dim = get_int(params, "topology.params", "dim");
    if (params.contains("k")) spec.k = get_int(params, "topology.params", "k");
    if (params.contains("b")) spec.b = get_int(params, "topology.params", "b");
    if (params.contains("p")) spec.p = get_number(params, "topology.params", "p");
    if (params.contains("d")) spec.d = get_int(params, "topology.params", "d");
    if (params.contains("c")) spec.c = get_number(params, "topology.params", "c");
    return spec;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& doc) {
    require_keys(doc, "$", {"topology", "policy", "arrivals", "comm", "stop"},
                 {"warmup_cycles", "replications", "master_seed"});
    ExperimentConfig cfg;
    cfg.topology = parse_topology(doc["topology"]);
    cfg.policy = policy_from_name(get_string(doc, "$", "policy"));

    const nlohmann::json& arr = doc["arrivals"];
    require_keys(arr, "arrivals", {"kind"}, {"rate", "path"});
    std::string akind = get_string(arr, "arrivals", "kind");
    if (akind == "poisson") {
        if (!arr.contains("rate")) fail("config: missing key arrivals.rate");
        cfg.arrivals.kind = ArrivalSource::Kind::Poisson;
        cfg.arrivals.rate = get_number(arr, "arrivals", "rate");
    } else if (akind == "trace") {
        if (!arr.contains("path")) fail("config: missing key arrivals.path");
        cfg.arrivals.kind = ArrivalSource::Kind::Trace;
        cfg.trace_path = get_string(arr, "arrivals", "path");
    } else if (akind == "deterministic") {
        if (!arr.contains("path")) fail("config: missing key arrivals.path");
        cfg.arrivals.kind = ArrivalSource::Kind::Deterministic;
        cfg.arrivals_path = get_string(arr, "arrivals", "path");
    } else {
        fail("config: arrivals.kind must be poisson, trace, or deterministic");
    }

    const nlohmann::json& comm = doc["comm"];
    require_keys(comm, "comm", {"mode"}, {"rate", "schedule_path"});
    std::string cmode = get_string(comm, "comm", "mode");
    if (cmode == "stochastic" || cmode == "stochastic_dense") {
        if (!comm.contains("rate")) fail("config: missing key comm.rate");
        cfg.comm.kind = CommMode::Kind::Stochastic;
        cfg.comm.rate = get_number(comm, "comm", "rate");
        cfg.comm.dense = cmode == "stochastic_dense";
    } else if (cmode == "replay") {
        if (!comm.contains("schedule_path")) fail("config: missing key comm.schedule_path");
        cfg.comm.kind = CommMode::Kind::Replay;
        cfg.schedule_path = get_string(comm, "comm", "schedule_path");
    } else {
        fail("config: comm.mode must be stochastic, stochastic_dense, or replay");
    }

    const nlohmann::json& stop = doc["stop"];
    require_keys(stop, "stop", {"kind", "value"}, {});
    std::string skind = get_string(stop, "stop", "kind");
    if (skind == "cycles")
        cfg.stop.kind = StopRule::Kind::Cycles;
    else if (skind == "blocks")
        cfg.stop.kind = StopRule::Kind::Blocks;
    else if (skind == "sim_time")
        cfg.stop.kind = StopRule::Kind::SimTime;
    else if (skind == "all_disseminated")
        cfg.stop.kind = StopRule::Kind::AllDisseminated;
    else
        fail("config: stop.kind must be cycles, blocks, sim_time, or all_disseminated");
    cfg.stop.value = get_number(stop, "stop", "value");

    if (doc.contains("warmup_cycles")) cfg.warmup_cycles = get_int(doc, "$", "warmup_cycles");
    if (doc.contains("replications")) cfg.replications = get_int(doc, "$", "replications");
    if (cfg.replications < 1) fail("config: replications must be at least 1");
    if (doc.contains("master_seed")) {
        if (!doc["master_seed"].is_number_integer())
            fail("config: $.master_seed must be an integer");
        cfg.master_seed = doc["master_seed"].get<uint64_t>();
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("config: cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        fail("config: " + std::string(e.what()));
    }
    return parse_config(doc);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json params{{"n", cfg.topology.n}};
    if (cfg.topology.family == "torus") {
        params["dim"] = cfg.topology.dim;
        params["k"] = cfg.topology.k;
    } else if (cfg.topology.family == "btree") {
        params["b"] = cfg.topology.b;
        params["k"] = cfg.topology.k;
    } else if (cfg.topology.family == "erdos_renyi") {
        params["p"] = cfg.topology.p;
    } else if (cfg.topology.family == "random_regular" || cfg.topology.family == "pref_attach") {
        params["d"] = cfg.topology.d;
    } else if (cfg.topology.family == "geometric") {
        params["c"] = cfg.topology.c;
    }
    nlohmann::json arrivals;
    switch (cfg.arrivals.kind) {
        case ArrivalSource::Kind::Poisson:
            arrivals = {{"kind", "poisson"}, {"rate", cfg.arrivals.rate}};
            break;
        case ArrivalSource::Kind::Trace:
            arrivals = {{"kind", "trace"}, {"path", cfg.trace_path}};
            break;
        case ArrivalSource::Kind::Deterministic:
            arrivals = {{"kind", "deterministic"}, {"path", cfg.arrivals_path}};
            break;
    }
    nlohmann::json comm;
    if (cfg.comm.kind == CommMode::Kind::Stochastic)
        comm = {{"mode", cfg.comm.dense ? "stochastic_dense" : "stochastic"}, {"rate", cfg.comm.rate}};
    else
        comm = {{"mode", "replay"}, {"schedule_path", cfg.schedule_path}};
    static const char* stop_names[] = {"cycles", "blocks", "sim_time", "all_disseminated"};
    return nlohmann::json{
        {"topology", {{"family", cfg.topology.family}, {"params", params}}},
        {"policy", policy_name(cfg.policy)},
        {"arrivals", arrivals},
        {"comm", comm},
        {"stop", {{"kind", stop_names[static_cast<int>(cfg.stop.kind)]}, {"value", cfg.stop.value}}},
        {"warmup_cycles", cfg.warmup_cycles},
        {"replications", cfg.replications},
        {"master_seed", cfg.master_seed},
    };
}

ScheduleFile parse_schedule(std::istream& in) {
    ScheduleFile out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        if (kind[0] == '#') continue;
        if (kind == "arrival") {
            double t;
            int peer;
            if (!(ls >> t >> peer))
                fail("schedule: malformed arrival at line " + std::to_string(line_no));
            out.arrivals.push_back({t, peer});
        } else if (kind == "epoch") {
            int peer, target;
            double t;
            if (!(ls >> peer >> t >> target))
                fail("schedule: malformed epoch at line " + std::to_string(line_no));
            if (peer < 0) fail("schedule: negative peer at line " + std::to_string(line_no));
            if (static_cast<size_t>(peer) >= out.epochs.epochs.size())
                out.epochs.epochs.resize(peer + 1);
            out.epochs.epochs[peer].push_back({t, target});
        } else {
            fail("schedule: unknown line kind '" + kind + "' at line " + std::to_string(line_no));
        }
    }
    return out;
}

ScheduleFile parse_schedule_text(const std::string& text) {
    std::istringstream in(text);
    return parse_schedule(in);
}

std::string format_schedule(const ScheduleFile& schedule) {
    std::ostringstream out;
    out.precision(17);
    for (auto [t, p] : schedule.arrivals) out << "arrival " << t << " " << p << "\n";
    for (size_t p = 0; p < schedule.epochs.epochs.size(); ++p)
        for (auto [t, q] : schedule.epochs.epochs[p])
            out << "epoch " << p << " " << t << " " << q << "\n";
    return out.str();
}

namespace {

nlohmann::json metric_json(const std::optional<MetricValue>& m) {
    if (!m) return nullptr;
    nlohmann::json j{{"mean", m->mean}};
    j["halfwidth"] = m->halfwidth ? nlohmann::json(*m->halfwidth) : nlohmann::json(nullptr);
    return j;
}

std::optional<MetricValue> metric_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    MetricValue m;
    m.mean = j.at("mean").get<double>();
    if (!j.at("halfwidth").is_null()) m.halfwidth = j.at("halfwidth").get<double>();
    return m;
}

}  // namespace

nlohmann::json report_to_json(const SimReport& r) {
    nlohmann::json periods = nlohmann::json::array();
    for (const Interval& iv : r.period_log.intervals)
        periods.push_back({{"start", iv.start}, {"end", iv.end}, {"busy", iv.busy}});
    return nlohmann::json{
        {"schema_version", 1},
        {"metrics",
         {{"time_to_consistency", metric_json(r.time_to_consistency)},
          {"cycle_length", metric_json(r.cycle_length)},
          {"consistency_fraction", metric_json(r.consistency_fraction)},
          {"growth_rate", metric_json(r.growth_rate)},
          {"age_of_information", metric_json(r.age_of_information)},
          {"per_block_dissemination", metric_json(r.per_block_dissemination)}}},
        {"counts", {{"cycles", r.cycles}, {"blocks", r.blocks}, {"events", r.events}}},
        {"periods", periods},
        {"config", r.config_echo},
        {"saturation", r.saturation},
    };
}

SimReport report_from_json(const nlohmann::json& doc) {
    if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != 1)
        fail("report: unsupported schema version");
    SimReport r;
    const nlohmann::json& m = doc.at("metrics");
    r.time_to_consistency = metric_from_json(m.at("time_to_consistency"));
    r.cycle_length = metric_from_json(m.at("cycle_length"));
    r.consistency_fraction = metric_from_json(m.at("consistency_fraction"));
    r.growth_rate = metric_from_json(m.at("growth_rate"));
    r.age_of_information = metric_from_json(m.at("age_of_information"));
    r.per_block_dissemination = metric_from_json(m.at("per_block_dissemination"));
    const nlohmann::json& c = doc.at("counts");
    r.cycles = c.at("cycles").get<long long>();
    r.blocks = c.at("blocks").get<long long>();
    r.events = c.at("events").get<long long>();
    for (const nlohmann::json& iv : doc.at("periods"))
        r.period_log.intervals.push_back(
            {iv.at("start").get<double>(), iv.at("end").get<double>(), iv.at("busy").get<bool>()});
    r.config_echo = doc.at("config");
    r.saturation = doc.at("saturation");
    return r;
}

void write_report(const SimReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("report: cannot open " + path + " for writing");
    // nlohmann objects keep keys sorted, so dumps are canonical
    out << report_to_json(report).dump(2) << "\n";
}

SimReport read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("report: cannot open " + path);
    nlohmann::json doc;
    in >> doc;
    return report_from_json(doc);
}

}  // namespace blocksim

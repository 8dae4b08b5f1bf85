// Python bindings for the main operations. JSON-heavy results cross the
// boundary as dumped strings; the package wrapper parses them.

#include <fstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "blocksim/netgraph.hpp"
#include "blocksim/rng.hpp"
#include "blocksim/saturation.hpp"
#include "blocksim/simengine.hpp"
#include "blocksim/traceio.hpp"

namespace py = pybind11;
using namespace blocksim;

namespace {

TopologySpec spec_from(const std::string& family, int n, int dim, int k, int b,
                       double p, int d, double c) {
    TopologySpec s;
    s.family = family;
    s.n = n;
    s.dim = dim;
    s.k = k;
    s.b = b;
    s.p = p;
    s.d = d;
    s.c = c;
    return s;
}

std::string topology_json(const std::string& family, int n, int dim, int k, int b,
                          double p, int d, double c, double bandwidth, uint64_t seed,
                          bool exact) {
    PeerGraph graph = generate(spec_from(family, n, dim, k, b, p, d, c),
                               derive_seed(seed, "topology"));
    StabilityBounds bounds = stability_bounds(graph, bandwidth,
                                              exact || graph.peer_count <= 20);
    auto [global_cap, peer_cap] = per_peer_rate_cap(graph.peer_count);
    nlohmann::json out{
        {"family", graph.family_tag},
        {"peer_count", graph.peer_count},
        {"links", graph.links.size()},
        {"conductance", bounds.conductance},
        {"conductance_exact", bounds.exact},
        {"lower_bound", bounds.lower},
        {"upper_bound", bounds.upper},
        {"bandwidth", bandwidth},
        {"global_rate_cap", global_cap},
        {"per_peer_rate_cap", peer_cap},
    };
    return out.dump();
}

std::string run_experiment_json(const std::string& config_json) {
    ExperimentConfig ec = parse_config(nlohmann::json::parse(config_json));
    SimConfig base;
    base.graph = generate(ec.topology, derive_seed(ec.master_seed, "topology"));
    base.policy = ec.policy;
    base.arrivals = ec.arrivals;
    base.comm = ec.comm;
    base.stop = ec.stop;
    base.warmup_cycles = ec.warmup_cycles;
    if (ec.arrivals.kind == ArrivalSource::Kind::Trace)
        base.arrivals.trace_times = parse_trace_file(ec.trace_path, TraceFormat::Seconds).times;
    if (ec.arrivals.kind == ArrivalSource::Kind::Deterministic) {
        std::ifstream in(ec.arrivals_path);
        if (!in) throw std::invalid_argument("cannot open " + ec.arrivals_path);
        base.arrivals.arrivals = parse_schedule(in).arrivals;
    }
    if (ec.comm.kind == CommMode::Kind::Replay) {
        std::ifstream in(ec.schedule_path);
        if (!in) throw std::invalid_argument("cannot open " + ec.schedule_path);
        base.comm.schedule = parse_schedule(in).epochs;
    }
    std::vector<SimReport> reports;
    for (int r = 0; r < ec.replications; ++r) {
        SimConfig cfg = base;
        cfg.master_seed = derive_seed(ec.master_seed, "replication", static_cast<uint64_t>(r));
        reports.push_back(run_simulation(cfg).report);
    }
    SimReport rep = ec.replications == 1 ? reports[0] : aggregate(reports);
    return report_to_json(rep).dump();
}

std::string estimate_mu_json(const std::string& family, int n, double bandwidth,
                             int n_max, int replications, uint64_t seed) {
    PeerGraph graph = generate(spec_from(family, n, 1, 1, 2, 0.0, 0, 1.0),
                               derive_seed(seed, "topology"));
    return sweep_to_json(estimate_mu(graph, bandwidth, n_max, replications, seed)).dump();
}

py::dict check_properties_py(int instances, uint64_t seed) {
    Rng rng = make_rng(seed, "properties");
    long long checked = 0, skipped = 0;
    int violations = 0;
    for (int i = 0; i < instances; ++i) {
        PropertyInstance inst = random_instance(derive_seed(seed, "case", static_cast<uint64_t>(i)));
        std::vector<double> delays(inst.arrivals.size(), 0.0);
        delays[uniform_below(rng, delays.size())] = exponential_dyadic(rng, 0.5);
        Verdict vs[] = {check_causality(inst),
                        check_external_monotonicity(inst, delays),
                        check_homogeneity(inst, exponential_dyadic(rng, 0.1)),
                        check_separability(inst)};
        for (const Verdict& v : vs) {
            checked += v.checked;
            skipped += v.skipped;
            if (!v.pass) violations++;
        }
    }
    py::dict out;
    out["instances"] = instances;
    out["checks"] = checked;
    out["skipped_splits"] = skipped;
    out["violations"] = violations;
    return out;
}

std::vector<double> spread_samples(const std::string& family, int n, double bandwidth,
                                   int replications, uint64_t seed) {
    PeerGraph graph = generate(spec_from(family, n, 1, 1, 2, 0.0, 0, 1.0),
                               derive_seed(seed, "topology"));
    return simulate_single_block_spread(graph, bandwidth, replications, seed);
}

}  // namespace

PYBIND11_MODULE(_blocksim, m) {
    m.doc() = "block dissemination simulator core";
    m.def("topology_json", &topology_json, py::arg("family"), py::arg("n"),
          py::arg("dim") = 1, py::arg("k") = 1, py::arg("b") = 2, py::arg("p") = 0.0,
          py::arg("d") = 0, py::arg("c") = 1.0, py::arg("bandwidth") = 1.0,
          py::arg("seed") = 1, py::arg("exact") = false);
    m.def("run_experiment_json", &run_experiment_json, py::arg("config_json"),
          py::call_guard<py::gil_scoped_release>());
    m.def("estimate_mu_json", &estimate_mu_json, py::arg("family"), py::arg("n"),
          py::arg("bandwidth") = 1.0, py::arg("n_max") = 64, py::arg("replications") = 30,
          py::arg("seed") = 1, py::call_guard<py::gil_scoped_release>());
    m.def("check_properties", &check_properties_py, py::arg("instances") = 100,
          py::arg("seed") = 1);
    m.def("single_block_spread", &spread_samples, py::arg("family"), py::arg("n"),
          py::arg("bandwidth") = 1.0, py::arg("replications") = 30, py::arg("seed") = 1,
          py::call_guard<py::gil_scoped_release>());
}

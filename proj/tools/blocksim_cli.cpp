#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "blocksim/chaindag.hpp"
#include "blocksim/netgraph.hpp"
#include "blocksim/rng.hpp"
#include "blocksim/saturation.hpp"
#include "blocksim/simengine.hpp"
#include "blocksim/traceio.hpp"

namespace {

using namespace blocksim;

std::string resolve_out(const std::string& path) {
    if (path.empty() || path.front() == '/' || path.find('/') != std::string::npos)
        return path;
    if (const char* dir = std::getenv("BLOCKSIM_OUT_DIR"))
        return std::string(dir) + "/" + path;
    return path;
}

void print_metric(const char* name, const std::optional<MetricValue>& m,
                  const char* unit) {
    std::cout << "  " << name << ": ";
    if (!m) {
        std::cout << "absent\n";
        return;
    }
    std::cout << m->mean;
    if (m->halfwidth) std::cout << " +/- " << *m->halfwidth;
    std::cout << " " << unit << "\n";
}

void print_report(const SimReport& r) {
    print_metric("time_to_consistency", r.time_to_consistency, "s");
    print_metric("cycle_length", r.cycle_length, "s");
    print_metric("consistency_fraction", r.consistency_fraction, "");
    print_metric("age_of_information", r.age_of_information, "blocks");
    print_metric("growth_rate", r.growth_rate, "blocks/s");
    print_metric("per_block_dissemination", r.per_block_dissemination, "s");
    std::cout << "  cycles: " << r.cycles << "  blocks: " << r.blocks
              << "  events: " << r.events << "\n";
}

struct TopologyFlags {
    std::string family = "complete";
    TopologySpec spec;
    double bandwidth = 1.0;
    bool exact = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--family", family, "complete star torus btree erdos_renyi random_regular pref_attach geometric");
        cmd->add_option("--n", spec.n, "peer count")->required();
        cmd->add_option("--dim", spec.dim, "torus dimension");
        cmd->add_option("--k", spec.k, "torus range / tree depth");
        cmd->add_option("--b", spec.b, "tree branching factor");
        cmd->add_option("--p", spec.p, "edge probability");
        cmd->add_option("--d", spec.d, "degree / attachment count");
        cmd->add_option("--c", spec.c, "geometric radius constant");
        cmd->add_option("--bandwidth", bandwidth, "per-peer epoch rate B (blocks/s)");
    }

    PeerGraph build(uint64_t seed) {
        spec.family = family;
        return generate(spec, derive_seed(seed, "topology"));
    }
};

int cmd_topology(TopologyFlags& topo, uint64_t seed, bool json) {
    PeerGraph graph = topo.build(seed);
    bool exact = topo.exact;
    if (exact && graph.peer_count > 20)
        throw std::invalid_argument("exact conductance enumeration is capped at 20 peers");
    if (!exact && graph.peer_count <= 20) exact = true;
    StabilityBounds bounds = stability_bounds(graph, topo.bandwidth, exact);
    auto [global_cap, peer_cap] = per_peer_rate_cap(graph.peer_count);
    if (json) {
        nlohmann::json out{
            {"family", graph.family_tag},
            {"peer_count", graph.peer_count},
            {"requested_peer_count", graph.requested_peer_count},
            {"links", graph.links.size()},
            {"conductance", bounds.conductance},
            {"conductance_exact", bounds.exact},
            {"lower_bound", bounds.lower},
            {"upper_bound", bounds.upper},
            {"bandwidth", topo.bandwidth},
            {"global_rate_cap", global_cap},
            {"per_peer_rate_cap", peer_cap},
        };
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "topology " << graph.family_tag << "\n"
                  << "  peers: " << graph.peer_count << " (requested "
                  << graph.requested_peer_count << ")\n"
                  << "  links: " << graph.links.size() << "\n"
                  << "  conductance: " << bounds.conductance
                  << (bounds.exact ? " (exact)" : " (estimate)") << "\n"
                  << "  stability bounds: [" << bounds.lower << ", " << bounds.upper
                  << "] blocks/s at B=" << topo.bandwidth << "\n"
                  << "  rate caps: global " << global_cap << ", per peer " << peer_cap
                  << " blocks/s\n";
    }
    return 0;
}

SimReport run_replications(SimConfig base, int replications, uint64_t master_seed,
                           int jobs, const std::string& csv_path,
                           const nlohmann::json& echo_extra) {
    std::vector<SimReport> reports(replications);
    auto run_one = [&](int r) {
        SimConfig cfg = base;
        cfg.master_seed = derive_seed(master_seed, "replication", static_cast<uint64_t>(r));
        std::ofstream csv;
        if (r == 0 && !csv_path.empty()) {
            csv.open(resolve_out(csv_path));
            if (!csv) throw std::invalid_argument("cannot open " + csv_path + " for writing");
            cfg.timeseries_csv = &csv;
        }
        SimReport rep = run_simulation(cfg).report;
        for (auto it = echo_extra.begin(); it != echo_extra.end(); ++it)
            rep.config_echo[it.key()] = it.value();
        reports[r] = std::move(rep);
    };
    if (jobs <= 1 || replications == 1) {
        for (int r = 0; r < replications; ++r) run_one(r);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        int workers = std::min(jobs, replications);
        std::vector<std::exception_ptr> errors(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (int r; (r = next.fetch_add(1)) < replications;) run_one(r);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return replications == 1 ? reports[0] : aggregate(reports);
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 const std::string& csv_path, std::optional<uint64_t> seed_override,
                 const std::string& lambda_grid, int jobs, bool json, bool transcript) {
    ExperimentConfig ec = load_config(config_path);
    if (seed_override) ec.master_seed = *seed_override;

    SimConfig base;
    base.graph = generate(ec.topology, derive_seed(ec.master_seed, "topology"));
    base.policy = ec.policy;
    base.arrivals = ec.arrivals;
    base.comm = ec.comm;
    base.stop = ec.stop;
    base.warmup_cycles = ec.warmup_cycles;

    nlohmann::json echo_extra = nlohmann::json::object();
    if (ec.arrivals.kind == ArrivalSource::Kind::Trace) {
        ArrivalTrace trace = parse_trace_file(ec.trace_path, TraceFormat::Seconds);
        base.arrivals.trace_times = trace.times;
        echo_extra["trace"] = {{"path", ec.trace_path},
                               {"count", trace.source_count},
                               {"empirical_rate", trace.rate}};
    }
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

    if (transcript) {
        SimConfig cfg = base;
        cfg.master_seed = derive_seed(ec.master_seed, "replication", 0);
        cfg.record_transfers = true;
        SimResult res = run_simulation(cfg);
        for (const TransferRecord& tr : res.transfers)
            std::cout << "t=" << tr.time << " block " << tr.block << " peer " << tr.from
                      << " -> peer " << tr.to << "\n";
        for (double t : res.onset_times) std::cout << "t=" << t << " consistent\n";
        return 0;
    }

    if (!lambda_grid.empty()) {
        if (ec.arrivals.kind != ArrivalSource::Kind::Poisson)
            throw std::invalid_argument("--lambda-grid requires poisson arrivals");
        double lo, hi, step;
        char c1, c2;
        std::istringstream gs(lambda_grid);
        if (!(gs >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
            throw std::invalid_argument("--lambda-grid expects lo:hi:step");
        nlohmann::json rows = nlohmann::json::array();
        for (double lam = lo; lam <= hi + 1e-12; lam += step) {
            base.arrivals.rate = lam;
            SimReport rep = run_replications(base, ec.replications,
                                             derive_seed(ec.master_seed, "lambda",
                                                         static_cast<uint64_t>(std::llround(lam * 1e9))),
                                             jobs, "", echo_extra);
            if (!json) {
                std::cout << "lambda=" << lam << "\n";
                print_report(rep);
            }
            rows.push_back(report_to_json(rep));
        }
        if (json) std::cout << rows.dump(2) << "\n";
        if (!out_path.empty()) {
            std::ofstream out(resolve_out(out_path));
            if (!out) throw std::invalid_argument("cannot open " + out_path + " for writing");
            out << rows.dump(2) << "\n";
        }
        return 0;
    }

    SimReport rep = run_replications(base, ec.replications, ec.master_seed, jobs,
                                     csv_path, echo_extra);
    if (json)
        std::cout << report_to_json(rep).dump(2) << "\n";
    else
        print_report(rep);
    if (!out_path.empty()) write_report(rep, resolve_out(out_path));
    return 0;
}

int cmd_saturate(TopologyFlags& topo, int n_max, int replications, uint64_t seed,
                 const std::string& out_path, bool json) {
    PeerGraph graph = topo.build(seed);
    SaturationSweep sweep = estimate_mu(graph, topo.bandwidth, n_max, replications, seed);
    nlohmann::json sj = sweep_to_json(sweep);
    if (json) {
        std::cout << sj.dump(2) << "\n";
    } else {
        std::cout << "saturation sweep on " << graph.family_tag << ", B=" << topo.bandwidth
                  << "\n";
        for (size_t i = 0; i < sweep.ladder.size(); ++i) {
            std::cout << "  n=" << sweep.ladder[i] << ": X=" << sweep.clearing[i].mean;
            if (sweep.clearing[i].halfwidth)
                std::cout << " +/- " << *sweep.clearing[i].halfwidth;
            std::cout << " s\n";
        }
        std::cout << "  mu_hat: " << sweep.mu_hat.mean;
        if (sweep.mu_hat.halfwidth) std::cout << " +/- " << *sweep.mu_hat.halfwidth;
        std::cout << " blocks/s\n  theorem bounds: [" << sweep.bounds.lower << ", "
                  << sweep.bounds.upper << "] -> "
                  << (sweep.within_bounds ? "contained" : "NOT contained") << "\n";
    }
    if (!out_path.empty()) {
        SimReport rep;
        rep.saturation = sj;
        write_report(rep, resolve_out(out_path));
    }
    return 0;
}

int cmd_properties(int instances, uint64_t seed, bool json) {
    Rng rng = make_rng(seed, "properties");
    long long checked = 0, skipped = 0;
    int violations = 0;
    std::string first_failure;
    for (int i = 0; i < instances; ++i) {
        PropertyInstance inst = random_instance(derive_seed(seed, "case", static_cast<uint64_t>(i)));
        std::vector<double> delays(inst.arrivals.size(), 0.0);
        size_t which = uniform_below(rng, delays.size());
        delays[which] = exponential_dyadic(rng, 0.5);
        double shift = exponential_dyadic(rng, 0.1);
        Verdict vs[] = {check_causality(inst),
                        check_external_monotonicity(inst, delays),
                        check_homogeneity(inst, shift),
                        check_separability(inst)};
        for (const Verdict& v : vs) {
            checked += v.checked;
            skipped += v.skipped;
            if (!v.pass) {
                violations++;
                if (first_failure.empty()) first_failure = v.detail;
            }
        }
    }
    if (json) {
        std::cout << nlohmann::json{{"instances", instances},
                                    {"checks", checked},
                                    {"skipped_splits", skipped},
                                    {"violations", violations}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << instances << " instances, " << checked << " checks (" << skipped
                  << " vacuous splits skipped), " << violations << " violations\n";
        if (violations) std::cout << "first failure: " << first_failure << "\n";
    }
    return violations == 0 ? 0 : 1;
}

int cmd_analyze(const std::string& path, bool json) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    BlockDag dag = BlockDag::import_text(buf.str());
    std::vector<int> dpath = distinguished_path(dag);
    std::vector<int> confirmed = dpath;
    std::sort(confirmed.begin(), confirmed.end());
    int orphans = dag.size() - static_cast<int>(confirmed.size());
    int max_out = 0;
    for (int b = 0; b < dag.size(); ++b)
        max_out = std::max(max_out, static_cast<int>(dag.block(b).out_refs.size()));
    if (json) {
        std::cout << nlohmann::json{{"blocks", dag.size()},
                                    {"max_depth", dag.max_depth()},
                                    {"distinguished_path", dpath},
                                    {"confirmed", confirmed},
                                    {"orphans", orphans},
                                    {"max_in_degree", dag.max_in_degree()},
                                    {"max_out_degree", max_out}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << "blocks: " << dag.size() << ", max depth: " << dag.max_depth() << "\n";
        std::cout << "distinguished path (tip first):";
        for (int b : dpath) std::cout << " " << b;
        std::cout << "\nconfirmed:";
        for (int b : confirmed) std::cout << " " << b;
        std::cout << "\norphans: " << orphans << ", max in-degree: " << dag.max_in_degree()
                  << ", max out-degree: " << max_out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"block dissemination simulator and analysis toolkit"};
    app.require_subcommand(1);

    uint64_t seed = 1;
    bool json = false;
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_flag("--json", json, "machine-readable output");

    TopologyFlags topo_flags;
    CLI::App* topo = app.add_subcommand("topology", "graph generation and stability bounds");
    topo_flags.attach(topo);
    topo->add_flag("--exact", topo_flags.exact, "force exhaustive cut enumeration");

    CLI::App* sim = app.add_subcommand("simulate", "run an experiment from a config file");
    std::string config_path, out_path, csv_path, lambda_grid;
    std::optional<uint64_t> seed_override;
    int jobs = 1;
    bool transcript = false;
    sim->add_option("config", config_path, "experiment config (JSON)")->required();
    sim->add_option("--out", out_path, "report JSON path");
    sim->add_option("--csv", csv_path, "time-series CSV path (first replication)");
    sim->add_option("--lambda-grid", lambda_grid, "poisson rate sweep lo:hi:step");
    sim->add_option("--jobs", jobs, "parallel replications");
    sim->add_flag("--transcript", transcript, "print the transfer/consistency event log");
    sim->add_option_function<uint64_t>(
        "--override-seed", [&](uint64_t s) { seed_override = s; },
        "replace the config's master_seed");

    TopologyFlags sat_flags;
    CLI::App* sat = app.add_subcommand("saturate", "critical-rate estimation via batch clearing");
    sat_flags.attach(sat);
    int n_max = 64, replications = 30;
    sat->add_option("--n-max", n_max, "top batch size of the doubling ladder");
    sat->add_option("--replications", replications, "replications per rung");
    std::string sat_out;
    sat->add_option("--out", sat_out, "report JSON path");

    CLI::App* props = app.add_subcommand("properties", "monotone-separability property sweep");
    int instances = 1000;
    props->add_option("--instances", instances, "randomized instance count");

    CLI::App* ana = app.add_subcommand("analyze", "inspect an exported block DAG");
    std::string dag_path;
    ana->add_option("dag", dag_path, "DAG export file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (topo->parsed()) return cmd_topology(topo_flags, seed, json);
        if (sim->parsed())
            return cmd_simulate(config_path, out_path, csv_path, seed_override, lambda_grid,
                                jobs, json, transcript);
        if (sat->parsed()) return cmd_saturate(sat_flags, n_max, replications, seed, sat_out, json);
        if (props->parsed()) return cmd_properties(instances, seed, json);
        if (ana->parsed()) return cmd_analyze(dag_path, json);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

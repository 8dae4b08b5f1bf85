#include "blocksim/simengine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "blocksim/rng.hpp"

namespace blocksim {

const char* policy_name(Policy p) {
    return p == Policy::Tree ? "tree" : "throughput_optimal";
}

Policy policy_from_name(const std::string& name) {
    if (name == "tree") return Policy::Tree;
    if (name == "throughput_optimal") return Policy::ThroughputOptimal;
    throw std::invalid_argument("unknown policy: " + name);
}

namespace {

struct Ev {
    double t = 0.0;
    int kind = 0;  // 0 arrival, 1 communication; arrivals win ties
    int peer = 0;
    long long seq = 0;
    long long aux = 0;  // arrival: list position; replay: epoch position; stochastic: generation
};

struct EvGreater {
    bool operator()(const Ev& a, const Ev& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.kind != b.kind) return a.kind > b.kind;
        if (a.peer != b.peer) return a.peer > b.peer;
        return a.seq > b.seq;
    }
};

class Engine {
  public:
    explicit Engine(const SimConfig& cfg) : cfg_(cfg), n_(cfg.graph.peer_count) {
        validate();
        views_.reserve(n_);
        for (int p = 0; p < n_; ++p) views_.emplace_back(&dag_, p);
        holders_.push_back(n_);  // genesis
        mint_time_.push_back(0.0);
        in_window_.push_back(false);
        rare_.assign(n_, 0);
        armed_.assign(n_, 0);
        gen_.assign(n_, 0);
        sum_counts_ = n_;
        consistent_ = n_;
        arrival_rng_ = make_rng(cfg_.master_seed, "arrivals", 0);
        peer_rng_ = make_rng(cfg_.master_seed, "peer_assign", 0);
        comm_rng_.reserve(n_);
        for (int p = 0; p < n_; ++p)
            comm_rng_.push_back(make_rng(cfg_.master_seed, "comm", static_cast<uint64_t>(p)));
        if (cfg_.record_epochs) realized_.epochs.resize(n_);
    }

    SimResult run() {
        seed_initial_events();
        if (cfg_.timeseries_csv)
            (*cfg_.timeseries_csv) << "time,consistent_peers,total_blocks,aoi_sum\n";
        if (cfg_.warmup_cycles == 0) begin_measurement(0.0);
        emit_csv(0.0);

        double now = 0.0;
        bool stopped = false;
        if (stop_satisfied(now)) stopped = true;
        while (!stopped) {
            if (queue_.empty()) {
                if (cfg_.stop.kind == StopRule::Kind::SimTime) {
                    now = cfg_.stop.value;
                    break;
                }
                throw std::runtime_error(
                    incomplete_ > 0
                        ? "replay schedule exhausted before stop condition"
                        : "trace exhausted before stop condition");
            }
            Ev ev = queue_.top();
            if (cfg_.stop.kind == StopRule::Kind::SimTime && ev.t > cfg_.stop.value) {
                now = cfg_.stop.value;
                break;
            }
            queue_.pop();
            now = ev.t;
            if (ev.kind == 0)
                process_arrival(ev);
            else if (!process_epoch(ev))
                continue;  // stale
            events_++;
            emit_csv(now);
            if (stop_satisfied(now)) stopped = true;
        }

        SimResult result;
        result.report = acc_.finalize(now, cfg_.policy == Policy::Tree);
        result.report.blocks = dag_.size() - 1;
        result.report.events = events_;
        result.report.config_echo = config_echo();
        result.dag = std::move(dag_);
        result.transfers = std::move(transfers_);
        result.realized_epochs = std::move(realized_);
        result.end_time = now;
        result.last_full_dissemination = last_full_diss_;
        result.onset_times = std::move(onset_times_);
        return result;
    }

  private:
    void validate() {
        if (n_ < 2) throw std::invalid_argument("simulation needs at least 2 peers");
        if (!cfg_.graph.connected) throw std::invalid_argument("disconnected graph");
        if (cfg_.comm.kind == CommMode::Kind::Stochastic && cfg_.comm.rate <= 0)
            throw std::invalid_argument("communication rate must be positive");
        if (cfg_.comm.kind == CommMode::Kind::Replay) {
            const auto& sched = cfg_.comm.schedule.epochs;
            if (static_cast<int>(sched.size()) > n_)
                throw std::invalid_argument("replay schedule peer out of range");
            for (int p = 0; p < static_cast<int>(sched.size()); ++p) {
                double prev = -1.0;
                for (auto [t, q] : sched[p]) {
                    if (t <= prev)
                        throw std::invalid_argument("replay epochs must be strictly increasing per peer");
                    prev = t;
                    const auto& adj = cfg_.graph.adjacency[p];
                    if (std::find(adj.begin(), adj.end(), q) == adj.end())
                        throw std::invalid_argument("replay target not a neighbor");
                }
            }
        }
        if (cfg_.arrivals.kind == ArrivalSource::Kind::Poisson && cfg_.arrivals.rate < 0)
            throw std::invalid_argument("arrival rate must be nonnegative");
        if (cfg_.arrivals.kind == ArrivalSource::Kind::Deterministic)
            for (auto [t, p] : cfg_.arrivals.arrivals) {
                if (t < 0) throw std::invalid_argument("arrival times must be nonnegative");
                if (p < -1 || p >= n_) throw std::invalid_argument("arrival peer out of range");
            }
        if (cfg_.arrivals.kind == ArrivalSource::Kind::Trace &&
            !std::is_sorted(cfg_.arrivals.trace_times.begin(), cfg_.arrivals.trace_times.end()))
            throw std::invalid_argument("trace times must be nondecreasing");
        if ((cfg_.stop.kind == StopRule::Kind::Cycles || cfg_.stop.kind == StopRule::Kind::Blocks) &&
            cfg_.stop.value < 1)
            throw std::invalid_argument("stop count must be at least 1");
        if (cfg_.stop.kind == StopRule::Kind::SimTime && cfg_.stop.value < 0)
            throw std::invalid_argument("stop time must be nonnegative");
        if (cfg_.stop.kind == StopRule::Kind::AllDisseminated &&
            cfg_.arrivals.kind == ArrivalSource::Kind::Poisson && cfg_.arrivals.rate > 0)
            throw std::invalid_argument("dissemination stop needs a finite arrival list");
        if (cfg_.warmup_cycles < 0) throw std::invalid_argument("warmup_cycles must be nonnegative");
    }

    void seed_initial_events() {
        switch (cfg_.arrivals.kind) {
            case ArrivalSource::Kind::Poisson:
                if (cfg_.arrivals.rate > 0)
                    push_arrival(exponential(arrival_rng_, cfg_.arrivals.rate), -1, 0);
                break;
            case ArrivalSource::Kind::Deterministic: {
                pending_arrivals_ = static_cast<long long>(cfg_.arrivals.arrivals.size());
                long long pos = 0;
                for (auto [t, p] : cfg_.arrivals.arrivals) push_arrival(t, p, pos++);
                break;
            }
            case ArrivalSource::Kind::Trace:
                pending_arrivals_ = static_cast<long long>(cfg_.arrivals.trace_times.size());
                if (pending_arrivals_ > 0) push_arrival(cfg_.arrivals.trace_times[0], -1, 0);
                break;
        }
        if (cfg_.comm.kind == CommMode::Kind::Replay) {
            for (int p = 0; p < static_cast<int>(cfg_.comm.schedule.epochs.size()); ++p)
                if (!cfg_.comm.schedule.epochs[p].empty())
                    queue_.push({cfg_.comm.schedule.epochs[p][0].first, 1, p, seq_++, 0});
        } else if (cfg_.comm.dense) {
            for (int p = 0; p < n_; ++p) arm(p, 0.0);
        }
    }

    void push_arrival(double t, int peer, long long pos) {
        queue_.push({t, 0, peer, seq_++, pos});
    }

    void arm(int p, double now) {
        armed_[p] = 1;
        gen_[p]++;
        queue_.push({now + exponential(comm_rng_[p], cfg_.comm.rate), 1, p, seq_++,
                     static_cast<long long>(gen_[p])});
    }

    void process_arrival(const Ev& ev) {
        int p = ev.peer >= 0 ? ev.peer : static_cast<int>(uniform_below(peer_rng_, static_cast<uint64_t>(n_)));
        std::vector<int> refs = cfg_.policy == Policy::Tree ? select_refs_tree(views_[p])
                                                            : select_refs_throughput(views_[p]);
        int index = dag_.size();
        dag_.add_block(p, ev.t, std::move(refs));
        views_[p].add(index);
        holders_.push_back(1);
        mint_time_.push_back(ev.t);
        in_window_.push_back(acc_started_);
        sum_counts_++;
        bool was_consistent = consistent_ == n_;
        consistent_ = views_[p].known_count() == dag_.size() ? 1 : 0;
        incomplete_++;
        rare_[p]++;
        if (cfg_.comm.kind == CommMode::Kind::Stochastic && !cfg_.comm.dense && !armed_[p])
            arm(p, ev.t);
        acc_.advance(ev.t, consistent_, aoi_sum());
        if (was_consistent) acc_.on_consistency_break(ev.t);
        minted_++;

        // queue the next arrival for sequential sources
        if (cfg_.arrivals.kind == ArrivalSource::Kind::Poisson) {
            push_arrival(ev.t + exponential(arrival_rng_, cfg_.arrivals.rate), -1, 0);
        } else {
            pending_arrivals_--;
            if (cfg_.arrivals.kind == ArrivalSource::Kind::Trace) {
                long long next = ev.aux + 1;
                if (next < static_cast<long long>(cfg_.arrivals.trace_times.size()))
                    push_arrival(cfg_.arrivals.trace_times[next], -1, next);
            }
        }
    }

    // returns false for a stale lazy epoch
    bool process_epoch(const Ev& ev) {
        int p = ev.peer;
        int q;
        if (cfg_.comm.kind == CommMode::Kind::Replay) {
            q = cfg_.comm.schedule.epochs[p][ev.aux].second;
            long long next = ev.aux + 1;
            if (next < static_cast<long long>(cfg_.comm.schedule.epochs[p].size()))
                queue_.push({cfg_.comm.schedule.epochs[p][next].first, 1, p, seq_++, next});
        } else {
            if (ev.aux != static_cast<long long>(gen_[p])) return false;
            const auto& adj = cfg_.graph.adjacency[p];
            q = adj[uniform_below(comm_rng_[p], adj.size())];
        }
        if (cfg_.record_epochs) realized_.epochs[p].push_back({ev.t, q});

        if (q != p) {
            int b = views_[p].first_missing_from(views_[q]);
            if (b >= 0) deliver(p, q, b, ev.t);
        }

        if (cfg_.comm.kind == CommMode::Kind::Stochastic) {
            if (cfg_.comm.dense || rare_[p] > 0) {
                gen_[p]++;
                queue_.push({ev.t + exponential(comm_rng_[p], cfg_.comm.rate), 1, p, seq_++,
                             static_cast<long long>(gen_[p])});
            } else {
                armed_[p] = 0;
            }
        }
        return true;
    }

    void deliver(int p, int q, int b, double t) {
        views_[q].add(b);
        sum_counts_++;
        if (cfg_.record_transfers) transfers_.push_back({t, p, q, b});
        if (++holders_[b] == n_) {
            for (int r = 0; r < n_; ++r)
                if (r != q) rare_[r]--;
            note_full(b, t);
        } else {
            rare_[q]++;
        }
        if (cfg_.comm.kind == CommMode::Kind::Stochastic && !cfg_.comm.dense && !armed_[q] &&
            rare_[q] > 0)
            arm(q, t);
        bool was_consistent = consistent_ == n_;
        if (views_[q].known_count() == dag_.size()) consistent_++;
        acc_.advance(t, consistent_, aoi_sum());
        if (!was_consistent && consistent_ == n_) handle_onset(t);
        if (cfg_.debug_checks) deep_consistency_check();
    }

    void note_full(int b, double t) {
        incomplete_--;
        last_full_diss_ = std::max(last_full_diss_, t);
        if (in_window_[b]) acc_.add_dissemination_sample(t - mint_time_[b]);
    }

    void handle_onset(double t) {
        onsets_++;
        onset_times_.push_back(t);
        if (!acc_started_ && cfg_.warmup_cycles > 0 && onsets_ == cfg_.warmup_cycles)
            begin_measurement(t);
        acc_.on_consistency_onset(t, dag_.max_depth());
        if (cfg_.on_consistency) cfg_.on_consistency({&dag_, &views_, t});
        if (cfg_.debug_checks &&
            (!all_maximal_paths_end_at_genesis(dag_) || dag_.max_in_degree() > n_ * 2))
            throw std::logic_error("DAG invariant violated at consistency");
    }

    void begin_measurement(double t) {
        acc_started_ = true;
        acc_.begin(t, n_, consistent_, aoi_sum(), consistent_ == n_);
    }

    long long aoi_sum() const {
        return static_cast<long long>(n_) * dag_.size() - sum_counts_;
    }

    bool stop_satisfied(double now) {
        (void)now;
        switch (cfg_.stop.kind) {
            case StopRule::Kind::Cycles:
                return onsets_ >= cfg_.warmup_cycles + static_cast<long long>(cfg_.stop.value);
            case StopRule::Kind::Blocks:
                return minted_ >= static_cast<long long>(cfg_.stop.value);
            case StopRule::Kind::SimTime:
                return false;  // handled at the queue peek
            case StopRule::Kind::AllDisseminated:
                return incomplete_ == 0 && pending_arrivals_ == 0;
        }
        return false;
    }

    void emit_csv(double t) {
        if (!cfg_.timeseries_csv) return;
        (*cfg_.timeseries_csv) << t << "," << consistent_ << "," << dag_.size() << ","
                               << aoi_sum() << "\n";
    }

    // the cardinality shortcut must agree with true set equality
    void deep_consistency_check() const {
        int full = 0;
        for (const PeerView& v : views_) {
            bool all = true;
            for (int b = 0; b < dag_.size(); ++b)
                if (!v.contains(b)) {
                    all = false;
                    break;
                }
            if (all != (v.known_count() == dag_.size()))
                throw std::logic_error("consistency cardinality shortcut violated");
            if (all) full++;
        }
        if (full != consistent_)
            throw std::logic_error("consistent-peer count out of sync");
    }

    nlohmann::json config_echo() const {
        nlohmann::json arrivals;
        switch (cfg_.arrivals.kind) {
            case ArrivalSource::Kind::Poisson:
                arrivals = {{"kind", "poisson"}, {"rate", cfg_.arrivals.rate}};
                break;
            case ArrivalSource::Kind::Deterministic:
                arrivals = {{"kind", "deterministic"}, {"count", cfg_.arrivals.arrivals.size()}};
                break;
            case ArrivalSource::Kind::Trace:
                arrivals = {{"kind", "trace"}, {"count", cfg_.arrivals.trace_times.size()}};
                break;
        }
        nlohmann::json comm;
        if (cfg_.comm.kind == CommMode::Kind::Stochastic)
            comm = {{"mode", cfg_.comm.dense ? "stochastic_dense" : "stochastic"},
                    {"rate", cfg_.comm.rate}};
        else
            comm = {{"mode", "replay"}};
        static const char* stop_names[] = {"cycles", "blocks", "sim_time", "all_disseminated"};
        return nlohmann::json{
            {"peer_count", n_},
            {"topology", cfg_.graph.family_tag},
            {"policy", policy_name(cfg_.policy)},
            {"arrivals", arrivals},
            {"comm", comm},
            {"stop", {{"kind", stop_names[static_cast<int>(cfg_.stop.kind)]},
                      {"value", cfg_.stop.value}}},
            {"warmup_cycles", cfg_.warmup_cycles},
            {"seed", cfg_.master_seed},
        };
    }

    const SimConfig& cfg_;
    int n_;
    BlockDag dag_;
    std::vector<PeerView> views_;
    std::vector<int> holders_;
    std::vector<double> mint_time_;
    std::vector<char> in_window_;
    std::vector<int> rare_;
    std::vector<char> armed_;
    std::vector<uint64_t> gen_;
    std::vector<Rng> comm_rng_;
    Rng arrival_rng_, peer_rng_;
    std::priority_queue<Ev, std::vector<Ev>, EvGreater> queue_;
    long long seq_ = 0;
    long long sum_counts_ = 0;
    int consistent_ = 0;
    long long incomplete_ = 0;       // minted blocks not yet held by everyone
    long long pending_arrivals_ = 0; // finite sources only
    long long minted_ = 0;
    long long onsets_ = 0;
    long long events_ = 0;
    double last_full_diss_ = -1.0;
    bool acc_started_ = false;
    MetricsAccumulator acc_;
    std::vector<TransferRecord> transfers_;
    ReplaySchedule realized_;
    std::vector<double> onset_times_;
};

}  // namespace

SimResult run_simulation(const SimConfig& config) {
    Engine engine(config);
    return engine.run();
}

std::vector<double> simulate_single_block_spread(const PeerGraph& graph, double rate,
                                                 int replications, uint64_t seed) {
    std::vector<double> out;
    out.reserve(replications);
    for (int r = 0; r < replications; ++r) {
        SimConfig cfg;
        cfg.graph = graph;
        cfg.policy = Policy::Tree;
        cfg.arrivals.kind = ArrivalSource::Kind::Deterministic;
        cfg.arrivals.arrivals = {{0.0, -1}};
        cfg.comm.kind = CommMode::Kind::Stochastic;
        cfg.comm.rate = rate;
        cfg.stop.kind = StopRule::Kind::AllDisseminated;
        cfg.master_seed = derive_seed(seed, "spread", static_cast<uint64_t>(r));
        SimResult res = run_simulation(cfg);
        out.push_back(std::max(0.0, res.last_full_dissemination));
    }
    return out;
}

double dissemination_completion_time(const PeerGraph& graph, const CommMode& comm,
                                     const std::vector<std::pair<double, int>>& arrivals,
                                     uint64_t seed) {
    if (arrivals.empty()) return 0.0;
    SimConfig cfg;
    cfg.graph = graph;
    cfg.policy = Policy::Tree;
    cfg.arrivals.kind = ArrivalSource::Kind::Deterministic;
    cfg.arrivals.arrivals = arrivals;
    cfg.comm = comm;
    cfg.stop.kind = StopRule::Kind::AllDisseminated;
    cfg.master_seed = seed;
    SimResult res = run_simulation(cfg);
    return std::max(0.0, res.last_full_dissemination);
}

double clearing_time(const PeerGraph& graph, const CommMode& comm,
                     const std::vector<int>& batch_peers, uint64_t seed) {
    std::vector<std::pair<double, int>> arrivals;
    arrivals.reserve(batch_peers.size());
    for (int p : batch_peers) arrivals.push_back({0.0, p});
    return dissemination_completion_time(graph, comm, arrivals, seed);
}

}  // namespace blocksim

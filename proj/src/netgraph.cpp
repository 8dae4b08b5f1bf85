#include "blocksim/netgraph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "blocksim/rng.hpp"

namespace blocksim {

void PeerGraph::finalize() {
    degree.assign(peer_count, 0);
    adjacency.assign(peer_count, {});
    for (auto& [u, v] : links) {
        if (u > v) std::swap(u, v);
        degree[u]++;
        degree[v]++;
        adjacency[u].push_back(v);
        adjacency[v].push_back(u);  // self-loop: peer listed twice
    }
    // BFS reachability from peer 0
    std::vector<char> seen(peer_count, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adjacency[u])
            if (!seen[v]) {
                seen[v] = 1;
                reached++;
                q.push(v);
            }
    }
    connected = (reached == peer_count);
}

bool PeerGraph::is_simple() const {
    std::set<std::pair<int, int>> seen;
    for (auto& [u, v] : links) {
        if (u == v) return false;
        if (!seen.insert({u, v}).second) return false;
    }
    return true;
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

PeerGraph make_graph(int n, std::vector<std::pair<int, int>> links, std::string tag, int requested) {
    PeerGraph g;
    g.peer_count = n;
    g.links = std::move(links);
    g.family_tag = std::move(tag);
    g.requested_peer_count = requested;
    g.finalize();
    return g;
}

// Keep only the largest connected component, relabeling peers 0..m-1 in
// increasing original id. Ties between equal-size components go to the one
// containing the smallest id.
PeerGraph largest_component(const PeerGraph& g, const std::string& tag) {
    std::vector<int> comp(g.peer_count, -1);
    int ncomp = 0;
    for (int s = 0; s < g.peer_count; ++s) {
        if (comp[s] >= 0) continue;
        std::queue<int> q;
        q.push(s);
        comp[s] = ncomp;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : g.adjacency[u])
                if (comp[v] < 0) {
                    comp[v] = ncomp;
                    q.push(v);
                }
        }
        ncomp++;
    }
    std::vector<int> size(ncomp, 0);
    for (int c : comp) size[c]++;
    int best = 0;
    for (int c = 1; c < ncomp; ++c)
        if (size[c] > size[best]) best = c;

    std::vector<int> remap(g.peer_count, -1);
    int m = 0;
    for (int u = 0; u < g.peer_count; ++u)
        if (comp[u] == best) remap[u] = m++;
    std::vector<std::pair<int, int>> links;
    for (auto [u, v] : g.links)
        if (comp[u] == best && comp[v] == best) links.emplace_back(remap[u], remap[v]);
    return make_graph(m, std::move(links), tag + " lcc=" + std::to_string(m), g.requested_peer_count);
}

PeerGraph gen_complete(int n) {
    require(n >= 2, "complete: n must be >= 2");
    std::vector<std::pair<int, int>> links;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) links.emplace_back(u, v);
    return make_graph(n, std::move(links), "complete(" + std::to_string(n) + ")", n);
}

PeerGraph gen_star(int n) {
    require(n >= 2, "star: n must be >= 2");
    std::vector<std::pair<int, int>> links;
    for (int v = 1; v < n; ++v) links.emplace_back(0, v);
    return make_graph(n, std::move(links), "star(" + std::to_string(n) + ")", n);
}

PeerGraph gen_torus(int n, int dim, int k) {
    require(n >= 2, "torus: n must be >= 2");
    require(dim >= 1, "torus: dim must be >= 1");
    require(k >= 1, "torus: k must be >= 1");
    int side = static_cast<int>(std::floor(std::pow(static_cast<double>(n), 1.0 / dim) + 1e-9));
    require(side >= 2, "torus: side length floor(n^(1/dim)) must be >= 2");
    int count = 1;
    for (int i = 0; i < dim; ++i) count *= side;

    auto coords = [&](int idx) {
        std::vector<int> c(dim);
        for (int i = 0; i < dim; ++i) {
            c[i] = idx % side;
            idx /= side;
        }
        return c;
    };
    auto cyc = [&](int a, int b) {
        int d = std::abs(a - b);
        return std::min(d, side - d);
    };
    std::set<std::pair<int, int>> links;
    for (int u = 0; u < count; ++u) {
        auto cu = coords(u);
        for (int v = u + 1; v < count; ++v) {
            auto cv = coords(v);
            int dist = 0;
            for (int i = 0; i < dim; ++i) dist += cyc(cu[i], cv[i]);
            if (dist <= k) links.insert({u, v});
        }
    }
    std::ostringstream tag;
    tag << "torus(n=" << count << ",dim=" << dim << ",k=" << k << ")";
    return make_graph(count, {links.begin(), links.end()}, tag.str(), n);
}

PeerGraph gen_btree(int b, int k) {
    require(b >= 2, "btree: branching b must be >= 2");
    require(k >= 1, "btree: depth k must be >= 1");
    // nodes indexed level-order; node i has children b*i+1 .. b*i+b
    long long count = 0, layer = 1;
    for (int i = 0; i <= k; ++i) {
        count += layer;
        layer *= b;
    }
    require(count <= 5'000'000, "btree: too many vertices");
    int n = static_cast<int>(count);
    std::vector<std::pair<int, int>> links;
    for (int i = 0; i < n; ++i)
        for (int c = 1; c <= b; ++c) {
            long long child = static_cast<long long>(i) * b + c;
            if (child < n) links.emplace_back(i, static_cast<int>(child));
        }
    std::ostringstream tag;
    tag << "btree(b=" << b << ",k=" << k << ")";
    return make_graph(n, std::move(links), tag.str(), n);
}

PeerGraph gen_erdos_renyi(int n, double p, uint64_t seed) {
    require(n >= 2, "erdos_renyi: n must be >= 2");
    require(p > 0.0 && p <= 1.0, "erdos_renyi: p must be in (0, 1]");
    Rng rng = make_rng(seed, "erdos_renyi");
    std::vector<std::pair<int, int>> links;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (uniform_real(rng) < p) links.emplace_back(u, v);
    std::ostringstream tag;
    tag << "erdos_renyi(n=" << n << ",p=" << p << ")";
    PeerGraph full = make_graph(n, std::move(links), tag.str(), n);
    if (full.connected) return full;
    return largest_component(full, tag.str());
}

PeerGraph gen_random_regular(int n, int d, uint64_t seed) {
    require(n >= 2, "random_regular: n must be >= 2");
    require(d >= 1 && d < n, "random_regular: need 1 <= d < n");
    require((static_cast<long long>(n) * d) % 2 == 0, "random_regular: d*n must be even");

    for (uint64_t attempt = 0;; ++attempt) {
        Rng rng = make_rng(seed, "random_regular", attempt);
        // pairing model on n*d stubs, then repair self-loops and parallel
        // links by random edge swaps
        std::vector<int> stubs;
        stubs.reserve(static_cast<size_t>(n) * d);
        for (int u = 0; u < n; ++u)
            for (int i = 0; i < d; ++i) stubs.push_back(u);
        std::shuffle(stubs.begin(), stubs.end(), rng);

        std::vector<std::pair<int, int>> edges;
        edges.reserve(stubs.size() / 2);
        for (size_t i = 0; i + 1 < stubs.size(); i += 2) {
            int u = stubs[i], v = stubs[i + 1];
            edges.emplace_back(std::min(u, v), std::max(u, v));
        }
        auto count_multi = [&] {
            std::map<std::pair<int, int>, int> mult;
            for (auto& e : edges) mult[e]++;
            return mult;
        };
        bool ok = true;
        for (int repair = 0; repair < 200 * n * d; ++repair) {
            auto mult = count_multi();
            int bad = -1;
            for (size_t i = 0; i < edges.size(); ++i)
                if (edges[i].first == edges[i].second || mult[edges[i]] > 1) {
                    bad = static_cast<int>(i);
                    break;
                }
            if (bad < 0) break;
            size_t other = uniform_below(rng, edges.size());
            if (other == static_cast<size_t>(bad)) continue;
            auto [a, bp] = edges[bad];
            auto [c, e] = edges[other];
            edges[bad] = {std::min(a, c), std::max(a, c)};
            edges[other] = {std::min(bp, e), std::max(bp, e)};
        }
        {
            auto mult = count_multi();
            for (auto& ed : edges)
                if (ed.first == ed.second || mult[ed] > 1) {
                    ok = false;
                    break;
                }
        }
        if (!ok) continue;
        std::ostringstream tag;
        tag << "random_regular(n=" << n << ",d=" << d << ")";
        PeerGraph g = make_graph(n, std::move(edges), tag.str(), n);
        if (g.connected) return g;
        if (attempt > 64) throw std::runtime_error("random_regular: failed to generate a connected graph");
    }
}

PeerGraph gen_pref_attach(int n, int d, uint64_t seed) {
    require(n >= 2, "pref_attach: n must be >= 2");
    require(d >= 2, "pref_attach: d must be >= 2");
    Rng rng = make_rng(seed, "pref_attach");
    // grow a tree on d*n vertices (vertex 0 starts with a self-loop), each
    // new vertex attaching proportionally to degree, then collapse runs of d
    // consecutive tree vertices into one peer, keeping multiplicity
    long long total = static_cast<long long>(n) * d;
    std::vector<int> endpoints{0, 0};
    std::vector<std::pair<int, int>> tree_edges{{0, 0}};
    for (long long j = 1; j < total; ++j) {
        int target = endpoints[uniform_below(rng, endpoints.size())];
        tree_edges.emplace_back(static_cast<int>(j), target);
        endpoints.push_back(static_cast<int>(j));
        endpoints.push_back(target);
    }
    std::vector<std::pair<int, int>> links;
    links.reserve(tree_edges.size());
    for (auto [u, v] : tree_edges) {
        int su = u / d, sv = v / d;
        links.emplace_back(std::min(su, sv), std::max(su, sv));
    }
    std::ostringstream tag;
    tag << "pref_attach(n=" << n << ",d=" << d << ")";
    return make_graph(n, std::move(links), tag.str(), n);
}

PeerGraph gen_geometric(int n, double c, uint64_t seed) {
    require(n >= 2, "geometric: n must be >= 2");
    require(c > 0.0, "geometric: c must be > 0");
    Rng rng = make_rng(seed, "geometric");
    double r = c * std::sqrt(std::log(static_cast<double>(n)) / n);
    std::vector<std::pair<double, double>> pts(n);
    for (auto& p : pts) {
        p.first = uniform_real(rng);
        p.second = uniform_real(rng);
    }
    std::vector<std::pair<int, int>> links;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
            double dx = pts[u].first - pts[v].first;
            double dy = pts[u].second - pts[v].second;
            if (dx * dx + dy * dy < r * r) links.emplace_back(u, v);
        }
    std::ostringstream tag;
    tag << "geometric(n=" << n << ",c=" << c << ")";
    PeerGraph full = make_graph(n, std::move(links), tag.str(), n);
    if (full.connected) return full;
    return largest_component(full, tag.str());
}

void validate_cut(const PeerGraph& graph, const Cut& cut) {
    if (cut.members.empty() || static_cast<int>(cut.members.size()) >= graph.peer_count)
        throw std::invalid_argument("cut: member set must be a nonempty proper subset");
    for (int m : cut.members)
        if (m < 0 || m >= graph.peer_count)
            throw std::invalid_argument("cut: member out of range");
}

double cut_conductance_mask(const PeerGraph& graph, uint32_t mask) {
    double num = 0.0;
    int in_s = static_cast<int>(std::popcount(mask));
    for (auto [u, v] : graph.links) {
        if (u == v) continue;
        bool su = (mask >> u) & 1u, sv = (mask >> v) & 1u;
        if (su == sv) continue;
        int p = su ? u : v;  // the S-side endpoint
        num += 1.0 / graph.degree[p];
    }
    int n = graph.peer_count;
    double denom = static_cast<double>(in_s) * (n - in_s) / n;
    return num / denom;
}

}  // namespace

PeerGraph generate(const TopologySpec& spec, uint64_t seed) {
    if (spec.family == "complete") return gen_complete(spec.n);
    if (spec.family == "star") return gen_star(spec.n);
    if (spec.family == "torus") return gen_torus(spec.n, spec.dim, spec.k);
    if (spec.family == "btree") return gen_btree(spec.b, spec.k);
    if (spec.family == "erdos_renyi") return gen_erdos_renyi(spec.n, spec.p, seed);
    if (spec.family == "random_regular") return gen_random_regular(spec.n, spec.d, seed);
    if (spec.family == "pref_attach") return gen_pref_attach(spec.n, spec.d, seed);
    if (spec.family == "geometric") return gen_geometric(spec.n, spec.c, seed);
    throw std::invalid_argument("unknown topology family: " + spec.family);
}

double cut_conductance(const PeerGraph& graph, const Cut& cut) {
    validate_cut(graph, cut);
    std::vector<char> in_s(graph.peer_count, 0);
    for (int m : cut.members) in_s[m] = 1;
    double num = 0.0;
    for (auto [u, v] : graph.links) {
        if (u == v) continue;
        if (in_s[u] == in_s[v]) continue;
        int p = in_s[u] ? u : v;
        num += 1.0 / graph.degree[p];
    }
    int n = graph.peer_count;
    double denom = static_cast<double>(cut.members.size()) * (n - cut.members.size()) / n;
    return num / denom;
}

std::pair<double, Cut> graph_conductance_exact(const PeerGraph& graph) {
    int n = graph.peer_count;
    if (n > 20)
        throw std::invalid_argument(
            "graph_conductance_exact: N > 20; use heuristic cut families (stability_bounds "
            "in heuristic mode)");
    uint32_t best_mask = 1;
    double best = cut_conductance_mask(graph, 1);
    uint32_t limit = (1u << n) - 1;
    for (uint32_t mask = 2; mask < limit; ++mask) {
        double phi = cut_conductance_mask(graph, mask);
        if (phi < best - 1e-15) {
            best = phi;
            best_mask = mask;
        }
        // lexicographic tie-break: smallest member set first. Masks with a
        // lower-indexed first member have a lower value of the reversed bit
        // pattern; comparing sorted member vectors directly is simplest.
        else if (std::abs(phi - best) <= 1e-15) {
            auto members = [n](uint32_t m) {
                std::vector<int> out;
                for (int i = 0; i < n; ++i)
                    if ((m >> i) & 1u) out.push_back(i);
                return out;
            };
            if (members(mask) < members(best_mask)) best_mask = mask;
        }
    }
    Cut cut;
    for (int i = 0; i < n; ++i)
        if ((best_mask >> i) & 1u) cut.members.push_back(i);
    return {best, cut};
}

namespace {

// Cuts evaluated in heuristic mode: singletons on both sides, degree-sorted
// sweep prefixes, and a subtree cut when the tag marks a btree.
std::vector<Cut> heuristic_cuts(const PeerGraph& graph) {
    int n = graph.peer_count;
    std::vector<Cut> cuts;
    for (int v = 0; v < n; ++v) {
        cuts.push_back(Cut{{v}});
        Cut complement;
        for (int u = 0; u < n; ++u)
            if (u != v) complement.members.push_back(u);
        cuts.push_back(std::move(complement));
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return graph.degree[a] < graph.degree[b]; });
    Cut sweep;
    for (int i = 0; i + 1 < n; ++i) {
        sweep.members.push_back(order[i]);
        Cut c = sweep;
        std::sort(c.members.begin(), c.members.end());
        cuts.push_back(std::move(c));
    }
    if (graph.family_tag.rfind("btree", 0) == 0) {
        // subtree cuts: complement = each child subtree of the root
        int b = 0;
        for (int v : graph.adjacency[0])
            if (v != 0) b++;
        for (int child = 1; child <= b && child < n; ++child) {
            std::vector<char> in_sub(n, 0);
            std::queue<int> q;
            q.push(child);
            in_sub[child] = 1;
            while (!q.empty()) {
                int u = q.front();
                q.pop();
                for (int v : graph.adjacency[u])
                    if (v > u && !in_sub[v]) {
                        in_sub[v] = 1;
                        q.push(v);
                    }
            }
            Cut c;
            for (int u = 0; u < n; ++u)
                if (!in_sub[u]) c.members.push_back(u);
            cuts.push_back(std::move(c));
        }
    }
    if (graph.family_tag.rfind("torus", 0) == 0) {
        Cut half;
        for (int u = 0; u < n / 2; ++u) half.members.push_back(u);
        cuts.push_back(std::move(half));
    }
    return cuts;
}

}  // namespace

StabilityBounds stability_bounds(const PeerGraph& graph, double bandwidth, bool exact) {
    if (!graph.connected) throw std::invalid_argument("stability_bounds: graph must be connected");
    if (bandwidth <= 0.0) throw std::invalid_argument("stability_bounds: bandwidth must be > 0");
    int n = graph.peer_count;
    StabilityBounds out;
    out.bandwidth = bandwidth;
    out.exact = exact;
    if (exact) {
        auto [phi, phi_cut] = graph_conductance_exact(graph);
        out.conductance = phi;
        double best = 0.0;
        Cut best_cut;
        bool first = true;
        uint32_t limit = (1u << n) - 1;
        for (uint32_t mask = 1; mask < limit; ++mask) {
            int comp = n - std::popcount(mask);
            double v = comp * cut_conductance_mask(graph, mask);
            if (first || v < best) {
                first = false;
                best = v;
                best_cut.members.clear();
                for (int i = 0; i < n; ++i)
                    if ((mask >> i) & 1u) best_cut.members.push_back(i);
            }
        }
        out.upper = bandwidth * best;
        out.argmin_cut = best_cut;
    } else {
        double phi = std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        Cut best_cut;
        for (const Cut& cut : heuristic_cuts(graph)) {
            double c = cut_conductance(graph, cut);
            phi = std::min(phi, c);
            double v = (n - cut.members.size()) * c;
            if (v < best) {
                best = v;
                best_cut = cut;
            }
        }
        out.conductance = phi;
        out.upper = bandwidth * best;
        out.argmin_cut = best_cut;
    }
    out.lower = bandwidth * out.conductance / (2.0 * std::log(static_cast<double>(n)));
    return out;
}

std::pair<double, double> per_peer_rate_cap(int peer_count) {
    if (peer_count < 2) throw std::invalid_argument("per_peer_rate_cap: N must be >= 2");
    double n = peer_count;
    return {n / (n - 1.0), 1.0 / (n - 1.0)};
}

double tree_cut_conductance(int branching, int depth) {
    if (branching < 2) throw std::invalid_argument("tree_cut_conductance: b must be >= 2");
    if (depth < 1) throw std::invalid_argument("tree_cut_conductance: k must be >= 1");
    // S = root plus all but one child subtree; one link crosses, charged at
    // the root's degree b
    double subtree = 0.0, layer = 1.0;
    for (int i = 0; i < depth; ++i) {
        subtree += layer;
        layer *= branching;
    }
    double n = subtree + layer;  // total vertices, depth k
    double m = subtree;          // one child subtree (depth k-1)
    double num = 1.0 / branching;
    double denom = (n - m) * m / n;
    return num / denom;
}

Cut tree_root_side_cut(int branching, int depth) {
    PeerGraph g = gen_btree(branching, depth);
    // complement = subtree rooted at the last child of the root
    std::vector<char> in_sub(g.peer_count, 0);
    std::queue<int> q;
    q.push(branching);
    in_sub[branching] = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : g.adjacency[u])
            if (v > u && !in_sub[v]) {
                in_sub[v] = 1;
                q.push(v);
            }
    }
    Cut c;
    for (int u = 0; u < g.peer_count; ++u)
        if (!in_sub[u]) c.members.push_back(u);
    return c;
}

std::string export_edge_list(const PeerGraph& graph) {
    std::ostringstream out;
    out << "N " << graph.peer_count << "\n";
    for (auto [u, v] : graph.links) out << u << " " << v << "\n";
    return out.str();
}

PeerGraph import_edge_list(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    int n = 0;
    if (!(in >> header >> n) || header != "N" || n < 2)
        throw std::invalid_argument("edge list: expected header 'N <count>' with count >= 2");
    PeerGraph g;
    g.peer_count = n;
    g.requested_peer_count = n;
    g.family_tag = "imported";
    int u, v;
    while (in >> u >> v) {
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw std::invalid_argument("edge list: peer id out of range");
        g.links.emplace_back(std::min(u, v), std::max(u, v));
    }
    g.finalize();
    return g;
}

}  // namespace blocksim

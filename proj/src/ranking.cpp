#include "matchcert/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "matchcert/util.hpp"

namespace matchcert {

void MatchInstance::validate() const {
    if (num_online < 0) throw std::invalid_argument("instance: negative online count");
    for (double w : weights)
        if (!(w >= 0.0)) throw std::invalid_argument("instance: weights must be nonnegative");
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
        if (u < 0 || u >= num_online || v < 0 || v >= num_offline())
            throw std::invalid_argument("instance: edge endpoint out of range");
        if (!seen.insert({u, v}).second)
            throw std::invalid_argument("instance: duplicate edge");
    }
}

void write_instance(const MatchInstance& inst, std::ostream& out) {
    out << inst.num_online << " " << inst.num_offline() << "\n";
    for (int v = 0; v < inst.num_offline(); ++v)
        out << (v ? " " : "") << fmt17(inst.weights[v]);
    out << "\n";
    for (auto [u, v] : inst.edges) out << u << " " << v << "\n";
}

MatchInstance read_instance(std::istream& in) {
    MatchInstance inst;
    int nv = 0;
    if (!(in >> inst.num_online >> nv) || inst.num_online < 0 || nv < 0)
        throw ParseError("instance: bad header line");
    inst.weights.resize(nv);
    for (int v = 0; v < nv; ++v)
        if (!(in >> inst.weights[v])) throw ParseError("instance: truncated weight list");
    int u, v;
    while (in >> u >> v) inst.edges.emplace_back(u, v);
    inst.validate();
    return inst;
}

MatchInstance read_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_instance(in);
}

RankingRun run_ranking_with_draws(const MatchInstance& inst, const RankFn& g,
                                  const std::vector<double>& y_offline,
                                  const std::vector<double>& y_online) {
    const int nu = inst.num_online, nv = inst.num_offline();
    if (static_cast<int>(y_offline.size()) != nv || static_cast<int>(y_online.size()) != nu)
        throw std::invalid_argument("run_ranking: draw vectors do not match the instance");
    std::vector<std::vector<int>> adj(nu);
    for (auto [u, v] : inst.edges) adj[u].push_back(v);
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());

    RankingRun run;
    run.y_offline = y_offline;
    run.y_online = y_online;
    run.match_of_online.assign(nu, -1);
    run.match_of_offline.assign(nv, -1);
    run.alpha_online.assign(nu, 0.0);
    run.alpha_offline.assign(nv, 0.0);

    std::vector<int> order(nu);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return y_online[a] < y_online[b]; });

    for (int u : order) {
        int best = -1;
        double best_util = 0.0;
        for (int v : adj[u]) {
            if (run.match_of_offline[v] >= 0) continue;
            double util = inst.weights[v] * (1.0 - g(y_offline[v], y_online[u]));
            if (best < 0 || util > best_util) {  // ties keep the smaller id
                best = v;
                best_util = util;
            }
        }
        if (best < 0) continue;
        run.match_of_online[u] = best;
        run.match_of_offline[best] = u;
        // the offline side keeps the g share, the online side the utility
        // it maximized; the pair telescopes to w exactly
        double av = inst.weights[best] * g(y_offline[best], y_online[u]);
        run.alpha_offline[best] = av;
        run.alpha_online[u] = inst.weights[best] - av;
        run.matched_weight += inst.weights[best];
    }
    return run;
}

RankingRun run_ranking(const MatchInstance& inst, const RankFn& g, std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed));
    std::vector<double> yv(inst.num_offline()), yu(inst.num_online);
    for (auto& y : yv) y = uniform01(rng);
    for (auto& y : yu) y = uniform01(rng);
    return run_ranking_with_draws(inst, g, yv, yu);
}

namespace {

// augmenting path search over the current matching, offline side v
bool augment(int v, const std::vector<std::vector<int>>& adj_v,
             const std::vector<std::vector<int>>& adj_u, std::vector<int>& match_u,
             std::vector<int>& match_v, std::vector<bool>& visited_u) {
    for (int u : adj_v[v]) {
        if (visited_u[u]) continue;
        visited_u[u] = true;
        if (match_u[u] < 0 || augment(match_u[u], adj_v, adj_u, match_u, match_v, visited_u)) {
            match_u[u] = v;
            match_v[v] = u;
            return true;
        }
    }
    return false;
}

}  // namespace

double offline_optimum(const MatchInstance& inst) {
    const int nu = inst.num_online, nv = inst.num_offline();
    std::vector<std::vector<int>> adj_v(nv), adj_u(nu);
    for (auto [u, v] : inst.edges) {
        adj_v[v].push_back(u);
        adj_u[u].push_back(v);
    }
    std::vector<int> order(nv);
    std::iota(order.begin(), order.end(), 0);
    // heaviest offline vertices first; id breaks ties so runs are stable
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return inst.weights[a] != inst.weights[b] ? inst.weights[a] > inst.weights[b] : a < b;
    });
    std::vector<int> match_u(nu, -1), match_v(nv, -1);
    double total = 0.0;
    for (int v : order) {
        if (inst.weights[v] == 0.0) break;
        std::vector<bool> visited(nu, false);
        if (augment(v, adj_v, adj_u, match_u, match_v, visited)) total += inst.weights[v];
    }
    return total;
}

double offline_optimum_bruteforce(const MatchInstance& inst) {
    if (inst.num_online > 8 || inst.num_offline() > 8)
        throw std::invalid_argument("bruteforce oracle: instance too large");
    std::vector<std::vector<int>> adj(inst.num_online);
    for (auto [u, v] : inst.edges) adj[u].push_back(v);
    double best = 0.0;
    // depth-first over all matchings
    std::vector<bool> used(inst.num_offline(), false);
    std::function<void(int, double)> rec = [&](int u, double acc) {
        if (u == inst.num_online) {
            best = std::max(best, acc);
            return;
        }
        rec(u + 1, acc);  // leave u unmatched
        for (int v : adj[u]) {
            if (used[v]) continue;
            used[v] = true;
            rec(u + 1, acc + inst.weights[v]);
            used[v] = false;
        }
    };
    rec(0, 0.0);
    return best;
}

RatioEstimate estimate_ratio(const InstanceGenerator& gen, const RankFn& g, int trials,
                             std::uint64_t seed, unsigned workers) {
    if (trials < 1) throw std::invalid_argument("estimate_ratio: trials must be positive");
    if (workers == 0) workers = default_workers();
    std::vector<double> ratios(trials, -1.0);  // -1: skipped
    parallel_chunks(trials, workers, workers * 4, [&](std::size_t lo, std::size_t hi, unsigned) {
        for (std::size_t trial = lo; trial < hi; ++trial) {
            std::mt19937_64 rng(derive_stream_seed(seed, trial));
            MatchInstance inst = gen(rng);
            double opt = offline_optimum(inst);
            if (opt <= 0.0) continue;
            std::vector<double> yv(inst.num_offline()), yu(inst.num_online);
            for (auto& y : yv) y = uniform01(rng);
            for (auto& y : yu) y = uniform01(rng);
            RankingRun run = run_ranking_with_draws(inst, g, yv, yu);
            ratios[trial] = run.matched_weight / opt;
        }
    });
    RatioEstimate est;
    est.trials = trials;
    double sum = 0.0, sumsq = 0.0;
    int kept = 0;
    double mn = std::numeric_limits<double>::infinity();
    for (double r : ratios) {
        if (r < 0.0) {
            ++est.skipped;
            continue;
        }
        ++kept;
        sum += r;
        sumsq += r * r;
        mn = std::min(mn, r);
    }
    if (kept > 0) {
        est.mean_ratio = sum / kept;
        est.min_ratio = mn;
        if (kept > 1) {
            double var = std::max(0.0, (sumsq - sum * sum / kept) / (kept - 1));
            est.stderr_ratio = std::sqrt(var / kept);
        }
    }
    return est;
}

DualCoverageReport dual_coverage_check(const MatchInstance& inst, const RankFn& g, int trials,
                                       double beta, std::uint64_t seed) {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("dual_coverage_check: beta must lie in [0,1]");
    if (trials < 1) throw std::invalid_argument("dual_coverage_check: trials must be positive");
    const std::size_t ne = inst.edges.size();
    std::vector<double> sum(ne, 0.0), sumsq(ne, 0.0);
    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng(derive_stream_seed(seed, trial));
        std::vector<double> yv(inst.num_offline()), yu(inst.num_online);
        for (auto& y : yv) y = uniform01(rng);
        for (auto& y : yu) y = uniform01(rng);
        RankingRun run = run_ranking_with_draws(inst, g, yv, yu);
        for (std::size_t e = 0; e < ne; ++e) {
            auto [u, v] = inst.edges[e];
            double w = inst.weights[v];
            double val = w > 0.0 ? (run.alpha_online[u] + run.alpha_offline[v]) / w : 1.0;
            sum[e] += val;
            sumsq[e] += val * val;
        }
    }
    DualCoverageReport rep;
    rep.trials = trials;
    rep.beta = beta;
    for (std::size_t e = 0; e < ne; ++e) {
        EdgeCoverage ec;
        ec.u = inst.edges[e].first;
        ec.v = inst.edges[e].second;
        ec.mean = sum[e] / trials;
        if (trials > 1) {
            double var = std::max(0.0, (sumsq[e] - sum[e] * sum[e] / trials) / (trials - 1));
            ec.stderr_ = std::sqrt(var / trials);
        }
        ec.flagged = ec.mean < beta - 3.0 * ec.stderr_;
        if (ec.flagged) ++rep.flagged_count;
        rep.edges.push_back(ec);
    }
    return rep;
}

MatchInstance make_upper_triangular(int size) {
    MatchInstance inst;
    inst.num_online = size;
    inst.weights.assign(size, 1.0);
    for (int i = 0; i < size; ++i)
        for (int j = i; j < size; ++j) inst.edges.emplace_back(i, j);
    return inst;
}

MatchInstance make_star(int leaves, std::mt19937_64& rng) {
    MatchInstance inst;
    inst.num_online = 1;
    inst.weights.resize(leaves);
    for (auto& w : inst.weights) w = uniform01(rng);
    for (int v = 0; v < leaves; ++v) inst.edges.emplace_back(0, v);
    return inst;
}

MatchInstance make_erdos_renyi(int nu, int nv, double p, std::mt19937_64& rng,
                               bool uniform_weights) {
    MatchInstance inst;
    inst.num_online = nu;
    inst.weights.resize(nv);
    for (auto& w : inst.weights) w = uniform_weights ? uniform01(rng) : 1.0;
    for (int u = 0; u < nu; ++u)
        for (int v = 0; v < nv; ++v)
            if (uniform01(rng) < p) inst.edges.emplace_back(u, v);
    return inst;
}

}  // namespace matchcert

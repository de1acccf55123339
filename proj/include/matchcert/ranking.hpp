#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace matchcert {

// Bipartite instance: online vertices U arrive, offline vertices V carry
// nonnegative weights. Edges are (u, v) pairs, zero-indexed.
struct MatchInstance {
    int num_online = 0;
    std::vector<double> weights;  // one per offline vertex
    std::vector<std::pair<int, int>> edges;

    int num_offline() const { return static_cast<int>(weights.size()); }
    void validate() const;  // bounds, nonnegative weights, no duplicate edges
};

// Instance text format: line 1 "|U| |V|", line 2 the |V| weights, then one
// "u v" pair per line.
void write_instance(const MatchInstance& inst, std::ostream& out);
MatchInstance read_instance(std::istream& in);
MatchInstance read_instance_file(const std::string& path);

using RankFn = std::function<double(double, double)>;  // g(y_v, y_u)

// One randomized execution: arrival draws, the matching, and the dual
// assignment alpha_v = w_v g(y_v, y_u), alpha_u = w_v - alpha_v per matched
// edge (zero elsewhere), so alpha_u + alpha_v telescopes to w_v exactly.
// The online vertex keeps the utility w_v (1 - g) it maximized; the
// offline vertex keeps the g share.
struct RankingRun {
    std::vector<double> y_online;
    std::vector<double> y_offline;
    std::vector<int> match_of_online;   // offline id or -1
    std::vector<int> match_of_offline;  // online id or -1
    std::vector<double> alpha_online;
    std::vector<double> alpha_offline;
    double matched_weight = 0.0;
};

// Deterministic core: runs generalized RANKING on given draws. Online
// vertices are processed in nondecreasing y_u; each picks its unmatched
// neighbor maximizing w_v * (1 - g(y_v, y_u)), ties to the smallest offline
// id.
RankingRun run_ranking_with_draws(const MatchInstance& inst, const RankFn& g,
                                  const std::vector<double>& y_offline,
                                  const std::vector<double>& y_online);

// Draws y values uniformly from the seeded stream, then runs the core.
RankingRun run_ranking(const MatchInstance& inst, const RankFn& g, std::uint64_t seed);

// Exact maximum vertex-weighted matching value. Offline vertices are taken
// in decreasing weight order; each joins the matching when an augmenting
// path exists (greedy over a transversal matroid, hence optimal).
double offline_optimum(const MatchInstance& inst);

// Enumeration oracle for instances with at most 8+8 vertices.
double offline_optimum_bruteforce(const MatchInstance& inst);

struct RatioEstimate {
    int trials = 0;
    int skipped = 0;  // trials whose offline optimum was zero
    double mean_ratio = 0.0;
    double stderr_ratio = 0.0;
    double min_ratio = 0.0;
};

using InstanceGenerator = std::function<MatchInstance(std::mt19937_64&)>;

// Mean of matched_weight / optimum over seeded trials. Each trial draws its
// instance and its y values from an independent stream derived from
// (seed, trial), so results do not depend on scheduling.
RatioEstimate estimate_ratio(const InstanceGenerator& gen, const RankFn& g, int trials,
                             std::uint64_t seed, unsigned workers = 0);

struct EdgeCoverage {
    int u = 0, v = 0;
    double mean = 0.0;    // estimate of E[alpha_u + alpha_v] / w_v
    double stderr_ = 0.0;
    bool flagged = false;  // mean < beta - 3 stderr
};

struct DualCoverageReport {
    int trials = 0;
    double beta = 0.0;
    std::vector<EdgeCoverage> edges;
    int flagged_count = 0;
};

// Statistical check of the per-edge dual covering inequality
// E[alpha_u + alpha_v] >= beta w_v.
DualCoverageReport dual_coverage_check(const MatchInstance& inst, const RankFn& g, int trials,
                                       double beta, std::uint64_t seed = 1);

// Instance families used by the simulation suite.
MatchInstance make_upper_triangular(int size);                      // unit weights, v_j ~ u_i for j >= i
MatchInstance make_star(int leaves, std::mt19937_64& rng);          // one online hub, uniform weights
MatchInstance make_erdos_renyi(int nu, int nv, double p, std::mt19937_64& rng,
                               bool uniform_weights = true);

}  // namespace matchcert

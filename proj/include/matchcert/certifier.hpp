#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matchcert/grid.hpp"

namespace matchcert {

struct CertifierParams {
    int n = 0;  // sweep grid: F = {0, 1/n, ..., 1}^2
    int m = 0;  // inner discretization of fhat; must divide n
    unsigned workers = 0;  // 0: machine parallelism
    double numerical_margin = 1e-9;
    std::size_t memory_cap_bytes = 0;  // 0: default_memory_cap()

    void validate() const;
};

// MATCHCERT_MEM_CAP_BYTES or 4 GiB.
std::size_t default_memory_cap();

// Fine-grid values of the extended g at every (i/n, j/n), plus, when built
// with m > 0, prefix sums over x at stride n/m:
//   prefix[i][t] = sum_{k<i} value(k * n/m, t),  i = 0..m, t = 0..n,
// which give every Riemann sum in phat/qhat in O(1).
struct GTable {
    int n = 0;
    int m = 0;  // 0: no prefix block
    std::vector<double> values;  // (n+1)^2, x-major
    std::vector<double> prefix;  // (m+1) x (n+1), i-major

    double value(int i, int j) const { return values[static_cast<std::size_t>(i) * (n + 1) + j]; }
    double prefix_at(int i, int t) const {
        return prefix[static_cast<std::size_t>(i) * (n + 1) + t];
    }
};

std::size_t g_table_bytes(int n, int m);
GTable build_g_table(const PiecewiseAffineG& g, int n, int m = 0, unsigned workers = 0,
                     std::size_t memory_cap_bytes = 0);

// qhat(i, j, k): the discretized inner minimum at x-block i, y-block j,
// evaluated at y_k, stored for all (i,j,k) in {0..m}^3 together with the
// aggregated trapezoid sums
//   trap(i, j) = (1/m) sum_{k=0}^{j-1} (qhat(i,j,k) + qhat(i,j,k+1)) / 2.
struct QTable {
    int m = 0;
    std::vector<double> q;     // layout [j][k][i]
    std::vector<double> trap;  // layout [j][i]

    double at(int i, int j, int k) const {
        return q[(static_cast<std::size_t>(j) * (m + 1) + k) * (m + 1) + i];
    }
    double trap_at(int i, int j) const {
        return trap[static_cast<std::size_t>(j) * (m + 1) + i];
    }
};

std::size_t q_table_bytes(int m);
QTable build_q_table(const GTable& gt, int m, unsigned workers = 0,
                     std::size_t memory_cap_bytes = 0);

// One fhat evaluation split into its two parts (phat and the trapezoid sum)
// plus, per trapezoid node l = 0..j, the candidate index attaining the inner
// minimum (diagnostic).
struct FhatBreakdown {
    double p_term = 0.0;
    double trapezoid_term = 0.0;
    double value = 0.0;
    int i = 0, j = 0;  // m-grid block indices of (gamma, tau)
    std::vector<int> argmin_kappa;
};

// fhat(gamma, tau) = phat + trapezoid of qhat, with block indices
// x_i <= gamma < x_{i+1}, y_j <= tau < y_{j+1}; boundary clamps: gamma = 1
// uses i = m with candidates kappa <= m, tau = 1 uses j = m with
// y_{j+1} := 1. Requires a GTable built with matching m.
FhatBreakdown fhat(double gamma, double tau, const GTable& gt, const QTable& qt);

struct CertifiedBound {
    double min_fhat = 0.0;
    double argmin_gamma = 0.0, argmin_tau = 0.0;
    double discretization_error = 0.0;  // 2/n + 5/(4m)
    double numerical_margin = 0.0;
    double certified_ratio = 0.0;
    CertifierParams params;
    double wall_seconds = 0.0;
    bool slab_mode = false;  // QTable streamed in j-slabs instead of stored
    std::string to_manifest_block() const;  // key=value lines
};

// min over the n-grid of fhat, via table lookups and prefix sums. Work is
// split into contiguous gamma chunks; the result (value and argmin) does not
// depend on worker count or chunk order. Ties in the minimum resolve to the
// lexicographically smallest (gamma, tau). When the full QTable exceeds the
// memory cap the sweep streams per-j slabs; both paths produce bit-identical
// results. A nonempty checkpoint path makes completed gamma chunks resumable
// (full-table mode only).
CertifiedBound sweep(const PiecewiseAffineG& g, const CertifierParams& params,
                     const std::string& checkpoint_path = {});

struct LipschitzReport {
    int samples = 0;
    double delta = 0.0;
    int violations_gamma = 0;
    int violations_tau = 0;
    double worst_gamma_ratio = 0.0;  // |diff| / allowed bound
    double worst_tau_ratio = 0.0;
};

// Spot-checks |fhat(gamma+delta, tau) - fhat(gamma, tau)| <= delta + 5/(2m)
// and the tau analogue with bound 3*delta + 5/(2m), at `samples` seeded
// random points. Tables are built at n = m.
LipschitzReport lipschitz_spot_check(const PiecewiseAffineG& g, int samples, double delta, int m,
                                     std::uint64_t seed = 1);

// Worst-case trapezoid error L * intervals * step^2 / 4 for an L-Lipschitz
// integrand; attained by the unit tent.
double trapezoid_error_bound(double lipschitz, double step, std::int64_t intervals);

}  // namespace matchcert

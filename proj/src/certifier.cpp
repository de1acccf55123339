#include "matchcert/certifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>

#include "matchcert/util.hpp"

namespace matchcert {

void CertifierParams::validate() const {
    if (m < 2) throw std::invalid_argument("certifier: m must be at least 2");
    if (n < m) throw std::invalid_argument("certifier: n must be at least m");
    if (n % m != 0) throw std::invalid_argument("certifier: m must divide n");
    if (numerical_margin < 0.0)
        throw std::invalid_argument("certifier: numerical_margin must be nonnegative");
}

std::size_t default_memory_cap() {
    if (const char* env = std::getenv("MATCHCERT_MEM_CAP_BYTES"); env && *env) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return std::size_t{4} << 30;
}

std::size_t g_table_bytes(int n, int m) {
    std::size_t N = static_cast<std::size_t>(n) + 1;
    std::size_t bytes = N * N * sizeof(double);
    if (m > 0) bytes += (static_cast<std::size_t>(m) + 1) * N * sizeof(double);
    return bytes;
}

std::size_t q_table_bytes(int m) {
    std::size_t M = static_cast<std::size_t>(m) + 1;
    return M * M * M * sizeof(double) + M * M * sizeof(double);
}

GTable build_g_table(const PiecewiseAffineG& g, int n, int m, unsigned workers,
                     std::size_t memory_cap_bytes) {
    if (n < 2) throw std::invalid_argument("build_g_table: n must be at least 2");
    if (m > 0 && n % m != 0) throw std::invalid_argument("build_g_table: m must divide n");
    std::size_t cap = memory_cap_bytes ? memory_cap_bytes : default_memory_cap();
    std::size_t need = g_table_bytes(n, m);
    if (need > cap)
        throw ResourceError("g table needs " + std::to_string(need) + " bytes (cap " +
                                std::to_string(cap) + ")",
                            need);
    if (workers == 0) workers = default_workers();
    GTable gt;
    gt.n = n;
    gt.m = m;
    const std::size_t N = static_cast<std::size_t>(n) + 1;
    gt.values.assign(N * N, 0.0);
    parallel_chunks(N, workers, workers * 4, [&](std::size_t lo, std::size_t hi, unsigned) {
        for (std::size_t i = lo; i < hi; ++i) {
            double x = static_cast<double>(i) / n;
            double* row = &gt.values[i * N];
            for (std::size_t j = 0; j < N; ++j)
                row[j] = g.eval(x, static_cast<double>(j) / n);
        }
    });
    if (m > 0) {
        const int stride = n / m;
        gt.prefix.assign((static_cast<std::size_t>(m) + 1) * N, 0.0);
        // prefix[i][t] = sum_{k<i} values[k*stride][t], compensated per column
        std::vector<double> comp(N, 0.0);
        for (int i = 1; i <= m; ++i) {
            const double* grow = &gt.values[static_cast<std::size_t>(i - 1) * stride * N];
            const double* prev = &gt.prefix[static_cast<std::size_t>(i - 1) * N];
            double* cur = &gt.prefix[static_cast<std::size_t>(i) * N];
            for (std::size_t t = 0; t < N; ++t) {
                double s = prev[t];
                double v = grow[t] + comp[t];
                double next = s + v;
                comp[t] = (std::abs(s) >= std::abs(v)) ? (s - next) + v : (v - next) + s;
                cur[t] = next;
            }
        }
    }
    return gt;
}

namespace {

// qhat slab for fixed j: fills slab[k * (m+1) + i] = qhat(i, j, k) via the
// amortized recurrence
//   A(0) = e(0),  A(i) = min(A(i-1) + g(x_{i-1}, y_jp)/m, e(i)),
//   qhat(i) = min(A(i), e(i+1)) for i < m, qhat(m) = A(m),
// where e(kappa) = 1 - g(x_kappa, y_k) + (1/m) sum_{d<kappa} g(x_d, y_k) and
// jp = min(j+1, m) (the tau = 1 clamp).
void fill_q_slab(const GTable& gt, int m, int j, double* slab, std::vector<double>& escratch) {
    const int n = gt.n;
    const int stride = n / m;
    const double inv_m = 1.0 / static_cast<double>(m);
    const int jp = std::min(j + 1, m);
    const int tjp = jp * stride;
    for (int k = 0; k <= m; ++k) {
        const int tk = k * stride;
        double* e = escratch.data();
        for (int kap = 0; kap <= m; ++kap)
            e[kap] = 1.0 - gt.value(kap * stride, tk) + inv_m * gt.prefix_at(kap, tk);
        double* out = slab + static_cast<std::size_t>(k) * (m + 1);
        double acc = e[0];
        for (int i = 0; i <= m; ++i) {
            if (i > 0) acc = std::min(acc + inv_m * gt.value((i - 1) * stride, tjp), e[i]);
            out[i] = (i < m) ? std::min(acc, e[i + 1]) : acc;
        }
    }
}

// trapezoid aggregation of the slab for this j (Neumaier per i)
void slab_trap_row(const double* slab, int m, int j, double* trap_row) {
    const double inv_m = 1.0 / static_cast<double>(m);
    if (j == 0) {  // empty trapezoid
        std::fill(trap_row, trap_row + m + 1, 0.0);
        return;
    }
    std::vector<double> acc(m + 1, 0.0), comp(m + 1, 0.0);
    for (int k = 0; k <= j; ++k) {
        double w = (k == 0 || k == j) ? 0.5 : 1.0;
        const double* qrow = slab + static_cast<std::size_t>(k) * (m + 1);
        for (int i = 0; i <= m; ++i) {
            double v = w * qrow[i] + comp[i];
            double s = acc[i];
            double next = s + v;
            comp[i] = (std::abs(s) >= std::abs(v)) ? (s - next) + v : (v - next) + s;
            acc[i] = next;
        }
    }
    for (int i = 0; i <= m; ++i) trap_row[i] = inv_m * (acc[i] + comp[i]);
}

// largest index with fl(idx/m) <= v; v == 1 maps to m
int block_index(double v, int m) {
    int idx = static_cast<int>(v * m);
    if (idx > m) idx = m;
    while (idx < m && v >= static_cast<double>(idx + 1) / m) ++idx;
    while (idx > 0 && v < static_cast<double>(idx) / m) --idx;
    return idx;
}

inline double p_term(double gamma, double tau, double inv_m, double pref) {
    return (1.0 - gamma) * (1.0 - tau) + (1.0 - tau) * (inv_m * pref);
}

}  // namespace

QTable build_q_table(const GTable& gt, int m, unsigned workers, std::size_t memory_cap_bytes) {
    if (gt.m != m || gt.m == 0)
        throw std::invalid_argument("build_q_table: GTable lacks prefix block for this m");
    std::size_t cap = memory_cap_bytes ? memory_cap_bytes : default_memory_cap();
    std::size_t need = q_table_bytes(m) + g_table_bytes(gt.n, gt.m);
    if (need > cap)
        throw ResourceError("q table needs " + std::to_string(q_table_bytes(m)) + " bytes (cap " +
                                std::to_string(cap) + ")",
                            need);
    if (workers == 0) workers = default_workers();
    QTable qt;
    qt.m = m;
    const std::size_t M = static_cast<std::size_t>(m) + 1;
    qt.q.assign(M * M * M, 0.0);
    qt.trap.assign(M * M, 0.0);
    parallel_chunks(M, workers, workers * 4, [&](std::size_t lo, std::size_t hi, unsigned) {
        std::vector<double> escratch(M);
        for (std::size_t j = lo; j < hi; ++j) {
            double* slab = &qt.q[j * M * M];
            fill_q_slab(gt, m, static_cast<int>(j), slab, escratch);
            slab_trap_row(slab, m, static_cast<int>(j), &qt.trap[j * M]);
        }
    });
    return qt;
}

FhatBreakdown fhat(double gamma, double tau, const GTable& gt, const QTable& qt) {
    if (!(gamma >= 0.0 && gamma <= 1.0 && tau >= 0.0 && tau <= 1.0))
        throw std::domain_error("fhat: point outside the unit square");
    if (gt.m != qt.m || gt.m == 0) throw std::invalid_argument("fhat: mismatched tables");
    const int m = qt.m;
    const int n = gt.n;
    const double inv_m = 1.0 / static_cast<double>(m);
    FhatBreakdown br;
    br.i = block_index(gamma, m);
    br.j = block_index(tau, m);

    // sum_{k<i} g(x_k, tau): exact at fine rows; between them the prefix is
    // interpolated, i.e. g sampled on the fine grid stands in for g
    int t0 = block_index(tau, n);
    double pref;
    if (tau == static_cast<double>(t0) / n || t0 == n) {
        pref = gt.prefix_at(br.i, t0);
    } else {
        double w = tau * n - t0;
        pref = (1.0 - w) * gt.prefix_at(br.i, t0) + w * gt.prefix_at(br.i, t0 + 1);
    }
    br.p_term = p_term(gamma, tau, inv_m, pref);
    br.trapezoid_term = qt.trap_at(br.i, br.j);
    br.value = br.p_term + br.trapezoid_term;

    // per-l argmin of the inner minimum (diagnostic; values come from qt)
    const int stride = n / m;
    const int jp = std::min(br.j + 1, m);
    const int kmax = std::min(br.i + 1, m);
    br.argmin_kappa.assign(br.j + 1, 0);
    for (int l = 0; l <= br.j; ++l) {
        const int tl = l * stride;
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int kap = 0; kap <= kmax; ++kap) {
            double cand = 1.0 - gt.value(kap * stride, tl) + inv_m * gt.prefix_at(kap, tl);
            if (kap <= br.i)
                cand += inv_m * (gt.prefix_at(br.i, jp * stride) - gt.prefix_at(kap, jp * stride));
            if (cand < best) {
                best = cand;
                arg = kap;
            }
        }
        br.argmin_kappa[l] = arg;
    }
    return br;
}

namespace {

struct SweepCell {
    double value = std::numeric_limits<double>::infinity();
    int a = -1, t = -1;
    void consider(double v, int a_, int t_) {
        if (v < value || (v == value && (a_ < a || (a_ == a && t_ < t)))) {
            value = v;
            a = a_;
            t = t_;
        }
    }
    void merge(const SweepCell& other) {
        if (other.a >= 0) consider(other.value, other.a, other.t);
    }
};

struct Checkpoint {
    std::string path;
    std::string header;
    std::vector<bool> done;
    std::vector<SweepCell> results;
    std::mutex mu;

    // loads chunk lines matching the header; anything else starts fresh
    void load(unsigned chunks) {
        done.assign(chunks, false);
        results.assign(chunks, {});
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in) return;
        std::string line;
        if (!std::getline(in, line) || line != header) return;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string word;
            unsigned c;
            SweepCell cell;
            if (!(ls >> word >> c >> cell.value >> cell.a >> cell.t) || word != "chunk") continue;
            if (c < chunks) {
                done[c] = true;
                results[c] = cell;
            }
        }
    }
    void begin() {
        if (path.empty()) return;
        bool any = false;
        for (bool d : done) any = any || d;
        if (!any) {
            std::ofstream out(path, std::ios::trunc);
            out << header << "\n";
        }
    }
    void record(unsigned c, const SweepCell& cell) {
        if (path.empty()) return;
        std::lock_guard<std::mutex> lk(mu);
        std::ofstream out(path, std::ios::app);
        out << "chunk " << c << " " << fmt17(cell.value) << " " << cell.a << " " << cell.t << "\n";
    }
};

}  // namespace

CertifiedBound sweep(const PiecewiseAffineG& g, const CertifierParams& params,
                     const std::string& checkpoint_path) {
    params.validate();
    auto t_start = std::chrono::steady_clock::now();
    const int n = params.n, m = params.m;
    unsigned workers = params.workers ? params.workers : default_workers();
    std::size_t cap = params.memory_cap_bytes ? params.memory_cap_bytes : default_memory_cap();

    GTable gt = build_g_table(g, n, m, workers, cap);
    const std::size_t N = static_cast<std::size_t>(n) + 1;
    const std::size_t M = static_cast<std::size_t>(m) + 1;
    const double inv_m = 1.0 / static_cast<double>(m);
    bool slab_mode = g_table_bytes(n, m) + q_table_bytes(m) > cap;

    CertifiedBound out;
    out.params = params;
    out.params.workers = workers;
    out.params.memory_cap_bytes = cap;
    out.slab_mode = slab_mode;

    SweepCell global;
    if (!slab_mode) {
        QTable qt = build_q_table(gt, m, workers, cap);
        unsigned chunks = std::min<std::size_t>(N, std::max(32u, workers * 8));
        Checkpoint ck;
        ck.path = checkpoint_path;
        ck.header = "sweep n=" + std::to_string(n) + " m=" + std::to_string(m) +
                    " chunks=" + std::to_string(chunks);
        ck.load(chunks);
        ck.begin();
        std::vector<SweepCell> cells(chunks);
        parallel_chunks(N, workers, chunks, [&](std::size_t lo, std::size_t hi, unsigned c) {
            if (ck.done[c]) {
                cells[c] = ck.results[c];
                return;
            }
            SweepCell cell;
            const double* trap_data = qt.trap.data();
            for (std::size_t a = lo; a < hi; ++a) {
                double gamma = static_cast<double>(a) / n;
                int i = static_cast<int>(a * static_cast<std::size_t>(m) / n);
                for (std::size_t t = 0; t < N; ++t) {
                    double tau = static_cast<double>(t) / n;
                    int j = static_cast<int>(t * static_cast<std::size_t>(m) / n);
                    double v = p_term(gamma, tau, inv_m, gt.prefix_at(i, t)) +
                               trap_data[static_cast<std::size_t>(j) * M + i];
                    cell.consider(v, static_cast<int>(a), static_cast<int>(t));
                }
            }
            ck.record(c, cell);
            cells[c] = cell;
        });
        for (const auto& cell : cells) global.merge(cell);
    } else {
        // stream one j-slab at a time; tau rows sharing a j form a band
        if (g_table_bytes(n, m) + M * M * sizeof(double) * 2 > cap)
            throw ResourceError("even a single q slab exceeds the memory cap",
                                g_table_bytes(n, m) + M * M * sizeof(double) * 2);
        std::vector<double> slab(M * M), trap_row(M);
        std::vector<double> escratch(M);
        const int stride = n / m;
        for (int j = 0; j <= m; ++j) {
            fill_q_slab(gt, m, j, slab.data(), escratch);
            slab_trap_row(slab.data(), m, j, trap_row.data());
            std::size_t t_lo = static_cast<std::size_t>(j) * stride;
            std::size_t t_hi = (j == m) ? t_lo + 1 : t_lo + stride;
            if (j == m) t_lo = N - 1, t_hi = N;  // only tau = 1 maps to block m
            std::vector<SweepCell> cells(workers);
            parallel_chunks(N, workers, workers, [&](std::size_t lo, std::size_t hi, unsigned c) {
                SweepCell cell;
                for (std::size_t a = lo; a < hi; ++a) {
                    double gamma = static_cast<double>(a) / n;
                    int i = static_cast<int>(a * static_cast<std::size_t>(m) / n);
                    for (std::size_t t = t_lo; t < t_hi; ++t) {
                        double tau = static_cast<double>(t) / n;
                        double v = p_term(gamma, tau, inv_m, gt.prefix_at(i, t)) + trap_row[i];
                        cell.consider(v, static_cast<int>(a), static_cast<int>(t));
                    }
                }
                cells[c] = cell;
            });
            for (const auto& cell : cells) global.merge(cell);
        }
    }

    out.min_fhat = global.value;
    out.argmin_gamma = static_cast<double>(global.a) / n;
    out.argmin_tau = static_cast<double>(global.t) / n;
    out.discretization_error = 2.0 / n + 5.0 / (4.0 * m);
    out.numerical_margin = params.numerical_margin;
    out.certified_ratio =
        std::max(0.0, out.min_fhat - out.discretization_error - out.numerical_margin);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

std::string CertifiedBound::to_manifest_block() const {
    std::ostringstream out;
    out << "n=" << params.n << "\n";
    out << "m=" << params.m << "\n";
    out << "workers=" << params.workers << "\n";
    out << "slab_mode=" << (slab_mode ? 1 : 0) << "\n";
    out << "min_fhat=" << fmt17(min_fhat) << "\n";
    out << "argmin_gamma=" << fmt17(argmin_gamma) << "\n";
    out << "argmin_tau=" << fmt17(argmin_tau) << "\n";
    out << "disc_error=" << fmt17(discretization_error) << "\n";
    out << "num_margin=" << fmt17(numerical_margin) << "\n";
    out << "certified_ratio=" << fmt17(certified_ratio) << "\n";
    out << "wall_seconds=" << fmt17(wall_seconds) << "\n";
    return out.str();
}

LipschitzReport lipschitz_spot_check(const PiecewiseAffineG& g, int samples, double delta, int m,
                                     std::uint64_t seed) {
    if (!(delta > 0.0 && delta <= 0.1))
        throw std::invalid_argument("lipschitz_spot_check: delta must lie in (0, 0.1]");
    if (samples < 1) throw std::invalid_argument("lipschitz_spot_check: samples must be positive");
    GTable gt = build_g_table(g, m, m);
    QTable qt = build_q_table(gt, m);
    LipschitzReport rep;
    rep.samples = samples;
    rep.delta = delta;
    const double slack = 5.0 / (2.0 * m);
    std::mt19937_64 rng(splitmix64(seed));
    for (int s = 0; s < samples; ++s) {
        double gamma = uniform01(rng) * (1.0 - delta);
        double tau = uniform01(rng) * (1.0 - delta);
        double f00 = fhat(gamma, tau, gt, qt).value;
        double fg = fhat(gamma + delta, tau, gt, qt).value;
        double ft = fhat(gamma, tau + delta, gt, qt).value;
        double bg = delta + slack;
        double bt = 3.0 * delta + slack;
        double rg = std::abs(fg - f00) / bg;
        double rt = std::abs(ft - f00) / bt;
        rep.worst_gamma_ratio = std::max(rep.worst_gamma_ratio, rg);
        rep.worst_tau_ratio = std::max(rep.worst_tau_ratio, rt);
        if (rg > 1.0) ++rep.violations_gamma;
        if (rt > 1.0) ++rep.violations_tau;
    }
    return rep;
}

double trapezoid_error_bound(double lipschitz, double step, std::int64_t intervals) {
    if (lipschitz < 0.0) throw std::invalid_argument("trapezoid_error_bound: L must be >= 0");
    if (step <= 0.0) throw std::invalid_argument("trapezoid_error_bound: step must be positive");
    return lipschitz * static_cast<double>(intervals) * step * step / 4.0;
}

}  // namespace matchcert

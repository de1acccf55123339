#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "matchcert/certifier.hpp"
#include "matchcert/grid.hpp"
#include "matchcert/lp_model.hpp"
#include "matchcert/solver.hpp"
#include "matchcert/util.hpp"

using namespace matchcert;

namespace {

GridFunction random_monotone_grid(int n, std::mt19937_64& rng) {
    std::vector<double> a(n + 1), b(n + 1), a2(n + 1), b2(n + 1);
    for (auto& v : a) v = uniform01(rng);
    for (auto& v : b) v = uniform01(rng);
    for (auto& v : a2) v = uniform01(rng);
    for (auto& v : b2) v = uniform01(rng);
    std::sort(a.begin(), a.end());
    std::sort(a2.begin(), a2.end());
    std::sort(b.begin(), b.end(), std::greater<>());
    std::sort(b2.begin(), b2.end(), std::greater<>());
    GridFunction g(n);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            g.value(i, j) = std::max(0.5 * (a[i] + b[j]), 0.5 * (a2[i] + b2[j]));
    return g;
}

int block_of(double v, int m) {
    int k = static_cast<int>(v * m);
    if (k > m) k = m;
    while (k < m && v >= static_cast<double>(k + 1) / m) ++k;
    while (k > 0 && v < static_cast<double>(k) / m) --k;
    return k;
}

// qhat from its definition: explicit minimum over candidates, explicit sums,
// direct evaluations of the extension, no tables or prefix structures
double qhat_direct(const PiecewiseAffineG& g, double gamma, double tau, int k, int m) {
    int i = block_of(gamma, m);
    int j = block_of(tau, m);
    int jp = std::min(j + 1, m);
    int kmax = std::min(i + 1, m);
    double y = static_cast<double>(k) / m;
    double yjp = static_cast<double>(jp) / m;
    double best = std::numeric_limits<double>::infinity();
    for (int kap = 0; kap <= kmax; ++kap) {
        double cand = 1.0 - g.eval(static_cast<double>(kap) / m, y);
        for (int d = 0; d < kap; ++d) cand += g.eval(static_cast<double>(d) / m, y) / m;
        for (int d = kap; d <= i - 1; ++d) cand += g.eval(static_cast<double>(d) / m, yjp) / m;
        best = std::min(best, cand);
    }
    return best;
}

double fhat_direct(const PiecewiseAffineG& g, double gamma, double tau, int m) {
    int i = block_of(gamma, m);
    int j = block_of(tau, m);
    double p = (1.0 - gamma) * (1.0 - tau);
    double sum = 0.0;
    for (int k = 0; k < i; ++k) sum += g.eval(static_cast<double>(k) / m, tau);
    p += (1.0 - tau) * sum / m;
    double trap = 0.0;
    for (int k = 0; k < j; ++k)
        trap += 0.5 * (qhat_direct(g, gamma, tau, k, m) + qhat_direct(g, gamma, tau, k + 1, m));
    return p + trap / m;
}

// closed-form f for constant g: bilinear, minimized at a corner
double f_const(double c, double gamma, double tau) {
    return (1.0 - tau) * (1.0 - gamma) + (1.0 - tau) * c * gamma + tau * (1.0 - c + c * gamma);
}

}  // namespace

TEST_CASE("g table for simple inputs") {
    PiecewiseAffineG half(GridFunction::constant(2, 0.5));
    GTable gt = build_g_table(half, 4);
    CHECK(gt.values.size() == 25);
    for (double v : gt.values) CHECK(v == 0.5);

    // shared nodes of a refined table coincide exactly with the coarse grid
    PiecewiseAffineG huang(sample_closed_form(huang_reference, 50));
    GTable fine = build_g_table(huang, 100);
    for (int i = 0; i <= 50; ++i)
        for (int j = 0; j <= 50; ++j)
            CHECK(fine.value(2 * i, 2 * j) == huang.grid.value(i, j));
}

TEST_CASE("g table memory accounting") {
    // the value block dominates: (n+1)^2 doubles
    std::size_t est = g_table_bytes(1 << 14, 0);
    double direct = std::pow((1 << 14) + 1.0, 2) * 8.0;
    CHECK(std::abs(est - direct) / direct < 0.01);
    PiecewiseAffineG half(GridFunction::constant(2, 0.5));
    CHECK_THROWS_AS(build_g_table(half, 1 << 14, 0, 1, 1 << 20), ResourceError);
    try {
        build_g_table(half, 1 << 14, 0, 1, 1 << 20);
    } catch (const ResourceError& e) {
        CHECK(e.required_bytes == est);
    }
}

TEST_CASE("qhat table on constant grids") {
    // g = 0: every candidate equals 1
    PiecewiseAffineG zero(GridFunction::constant(2, 0.0));
    GTable gt0 = build_g_table(zero, 8, 4);
    QTable qt0 = build_q_table(gt0, 4);
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 4; ++j)
            for (int k = 0; k <= 4; ++k) CHECK(qt0.at(i, j, k) == 1.0);

    // g = 1/2: every candidate evaluates to 1/2 + i/(2m), independent of kappa
    PiecewiseAffineG half(GridFunction::constant(2, 0.5));
    GTable gt = build_g_table(half, 8, 4);
    QTable qt = build_q_table(gt, 4);
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 4; ++j)
            for (int k = 0; k <= 4; ++k)
                CHECK(qt.at(i, j, k) == doctest::Approx(0.5 + i / 8.0).epsilon(1e-12));
}

TEST_CASE("qhat recurrence equals the brute-force minimum") {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 10; ++rep) {
        int m = 8;
        GridFunction grid = random_monotone_grid(2 * m, rng);
        PiecewiseAffineG g(grid);
        GTable gt = build_g_table(g, 2 * m, m);
        QTable qt = build_q_table(gt, m);
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m; ++j)
                for (int k = 0; k <= m; ++k) {
                    double direct = qhat_direct(g, static_cast<double>(i) / m,
                                                static_cast<double>(j) / m, k, m);
                    CHECK(std::abs(qt.at(i, j, k) - direct) <= 1e-12);
                    CHECK(qt.at(i, j, k) >= 0.0);
                    CHECK(qt.at(i, j, k) <= 2.0);
                }
    }
}

TEST_CASE("table fhat equals from-definition fhat on every sweep point") {
    std::mt19937_64 rng(77);
    for (int m : {4, 8}) {
        int n = 2 * m;
        for (int rep = 0; rep < 5; ++rep) {
            GridFunction grid = random_monotone_grid(n, rng);
            PiecewiseAffineG g(grid);
            GTable gt = build_g_table(g, n, m);
            QTable qt = build_q_table(gt, m);
            for (int a = 0; a <= n; ++a)
                for (int t = 0; t <= n; ++t) {
                    double gamma = static_cast<double>(a) / n;
                    double tau = static_cast<double>(t) / n;
                    double table = fhat(gamma, tau, gt, qt).value;
                    double direct = fhat_direct(g, gamma, tau, m);
                    CHECK(std::abs(table - direct) <= 1e-12);
                }
        }
    }
}

TEST_CASE("fhat examples for constant grids") {
    PiecewiseAffineG zero(GridFunction::constant(2, 0.0));
    GTable gt0 = build_g_table(zero, 8, 4);
    QTable qt0 = build_q_table(gt0, 4);
    CHECK(fhat(1.0, 0.0, gt0, qt0).value == 0.0);
    CHECK(fhat(0.0, 0.0, gt0, qt0).value == 1.0);

    PiecewiseAffineG half(GridFunction::constant(2, 0.5));
    GTable gt = build_g_table(half, 8, 4);
    QTable qt = build_q_table(gt, 4);
    CHECK(fhat(1.0, 0.0, gt, qt).value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fhat(1.0, 1.0, gt, qt).value == doctest::Approx(1.0).epsilon(1e-12));
    auto br = fhat(0.7, 0.4, gt, qt);
    CHECK(br.p_term + br.trapezoid_term == br.value);
    CHECK(br.argmin_kappa.size() == static_cast<std::size_t>(br.j + 1));
    CHECK_THROWS_AS(fhat(1.2, 0.0, gt, qt), std::domain_error);
}

TEST_CASE("fhat stays below f + 5/(4m) for closed-form rank functions") {
    const int m = 16;
    for (double c : {0.0, 0.3, 0.5, 1.0}) {
        PiecewiseAffineG g(GridFunction::constant(2, c));
        GTable gt = build_g_table(g, m, m);
        QTable qt = build_q_table(gt, m);
        for (int a = 0; a <= m; ++a)
            for (int t = 0; t <= m; ++t) {
                double gamma = static_cast<double>(a) / m;
                double tau = static_cast<double>(t) / m;
                CHECK(fhat(gamma, tau, gt, qt).value <=
                      f_const(c, gamma, tau) + 5.0 / (4 * m) + 1e-12);
            }
    }
    // affine-in-x g(x, y) = a + b x with b <= a: f has closed form via
    // h(theta) independent of theta exactly as in the constant case when the
    // inner integrand telescopes; checked numerically against quadrature
    const double a0 = 0.4, b0 = 0.25;
    auto gf = [&](double x, double) { return a0 + b0 * x; };
    PiecewiseAffineG g(sample_closed_form(gf, 64));
    GTable gt = build_g_table(g, 64, m);
    QTable qt = build_q_table(gt, m);
    auto f_exact = [&](double gamma, double tau) {
        // p = (1-t)(1-gam) + (1-t) * int_0^gam (a0 + b0 x) dx
        double p = (1 - tau) * (1 - gamma) + (1 - tau) * (a0 * gamma + 0.5 * b0 * gamma * gamma);
        // h(theta) = 1 - (a0 + b0 th) + a0 th + b0 th^2/2 + a0 (gam - th) + b0 (gam^2 - th^2)/2
        // minimized over theta in [0, gamma] by dense scan
        double best = std::numeric_limits<double>::infinity();
        for (int s = 0; s <= 4096; ++s) {
            double th = gamma * s / 4096.0;
            double h = 1 - (a0 + b0 * th) + a0 * th + 0.5 * b0 * th * th + a0 * (gamma - th) +
                       0.5 * b0 * (gamma * gamma - th * th);
            best = std::min(best, h);
        }
        return p + tau * best;  // q is independent of y here
    };
    for (int a = 0; a <= m; ++a)
        for (int t = 0; t <= m; ++t) {
            double gamma = static_cast<double>(a) / m;
            double tau = static_cast<double>(t) / m;
            CHECK(fhat(gamma, tau, gt, qt).value <= f_exact(gamma, tau) + 5.0 / (4 * m) + 1e-9);
        }
}

TEST_CASE("sweep on the zero function certifies zero") {
    PiecewiseAffineG zero(GridFunction::constant(2, 0.0));
    CertifierParams params;
    params.n = 8;
    params.m = 4;
    params.workers = 1;
    CertifiedBound b = sweep(zero, params);
    CHECK(b.min_fhat == 0.0);
    CHECK(b.argmin_gamma == 1.0);
    CHECK(b.argmin_tau == 0.0);
    CHECK(b.certified_ratio == 0.0);  // clamped at zero
    CHECK(b.discretization_error == doctest::Approx(2.0 / 8 + 5.0 / 16));
}

TEST_CASE("sweep error budget end-to-end on constant grids") {
    // min over F of fhat <= min over the square of f + 2/n + 5/(4m)
    for (double c : {0.2, 0.5, 0.8}) {
        PiecewiseAffineG g(GridFunction::constant(2, c));
        CertifierParams params;
        params.n = 64;
        params.m = 16;
        params.workers = 2;
        CertifiedBound b = sweep(g, params);
        double f_min = std::min({f_const(c, 0, 0), f_const(c, 0, 1), f_const(c, 1, 0),
                                 f_const(c, 1, 1)});
        CHECK(b.min_fhat <= f_min + 2.0 / params.n + 5.0 / (4 * params.m) + 1e-12);
        CHECK(b.certified_ratio <= b.min_fhat);
        CHECK(b.certified_ratio >= 0.0);
        CHECK(b.certified_ratio <= 1.0);
    }
}

TEST_CASE("sweep is independent of worker count and matches fhat") {
    std::mt19937_64 rng(31337);
    GridFunction grid = random_monotone_grid(12, rng);
    PiecewiseAffineG g(grid);
    CertifierParams params;
    params.n = 24;
    params.m = 12;
    CertifiedBound ref;
    for (unsigned workers : {1u, 2u, 8u}) {
        params.workers = workers;
        CertifiedBound b = sweep(g, params);
        if (workers == 1u) {
            ref = b;
        } else {
            CHECK(b.min_fhat == ref.min_fhat);
            CHECK(b.argmin_gamma == ref.argmin_gamma);
            CHECK(b.argmin_tau == ref.argmin_tau);
        }
    }
    GTable gt = build_g_table(g, 24, 12);
    QTable qt = build_q_table(gt, 12);
    CHECK(fhat(ref.argmin_gamma, ref.argmin_tau, gt, qt).value == ref.min_fhat);
}

TEST_CASE("slab mode agrees bit for bit with the full table") {
    std::mt19937_64 rng(555);
    GridFunction grid = random_monotone_grid(10, rng);
    PiecewiseAffineG g(grid);
    CertifierParams params;
    params.n = 40;
    params.m = 10;
    params.workers = 2;
    CertifiedBound full = sweep(g, params);
    REQUIRE_FALSE(full.slab_mode);
    // squeeze the cap below the full QTable but above table + one slab
    params.memory_cap_bytes = g_table_bytes(params.n, params.m) +
                              q_table_bytes(params.m) / 2;
    CertifiedBound slab = sweep(g, params);
    CHECK(slab.slab_mode);
    CHECK(slab.min_fhat == full.min_fhat);
    CHECK(slab.argmin_gamma == full.argmin_gamma);
    CHECK(slab.argmin_tau == full.argmin_tau);

    // below even a single slab
    params.memory_cap_bytes = g_table_bytes(params.n, params.m) + 100;
    CHECK_THROWS_AS(sweep(g, params), ResourceError);
}

TEST_CASE("checkpointed sweeps resume to the identical result") {
    namespace fs = std::filesystem;
    std::mt19937_64 rng(4242);
    GridFunction grid = random_monotone_grid(8, rng);
    PiecewiseAffineG g(grid);
    CertifierParams params;
    params.n = 32;
    params.m = 8;
    params.workers = 2;
    CertifiedBound clean = sweep(g, params);
    fs::path ck = fs::temp_directory_path() / "matchcert_ck_test.txt";
    fs::remove(ck);
    CertifiedBound first = sweep(g, params, ck.string());
    CHECK(first.min_fhat == clean.min_fhat);
    // drop the last chunk lines to fake an interrupted run, then resume
    {
        std::ifstream in(ck);
        std::vector<std::string> lines;
        for (std::string ln; std::getline(in, ln);) lines.push_back(ln);
        in.close();
        REQUIRE(lines.size() > 4);
        std::ofstream out(ck, std::ios::trunc);
        for (std::size_t k = 0; k + 3 < lines.size(); ++k) out << lines[k] << "\n";
    }
    CertifiedBound resumed = sweep(g, params, ck.string());
    CHECK(resumed.min_fhat == clean.min_fhat);
    CHECK(resumed.argmin_gamma == clean.argmin_gamma);
    CHECK(resumed.argmin_tau == clean.argmin_tau);
    fs::remove(ck);
}

TEST_CASE("lipschitz spot check") {
    // g = 0: fhat(gamma, 0) = 1 - gamma exactly, difference is exactly delta
    PiecewiseAffineG zero(GridFunction::constant(2, 0.0));
    GTable gt = build_g_table(zero, 64, 64);
    QTable qt = build_q_table(gt, 64);
    double d = 1.0 / 8;
    CHECK(std::abs(fhat(0.25 + d, 0.0, gt, qt).value - fhat(0.25, 0.0, gt, qt).value) ==
          doctest::Approx(d).epsilon(1e-12));

    LipschitzReport rep = lipschitz_spot_check(zero, 2000, 1.0 / 256, 64, 9);
    CHECK(rep.violations_gamma == 0);
    CHECK(rep.violations_tau == 0);

    PiecewiseAffineG half(GridFunction::constant(2, 0.5));
    rep = lipschitz_spot_check(half, 2000, 1.0 / 64, 64, 10);
    CHECK(rep.violations_gamma == 0);
    CHECK(rep.violations_tau == 0);

    PiecewiseAffineG huang(sample_closed_form(huang_reference, 50));
    rep = lipschitz_spot_check(huang, 5000, 1.0 / 256, 100, 11);
    CHECK(rep.violations_gamma == 0);
    CHECK(rep.violations_tau == 0);
    CHECK(rep.worst_gamma_ratio <= 1.0);

    CHECK_THROWS_AS(lipschitz_spot_check(zero, 10, 0.5, 8), std::invalid_argument);
}

TEST_CASE("trapezoid error bound") {
    CHECK(trapezoid_error_bound(1.0, 1.0, 1) == 0.25);
    CHECK(trapezoid_error_bound(0.0, 0.5, 10) == 0.0);
    CHECK(trapezoid_error_bound(1.0, 1.0 / 16, 16) == doctest::Approx(1.0 / 64));

    // equality case: the unit tent has integral 1/4 and trapezoid value 0
    auto tent = [](double x) { return 0.5 - std::abs(x - 0.5); };
    double integral = 0.25;
    double trap = 0.5 * (tent(0.0) + tent(1.0));
    CHECK(std::abs(integral - trap) == trapezoid_error_bound(1.0, 1.0, 1));

    // random piecewise-linear 1-Lipschitz functions stay within the bound
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 200; ++rep) {
        int pieces = 16;
        std::vector<double> vals(pieces + 1);
        vals[0] = uniform01(rng);
        for (int k = 1; k <= pieces; ++k) {
            double slope = 2.0 * uniform01(rng) - 1.0;  // |slope| <= 1
            vals[k] = vals[k - 1] + slope / pieces;
        }
        // exact integral of the piecewise-linear interpolant on [0,1]
        double exact = 0.0;
        for (int k = 0; k < pieces; ++k) exact += 0.5 * (vals[k] + vals[k + 1]) / pieces;
        // coarse trapezoid with a single interval
        double coarse = 0.5 * (vals[0] + vals[pieces]);
        CHECK(std::abs(exact - coarse) <= trapezoid_error_bound(1.0, 1.0, 1) + 1e-12);
    }

    CHECK_THROWS_AS(trapezoid_error_bound(-1.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(trapezoid_error_bound(1.0, 0.0, 1), std::invalid_argument);
}

TEST_CASE("certifier parameter validation") {
    CertifierParams p;
    p.n = 8;
    p.m = 3;  // does not divide
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.m = 1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.n = 4;
    p.m = 8;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.n = 8;
    p.m = 4;
    p.numerical_margin = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

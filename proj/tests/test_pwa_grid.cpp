#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "matchcert/grid.hpp"
#include "matchcert/util.hpp"

using namespace matchcert;

namespace {

GridFunction random_monotone_grid(int n, std::mt19937_64& rng) {
    std::vector<double> a(n + 1), b(n + 1);
    for (auto& v : a) v = uniform01(rng);
    for (auto& v : b) v = uniform01(rng);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end(), std::greater<>());
    GridFunction g(n);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) g.value(i, j) = 0.5 * (a[i] + b[j]);
    return g;
}

}  // namespace

TEST_CASE("locate at grid nodes and simple interior points") {
    auto loc = locate(0.0, 0.0, 1);
    CHECK(loc.vi[0] == 0);
    CHECK(loc.vj[0] == 0);
    CHECK(loc.lambda[0] == 1.0);
    CHECK(loc.lambda[1] == 0.0);
    CHECK(loc.lambda[2] == 0.0);

    // hypotenuse midpoint: half of (1,0) plus half of (0,1)
    loc = locate(0.5, 0.5, 1);
    CHECK(loc.lower_left);
    CHECK(loc.lambda[0] == doctest::Approx(0.0));
    CHECK(loc.lambda[1] == doctest::Approx(0.5));
    CHECK(loc.lambda[2] == doctest::Approx(0.5));

    // interior of the lower-left triangle, solved by hand
    loc = locate(0.25, 0.25, 1);
    CHECK(loc.lower_left);
    CHECK(loc.vi == std::array<int, 3>{0, 1, 0});
    CHECK(loc.vj == std::array<int, 3>{0, 0, 1});
    CHECK(loc.lambda[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(loc.lambda[1] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(loc.lambda[2] == doctest::Approx(0.25).epsilon(1e-14));

    CHECK_THROWS_AS(locate(-0.1, 0.5, 4), std::domain_error);
    CHECK_THROWS_AS(locate(0.5, 1.1, 4), std::domain_error);
}

TEST_CASE("barycentric partition of unity and reconstruction") {
    std::mt19937_64 rng(42);
    for (int n : {1, 3, 7, 50}) {
        for (int s = 0; s < 2000; ++s) {
            double x = uniform01(rng), y = uniform01(rng);
            auto loc = locate(x, y, n);
            double sum = 0.0, rx = 0.0, ry = 0.0;
            for (int k = 0; k < 3; ++k) {
                CHECK(loc.lambda[k] >= 0.0);
                sum += loc.lambda[k];
                rx += loc.lambda[k] * (static_cast<double>(loc.vi[k]) / n);
                ry += loc.lambda[k] * (static_cast<double>(loc.vj[k]) / n);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            CHECK(std::abs(rx - x) <= 1e-12);
            CHECK(std::abs(ry - y) <= 1e-12);
        }
    }
}

TEST_CASE("eval on the 2x2 example grid") {
    GridFunction g(1);
    g.value(0, 0) = 0.2;
    g.value(1, 0) = 0.6;
    g.value(0, 1) = 0.0;
    g.value(1, 1) = 0.4;
    PiecewiseAffineG pwa(std::move(g));
    CHECK(pwa.eval(0, 0) == 0.2);
    CHECK(pwa.eval(0.5, 0.5) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(pwa.eval(0.25, 0.25) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(pwa.eval(2.0, 0.0), std::domain_error);
}

TEST_CASE("extension reproduces grid nodes exactly") {
    std::mt19937_64 rng(7);
    for (int n : {1, 2, 5, 13, 50}) {
        GridFunction g = random_monotone_grid(n, rng);
        PiecewiseAffineG pwa(g);
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) {
                double x = static_cast<double>(i) / n, y = static_cast<double>(j) / n;
                CHECK(pwa.eval(x, y) == g.value(i, j));  // exact
            }
    }
}

TEST_CASE("evaluation stays inside [0,1] and is affine on each triangle") {
    std::mt19937_64 rng(99);
    GridFunction g = random_monotone_grid(9, rng);
    PiecewiseAffineG pwa(g);
    for (int s = 0; s < 5000; ++s) {
        double x = uniform01(rng), y = uniform01(rng);
        double v = pwa.eval(x, y);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // affine: midpoint value matches average along short segments inside one triangle
    for (int s = 0; s < 2000; ++s) {
        double x = uniform01(rng) * 0.98 + 0.005, y = uniform01(rng) * 0.98 + 0.005;
        double hx = (uniform01(rng) - 0.5) * 1e-3, hy = (uniform01(rng) - 0.5) * 1e-3;
        auto a = locate(x - hx, y - hy, 9), b = locate(x + hx, y + hy, 9);
        if (a.vi != b.vi || a.vj != b.vj) continue;  // crossed a triangle edge
        double mid = pwa.eval(x, y);
        double avg = 0.5 * (pwa.eval(x - hx, y - hy) + pwa.eval(x + hx, y + hy));
        CHECK(std::abs(mid - avg) <= 1e-12);
    }
}

TEST_CASE("huang reference values") {
    CHECK(huang_reference(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(huang_reference(1, 0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(huang_reference(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(huang_reference(1.5, 0), std::domain_error);
}

TEST_CASE("sample_closed_form") {
    GridFunction z = sample_closed_form([](double, double) { return 0.0; }, 2);
    for (double v : z.values) CHECK(v == 0.0);

    GridFunction h = sample_closed_form(huang_reference, 1);
    CHECK(h.value(0, 0) == doctest::Approx(0.5));
    CHECK(h.value(0, 1) == doctest::Approx(0.25));
    CHECK(h.value(1, 0) == doctest::Approx(0.75));
    CHECK(h.value(1, 1) == doctest::Approx(0.5));

    GridFunction x = sample_closed_form([](double a, double) { return a; }, 2);
    CHECK(x.value(0, 0) == 0.0);
    CHECK(x.value(1, 0) == 0.5);
    CHECK(x.value(2, 2) == 1.0);

    CHECK_THROWS_AS(sample_closed_form([](double a, double) { return 1.5 * a; }, 2),
                    std::range_error);
}

TEST_CASE("check_conditions on simple grids") {
    GridFunction half = GridFunction::constant(6, 0.5);
    CHECK(check_conditions(half, CheckMode::strict, 0.0).all_pass());
    CHECK(check_conditions(half, CheckMode::relaxed, 0.0).all_pass());

    // constructed monotonicity violation with witness indices
    GridFunction bad = GridFunction::constant(3, 0.5);
    bad.value(2, 0) = 0.4;  // below value(1, 0)
    auto rep = check_conditions(bad, CheckMode::strict, 0.0);
    CHECK_FALSE(rep.condition[1].pass);
    CHECK(rep.condition[1].i == 1);
    CHECK(rep.condition[1].j == 0);
    CHECK(rep.condition[1].violation == doctest::Approx(0.1));

    // out-of-range entry trips condition 1
    GridFunction oor = GridFunction::constant(2, 0.5);
    oor.value(0, 0) = -0.25;
    CHECK_FALSE(check_conditions(oor, CheckMode::strict, 0.0).condition[0].pass);
    CHECK(check_conditions(oor, CheckMode::strict, 0.3).condition[0].pass);

    CHECK_THROWS_AS(check_conditions(half, CheckMode::strict, -1.0), std::invalid_argument);
}

TEST_CASE("huang reference sampled at 50: relaxed passes, strict trips slope-x near h=1") {
    GridFunction g = sample_closed_form(huang_reference, 50);
    auto relaxed = check_conditions(g, CheckMode::relaxed, 0.0);
    CHECK(relaxed.all_pass());
    auto strict = check_conditions(g, CheckMode::strict, 0.0);
    // the strengthened slope constraint fails marginally where h saturates
    CHECK_FALSE(strict.condition[2].pass);
    CHECK(strict.condition[2].violation < 2e-2);
    CHECK(strict.condition[0].pass);
    CHECK(strict.condition[1].pass);
    CHECK(strict.condition[4].pass);
}

TEST_CASE("sampled-derivative properties of strict-passing extensions") {
    // a strict-feasible grid: blend of constants and a mild slope field
    const int n = 8;
    GridFunction g(n);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            double x = static_cast<double>(i) / n, y = static_cast<double>(j) / n;
            g.value(i, j) = 0.5 + x / 8.0 - y / 8.0 - x * y / 16.0;
        }
    REQUIRE(check_conditions(g, CheckMode::strict, 0.0).all_pass());
    PiecewiseAffineG pwa(g);
    std::mt19937_64 rng(123);
    int samples = 100000;
    for (int s = 0; s < samples; ++s) {
        double x1 = uniform01(rng), x2 = uniform01(rng), y = uniform01(rng);
        if (x1 > x2) std::swap(x1, x2);
        // monotone in x, antitone in y
        CHECK(pwa.eval(x1, y) <= pwa.eval(x2, y) + 1e-12);
        double y1 = uniform01(rng), y2 = uniform01(rng);
        if (y1 > y2) std::swap(y1, y2);
        CHECK(pwa.eval(x1, y1) >= pwa.eval(x1, y2) - 1e-12);
        // condition 5 closure for x fixed, y < y'
        double lhs = pwa.eval(1.0, y1) - pwa.eval(x1, y1);
        double rhs = pwa.eval(1.0, y2) - pwa.eval(x1, y2);
        CHECK(lhs >= rhs - 1e-12);
    }
    // directional slopes on the containing triangle, from vertex differences
    for (int s = 0; s < samples; ++s) {
        double x = uniform01(rng), y = uniform01(rng);
        auto loc = locate(x, y, n);
        double sx, sy;
        if (loc.lower_left) {
            sx = (g.value(loc.vi[1], loc.vj[1]) - g.value(loc.vi[0], loc.vj[0])) * n;
            sy = (g.value(loc.vi[2], loc.vj[2]) - g.value(loc.vi[0], loc.vj[0])) * n;
        } else {
            sx = (g.value(loc.vi[0], loc.vj[0]) - g.value(loc.vi[2], loc.vj[2])) * n;
            sy = (g.value(loc.vi[0], loc.vj[0]) - g.value(loc.vi[1], loc.vj[1])) * n;
        }
        // the slope-x bound and its dual hold pointwise on the triangle
        CHECK(sx <= pwa.eval(x, y) + 1e-12);
        CHECK(sy >= pwa.eval(x, y) - 1.0 - 1e-12);
    }
}

TEST_CASE("grid csv round-trips") {
    std::mt19937_64 rng(5);
    GridFunction g = random_monotone_grid(6, rng);
    std::stringstream ss;
    write_grid_csv(g, ss);
    GridFunction back = read_grid_csv(ss);
    CHECK(back.n == g.n);
    CHECK(back.values == g.values);  // 17-digit emission round-trips doubles

    std::stringstream bad("nope\n");
    CHECK_THROWS_AS(read_grid_csv(bad), ParseError);
    std::stringstream trunc("n=4\n0,0,0,0,0\n");
    CHECK_THROWS_AS(read_grid_csv(trunc), ParseError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "matchcert/lp_model.hpp"
#include "matchcert/solver.hpp"
#include "matchcert/util.hpp"

using namespace matchcert;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// external command for tests: the bundled python driver when scipy is
// importable, otherwise empty
std::string python_driver() {
    static int ok = -1;
    if (ok < 0) ok = std::system("python3 -c 'import scipy.optimize' >/dev/null 2>&1") == 0 ? 1 : 0;
    if (!ok) return {};
    auto path = std::filesystem::path(__FILE__).parent_path().parent_path() / "tools" / "solve_lp.py";
    return "python3 " + path.string() + " {in} {out}";
}

}  // namespace

TEST_CASE("embedded simplex on one-variable programs") {
    SolverConfig cfg;
    {
        LpModel m;
        int t = m.add_var("t", 0.0, kInf);
        m.objective = {{t, 1.0}};
        m.add_row({{t, 1.0}}, RowSense::le, 3.0);
        LpSolution sol = solve(m, cfg);
        REQUIRE(sol.status == SolveStatus::optimal);
        CHECK(sol.objective_value == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(sol.assignment.at("t") == doctest::Approx(3.0).epsilon(1e-12));
    }
    {
        LpModel m;
        int t = m.add_var("t", 0.0, kInf);
        m.objective = {{t, 1.0}};
        m.add_row({{t, 1.0}}, RowSense::le, 1.0);
        m.add_row({{t, 1.0}}, RowSense::ge, 2.0);
        CHECK(solve(m, cfg).status == SolveStatus::infeasible);
    }
    {
        LpModel m;
        int t = m.add_var("t", 0.0, kInf);
        m.objective = {{t, 1.0}};
        m.add_row({{t, 1.0}}, RowSense::ge, 1.0);
        CHECK(solve(m, cfg).status == SolveStatus::unbounded);
    }
}

TEST_CASE("embedded simplex handles equalities, shifts and free variables") {
    SolverConfig cfg;
    // max x + y s.t. x + y = 2, x in [-1, 1.5], y free, y <= 3
    LpModel m;
    int x = m.add_var("x", -1.0, 1.5);
    int y = m.add_var("y", -kInf, kInf);
    m.objective = {{x, 1.0}, {y, 2.0}};
    m.add_row({{x, 1.0}, {y, 1.0}}, RowSense::eq, 2.0);
    m.add_row({{y, 1.0}}, RowSense::le, 3.0);
    LpSolution sol = solve(m, cfg);
    REQUIRE(sol.status == SolveStatus::optimal);
    // best: y = 3, x = -1 -> objective 5
    CHECK(sol.objective_value == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(sol.assignment.at("x") == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(sol.assignment.at("y") == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("embedded solutions are deterministic") {
    LpModel m = build_lower_lp(3);
    SolverConfig cfg;
    LpSolution a = solve(m, cfg);
    LpSolution b = solve(m, cfg);
    REQUIRE(a.status == SolveStatus::optimal);
    std::ostringstream sa, sb;
    write_solution(a, sa);
    write_solution(b, sb);
    CHECK(sa.str() == sb.str());
}

TEST_CASE("config validation") {
    LpModel m;
    int t = m.add_var("t", 0.0, 1.0);
    m.objective = {{t, 1.0}};
    SolverConfig cfg;
    cfg.feasibility_tolerance = 0.0;
    CHECK_THROWS_AS(solve(m, cfg), std::invalid_argument);
    cfg.feasibility_tolerance = 1.0;  // above the 1e-3 ceiling
    CHECK_THROWS_AS(solve(m, cfg), std::invalid_argument);
    cfg = SolverConfig{};
    cfg.time_limit_seconds = 0.0;
    CHECK_THROWS_AS(solve(m, cfg), std::invalid_argument);
    cfg = SolverConfig{};
    cfg.backend = SolverBackend::external;
    cfg.external_command.clear();
    CHECK_THROWS_AS(solve(m, cfg), BackendError);
}

TEST_CASE("solutions are re-validated against the model") {
    // a fake external solver returning an infeasible point
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "matchcert_fake_solver";
    fs::create_directories(dir);
    fs::path script = dir / "fake.sh";
    {
        std::ofstream out(script);
        out << "#!/bin/sh\nprintf 'status optimal\\nobjective 9\\nt 9\\n' > \"$2\"\n";
    }
    fs::permissions(script, fs::perms::owner_all);
    LpModel m;
    int t = m.add_var("t", 0.0, kInf);
    m.objective = {{t, 1.0}};
    m.add_row({{t, 1.0}}, RowSense::le, 3.0);
    SolverConfig cfg;
    cfg.backend = SolverBackend::external;
    cfg.external_command = script.string() + " {in} {out}";
    CHECK_THROWS_AS(solve(m, cfg), SolverToleranceError);
}

TEST_CASE("external backend agrees with embedded on the n=4 lower LP") {
    std::string driver = python_driver();
    if (driver.empty()) return;  // no scipy in this environment
    LpModel m = build_lower_lp(4);
    SolverConfig em;
    LpSolution a = solve(m, em);
    SolverConfig ex;
    ex.backend = SolverBackend::external;
    ex.external_command = driver;
    ex.feasibility_tolerance = 1e-6;
    LpSolution b = solve(m, ex);
    REQUIRE(a.status == SolveStatus::optimal);
    REQUIRE(b.status == SolveStatus::optimal);
    CHECK(std::abs(a.objective_value - b.objective_value) <= 1e-6);
}

TEST_CASE("polish keeps grid solutions strictly condition-feasible") {
    LpModel m = build_lower_lp(4);
    SolverConfig cfg;  // polish on by default
    LpSolution sol = solve(m, cfg);
    REQUIRE(sol.status == SolveStatus::optimal);
    GridFunction g = extract_grid_function(sol, 4);
    CHECK(check_conditions(g, CheckMode::strict, 0.0).all_pass());
    // raw vertex is close by: polish must not move the objective materially
    SolverConfig raw = cfg;
    raw.polish = false;
    LpSolution rawsol = solve(m, raw);
    CHECK(std::abs(rawsol.objective_value - sol.objective_value) <= 1e-5);
}

TEST_CASE("polish skips models with customized g bounds") {
    LpModel m = build_lower_lp(2);
    m.vars[m.g_var(1, 1)].lb = 0.25;
    m.vars[m.g_var(1, 1)].ub = 0.25;
    LpSolution sol = solve(m, SolverConfig{});
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.assignment.at("g_1_1") == 0.25);
}

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "matchcert/grid.hpp"

namespace matchcert {

enum class RowSense { le, ge, eq };

struct LpVariable {
    std::string name;
    double lb;
    double ub;  // +inf allowed
};

struct LpRow {
    std::vector<std::pair<int, double>> terms;  // sorted by variable index
    RowSense sense;
    double rhs;
};

enum class LpModelKind { generic, lower_bound, upper_bound };

// Sparse linear program, always a maximization. Immutable once built.
struct LpModel {
    std::vector<LpVariable> vars;
    std::vector<LpRow> rows;
    std::vector<std::pair<int, double>> objective;
    LpModelKind kind = LpModelKind::generic;
    int n = 0;                       // grid size for lower/upper models
    std::vector<std::string> notes;  // free-form metadata, emitted as comments

    int add_var(const std::string& name, double lb, double ub);
    // Merges duplicate variables, drops zero coefficients, keeps terms sorted.
    void add_row(std::vector<std::pair<int, double>> terms, RowSense sense, double rhs);

    int var_index(const std::string& name) const;  // -1 when absent
    int g_var(int i, int j) const;                 // grid models only
    std::string row_to_string(int row) const;

  private:
    std::unordered_map<std::string, int> index_;
};

enum class SolveStatus { optimal, infeasible, unbounded, error };

struct LpSolution {
    SolveStatus status = SolveStatus::error;
    double objective_value = 0.0;
    std::unordered_map<std::string, double> assignment;
};

struct Rational {
    long long num = 0;
    long long den = 1;
    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Policy for the inner minimum of the upper-bound objective: theta ranges
// over {0, gamma} only.
enum class ThetaSet { zero_and_gamma };

struct UpperBoundSpec {
    int n = 0;
    std::vector<std::pair<Rational, Rational>> points;  // outer evaluation set S
    ThetaSet theta_set = ThetaSet::zero_and_gamma;
};

// The seven outer evaluation points used for the reference upper bound:
// (0,0), (1,1), (0,1), (1,0), (23/40, 27/40), (1/2, 3/4), (13/30, 23/30).
std::vector<std::pair<Rational, Rational>> default_upper_points();

// Lower-bound LP on the n x n grid: maximize t subject to t <= ftilde(x_i, y_j)
// for all grid points, the inner minimum linearized with one auxiliary
// s_i_j_l per (i, j, l<j) bounded by one row per candidate k <= i, integrals
// as left Riemann sums with step 1/n, plus the strict discrete constraint
// families. Prefix variables p_i_j = sum_{d<i} g(x_d, y_j) keep rows sparse.
LpModel build_lower_lp(int n);

// Upper-bound LP: maximize t subject to, for each S point, the trapezoid
// objective row with the 1/(4n) correction, h auxiliaries for the two-point
// inner minimum, and the relaxed constraint families.
LpModel build_upper_lp(const UpperBoundSpec& spec);

// Exact variable/row counts of build_lower_lp(n). Documented closed forms:
//   g vars:  (n+1)^2
//   t vars:  1
//   s vars:  (n+1) * n(n+1)/2         (one per i and ordered pair l < j)
//   p vars:  n(n+1)
//   condition rows: 2n(n+1) monotone + n(n+1) slope-x + n(n+1) slope-y + n^2 closure
//   p rows:  n(n+1)
//   s rows:  (n+1)(n+2)/2 * n(n+1)/2  (candidates k <= i per s variable)
//   t rows:  (n+1)^2
struct LowerLpCensus {
    std::int64_t g_vars, s_vars, p_vars, total_vars;
    std::int64_t condition_rows, p_rows, s_rows, t_rows, total_rows;
};
LowerLpCensus lower_lp_census(int n);

// Plain-text interchange: sections Maximize / Subject To / Bounds / End,
// one named row per line, 17-significant-digit literals, deterministic
// byte-for-byte. See docs/lp-format.md.
void write_interchange(const LpModel& model, std::ostream& out);
void write_interchange_file(const LpModel& model, const std::string& path);
LpModel parse_interchange(std::istream& in);
LpModel parse_interchange_file(const std::string& path);

// Solution text: "status <word>", "objective <decimal>", then "<name>
// <decimal>" lines. parse_solution fills implied auxiliary values (p, s, h,
// t) for grid models when the file omits them, then validates every row
// within 1e-6 (throws SolverToleranceError naming the worst row).
LpSolution parse_solution(std::istream& in, const LpModel& model);
LpSolution parse_solution_file(const std::string& path, const LpModel& model);
void write_solution(const LpSolution& sol, std::ostream& out);
void write_solution_file(const LpSolution& sol, const std::string& path);

// Largest row violation of `values` (indexed like model.vars).
struct RowViolation {
    double amount = 0.0;
    int row = -1;
};
RowViolation max_violation(const LpModel& model, const std::vector<double>& values);

// Recomputes p/s/h auxiliaries and t from the g values so every auxiliary
// row holds exactly; returns the implied objective (min over t rows).
double recompute_auxiliaries(const LpModel& model, std::vector<double>& values);

// Grid of g values from an optimal solution. Values are clamped into [0,1];
// clamping beyond 1e-9 raises SolverToleranceError.
GridFunction extract_grid_function(const LpSolution& sol, int n);

}  // namespace matchcert

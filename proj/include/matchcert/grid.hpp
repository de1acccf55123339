#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace matchcert {

// Values of a rank function g on the (n+1)x(n+1) grid {0, 1/n, ..., 1}^2.
// value(i, j) holds g(i/n, j/n); i indexes x, j indexes y. A valid rank
// function is non-decreasing in i and non-increasing in j with entries in
// [0,1]; construction does not enforce that (check_conditions reports it).
struct GridFunction {
    int n = 0;
    std::vector<double> values;  // row-major, (n+1)*(n+1)

    GridFunction() = default;
    explicit GridFunction(int n_);

    double value(int i, int j) const { return values[static_cast<std::size_t>(i) * (n + 1) + j]; }
    double& value(int i, int j) { return values[static_cast<std::size_t>(i) * (n + 1) + j]; }

    static GridFunction constant(int n, double c);
};

// Grid CSV: first line "n=<int>", then n+1 rows of n+1 comma-separated
// decimals, row index = i.
void write_grid_csv(const GridFunction& g, std::ostream& out);
void write_grid_csv_file(const GridFunction& g, const std::string& path);
GridFunction read_grid_csv(std::istream& in);
GridFunction read_grid_csv_file(const std::string& path);

// Location of a point inside the anti-diagonal triangulation: the three
// enclosing grid vertices and the barycentric coefficients reproducing the
// point. Vertex order is right-angle corner first.
struct BarycentricLocation {
    std::array<int, 3> vi;  // x indices of the triangle vertices
    std::array<int, 3> vj;  // y indices
    std::array<double, 3> lambda;
    bool lower_left;  // which half of the cell
};

// Each cell is split by the hypotenuse joining (x_{i+1}, y_j) and
// (x_i, y_{j+1}); points on a hypotenuse or grid line go to the lower-left
// triangle. Throws std::domain_error outside the unit square.
BarycentricLocation locate(double x, double y, int n);

// Piecewise-affine extension of a grid function to the unit square.
// Immutable after construction; eval is pure and thread-safe.
struct PiecewiseAffineG {
    GridFunction grid;

    explicit PiecewiseAffineG(GridFunction g);
    double eval(double x, double y) const;
    double operator()(double x, double y) const { return eval(x, y); }
};

enum class CheckMode { strict, relaxed };

struct ConditionStatus {
    bool pass = true;
    double violation = 0.0;  // worst deficit over the family
    int i = -1, j = -1, l = -1;  // witness indices (l used by condition 5)
};

// Outcome of checking the five discrete rank-function conditions.
struct ConditionReport {
    CheckMode mode = CheckMode::strict;
    double tolerance = 0.0;
    std::array<ConditionStatus, 5> condition;  // [0]=range ... [4]=diagonal closure

    bool all_pass() const {
        for (const auto& c : condition)
            if (!c.pass) return false;
        return true;
    }
    std::string summary() const;
};

// Checks, in discrete form, the five conditions a rank function must obey:
//   1. entries in [0,1]
//   2. non-decreasing in i, non-increasing in j (adjacent pairs)
//   3. forward x-slope bounded by a g value (strict: g(x_i, y_{j+1}),
//      clamped to y_n at the boundary; relaxed: g(x_{i+1}, y_j))
//   4. forward y-slope at least g - 1 (strict: g(x_{i+1}, y_j), clamped to
//      x_n; relaxed: g(x_i, y_{j+1}))
//   5. g(x_n, y_j) - g(x_i, y_j) non-increasing in j (adjacent pairs)
// Slopes are evaluated as (difference) * n so that on dyadic-lattice grids
// every comparison is exact in double arithmetic.
ConditionReport check_conditions(const GridFunction& g, CheckMode mode, double tolerance = 0.0);

// g(x,y) = (min(1, e^x / 2) + 1 - min(1, e^y / 2)) / 2, the reference rank
// function the generalized-RANKING baseline uses.
double huang_reference(double x, double y);

// Samples a closed-form function on the (n+1)x(n+1) grid. Throws
// std::range_error if a sample leaves [0,1].
GridFunction sample_closed_form(const std::function<double(double, double)>& f, int n);

}  // namespace matchcert

#include "matchcert/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "matchcert/util.hpp"

namespace matchcert {

GridFunction::GridFunction(int n_) : n(n_) {
    if (n < 1) throw std::invalid_argument("grid size must be positive");
    values.assign(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
}

GridFunction GridFunction::constant(int n, double c) {
    GridFunction g(n);
    std::fill(g.values.begin(), g.values.end(), c);
    return g;
}

void write_grid_csv(const GridFunction& g, std::ostream& out) {
    out << "n=" << g.n << "\n";
    for (int i = 0; i <= g.n; ++i) {
        for (int j = 0; j <= g.n; ++j) {
            if (j) out << ",";
            out << fmt17(g.value(i, j));
        }
        out << "\n";
    }
}

void write_grid_csv_file(const GridFunction& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_grid_csv(g, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

GridFunction read_grid_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("n=", 0) != 0)
        throw ParseError("grid csv: expected leading \"n=<int>\" line");
    int n = std::atoi(line.c_str() + 2);
    if (n < 1) throw ParseError("grid csv: bad n");
    GridFunction g(n);
    for (int i = 0; i <= n; ++i) {
        if (!std::getline(in, line)) throw ParseError("grid csv: truncated at row " + std::to_string(i));
        std::stringstream row(line);
        std::string cell;
        for (int j = 0; j <= n; ++j) {
            if (!std::getline(row, cell, ',')) throw ParseError("grid csv: short row " + std::to_string(i));
            char* end = nullptr;
            double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || !std::isfinite(v))
                throw ParseError("grid csv: bad value at (" + std::to_string(i) + "," + std::to_string(j) + ")");
            g.value(i, j) = v;
        }
    }
    return g;
}

GridFunction read_grid_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_grid_csv(in);
}

namespace {

// Cell index and local coordinate along one axis. Snaps to the exact stored
// node coordinates fl(k/n) so grid nodes evaluate exactly.
inline void axis_locate(double x, int n, int& cell, double& frac) {
    double xn = x * n;
    int i = static_cast<int>(xn);
    if (i >= n) i = n - 1;
    // x may round to either side of a node coordinate; compare against the
    // actual node doubles.
    if (i + 1 < n && x >= static_cast<double>(i + 1) / n) {
        ++i;
    }
    if (x == static_cast<double>(i) / n) {
        frac = 0.0;
    } else if (x == static_cast<double>(i + 1) / n) {
        frac = 1.0;
    } else {
        frac = xn - i;
        if (frac < 0.0) frac = 0.0;
        if (frac > 1.0) frac = 1.0;
    }
    cell = i;
}

}  // namespace

BarycentricLocation locate(double x, double y, int n) {
    if (n < 1) throw std::invalid_argument("grid size must be positive");
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
        throw std::domain_error("locate: point outside the unit square");
    int i, j;
    double u, v;
    axis_locate(x, n, i, u);
    axis_locate(y, n, j, v);
    BarycentricLocation loc;
    double s = u + v;
    if (s <= 1.0) {
        // lower-left triangle, right angle at (i, j); preferred on ties
        loc.lower_left = true;
        loc.vi = {i, i + 1, i};
        loc.vj = {j, j, j + 1};
        loc.lambda = {1.0 - s, u, v};
    } else {
        loc.lower_left = false;
        loc.vi = {i + 1, i + 1, i};
        loc.vj = {j + 1, j, j + 1};
        loc.lambda = {s - 1.0, 1.0 - v, 1.0 - u};
    }
    return loc;
}

PiecewiseAffineG::PiecewiseAffineG(GridFunction g) : grid(std::move(g)) {
    if (grid.n < 1) throw std::invalid_argument("empty grid");
}

double PiecewiseAffineG::eval(double x, double y) const {
    BarycentricLocation loc = locate(x, y, grid.n);
    double v = loc.lambda[0] * grid.value(loc.vi[0], loc.vj[0]) +
               loc.lambda[1] * grid.value(loc.vi[1], loc.vj[1]) +
               loc.lambda[2] * grid.value(loc.vi[2], loc.vj[2]);
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return v;
}

namespace {

struct Worst {
    double deficit = 0.0;
    int i = -1, j = -1, l = -1;
    // slack >= 0 means satisfied; records the most negative slack
    void observe(double slack, int i_, int j_, int l_ = -1) {
        if (-slack > deficit) {
            deficit = -slack;
            i = i_;
            j = j_;
            l = l_;
        }
    }
    ConditionStatus status(double tol) const {
        ConditionStatus s;
        s.violation = deficit;
        s.pass = deficit <= tol;
        if (!s.pass) {
            s.i = i;
            s.j = j;
            s.l = l;
        }
        return s;
    }
};

}  // namespace

ConditionReport check_conditions(const GridFunction& g, CheckMode mode, double tolerance) {
    if (tolerance < 0.0) throw std::invalid_argument("tolerance must be nonnegative");
    const int n = g.n;
    const double nd = n;
    ConditionReport rep;
    rep.mode = mode;
    rep.tolerance = tolerance;

    Worst range;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            double v = g.value(i, j);
            range.observe(v, i, j);
            range.observe(1.0 - v, i, j);
        }
    rep.condition[0] = range.status(tolerance);

    Worst mono;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= n; ++j) mono.observe(g.value(i + 1, j) - g.value(i, j), i, j);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j < n; ++j) mono.observe(g.value(i, j) - g.value(i, j + 1), i, j);
    rep.condition[1] = mono.status(tolerance);

    Worst slope_x;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= n; ++j) {
            double lhs = (g.value(i + 1, j) - g.value(i, j)) * nd;
            double rhs = (mode == CheckMode::strict) ? g.value(i, std::min(j + 1, n))
                                                     : g.value(i + 1, j);
            slope_x.observe(rhs - lhs, i, j);
        }
    rep.condition[2] = slope_x.status(tolerance);

    Worst slope_y;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j < n; ++j) {
            double lhs = (g.value(i, j + 1) - g.value(i, j)) * nd;
            double rhs = (mode == CheckMode::strict) ? g.value(std::min(i + 1, n), j) - 1.0
                                                     : g.value(i, j + 1) - 1.0;
            slope_y.observe(lhs - rhs, i, j);
        }
    rep.condition[3] = slope_y.status(tolerance);

    Worst closure;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double now = g.value(n, j) - g.value(i, j);
            double next = g.value(n, j + 1) - g.value(i, j + 1);
            closure.observe(now - next, i, j, j + 1);
        }
    rep.condition[4] = closure.status(tolerance);

    return rep;
}

std::string ConditionReport::summary() const {
    static const char* names[5] = {"range", "monotone", "slope-x", "slope-y", "closure"};
    std::ostringstream out;
    out << (mode == CheckMode::strict ? "strict" : "relaxed") << " tol=" << fmt17(tolerance);
    for (int c = 0; c < 5; ++c) {
        const auto& s = condition[c];
        out << "\ncondition " << (c + 1) << " (" << names[c] << "): " << (s.pass ? "pass" : "FAIL");
        if (!s.pass) {
            out << " violation=" << fmt17(s.violation) << " at i=" << s.i << " j=" << s.j;
            if (s.l >= 0) out << " l=" << s.l;
        }
    }
    return out.str();
}

double huang_reference(double x, double y) {
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
        throw std::domain_error("huang_reference: point outside the unit square");
    double hx = std::min(1.0, 0.5 * std::exp(x));
    double hy = std::min(1.0, 0.5 * std::exp(y));
    // Evaluate as an exact sum of two dyadic terms: the x part lies in
    // [1/4, 1/2], the y part in [0, 1/4], so after snapping each to the
    // 2^-40 lattice the addition is exact. The diagonal-difference rows
    // g(1,y) - g(x,y), which are exactly tight for this separable form,
    // then cancel to exactly zero in double arithmetic instead of carrying
    // per-entry rounding dust. The value differs from the real formula by
    // less than 2^-40.
    double ax = std::nearbyint(0.5 * hx * 0x1.0p40) * 0x1.0p-40;
    double by = std::nearbyint(0.5 * (1.0 - hy) * 0x1.0p40) * 0x1.0p-40;
    return ax + by;
}

GridFunction sample_closed_form(const std::function<double(double, double)>& f, int n) {
    GridFunction g(n);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            double v = f(static_cast<double>(i) / n, static_cast<double>(j) / n);
            if (!(v >= 0.0 && v <= 1.0))
                throw std::range_error("sample_closed_form: value outside [0,1] at (" +
                                       std::to_string(i) + "," + std::to_string(j) + ")");
            g.value(i, j) = v;
        }
    return g;
}

}  // namespace matchcert

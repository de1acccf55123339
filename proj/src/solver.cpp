#include "matchcert/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <vector>

#include "matchcert/util.hpp"

namespace matchcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Embedded dense simplex.
//
// The model is brought to computational form
//     max c'y   s.t.  A y (<=|=) b,  y >= 0,  b >= 0
// by shifting variables with a finite lower bound, negating variables with
// only an upper bound, splitting free variables, and turning finite upper
// bounds into rows. Phase 1 minimizes the sum of artificials (added only
// where a slack cannot start basic); phase 2 optimizes c. Entering and
// leaving variables follow Bland's rule, so pivoting is deterministic and
// cannot cycle.

struct StandardForm {
    struct Col {
        int var;       // model variable this column feeds
        double scale;  // x = scale * y + shift (free vars get two columns)
        double shift;
    };
    std::vector<Col> cols;
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    std::vector<bool> is_eq;
    std::vector<double> c;
};

StandardForm to_standard(const LpModel& m) {
    StandardForm sf;
    const std::size_t nv = m.vars.size();
    std::vector<int> col_of(nv, -1), col_neg(nv, -1);
    for (std::size_t v = 0; v < nv; ++v) {
        const auto& var = m.vars[v];
        if (var.lb > var.ub) throw std::invalid_argument("variable with empty bound interval");
        col_of[v] = static_cast<int>(sf.cols.size());
        if (std::isfinite(var.lb)) {
            sf.cols.push_back({static_cast<int>(v), 1.0, var.lb});
        } else if (std::isfinite(var.ub)) {
            sf.cols.push_back({static_cast<int>(v), -1.0, var.ub});
        } else {
            sf.cols.push_back({static_cast<int>(v), 1.0, 0.0});
            col_neg[v] = static_cast<int>(sf.cols.size());
            sf.cols.push_back({static_cast<int>(v), -1.0, 0.0});
        }
    }
    const std::size_t nc = sf.cols.size();
    auto add_row = [&](const std::vector<std::pair<int, double>>& terms, double rhs, bool eq) {
        std::vector<double> row(nc, 0.0);
        for (const auto& [v, coef] : terms) {
            const auto& col = sf.cols[col_of[v]];
            row[col_of[v]] += coef * col.scale;
            if (col_neg[v] >= 0) row[col_neg[v]] += coef * sf.cols[col_neg[v]].scale;
            rhs -= coef * col.shift;
        }
        sf.A.push_back(std::move(row));
        sf.b.push_back(rhs);
        sf.is_eq.push_back(eq);
    };
    for (const LpRow& r : m.rows) {
        if (r.sense == RowSense::ge) {
            std::vector<std::pair<int, double>> neg = r.terms;
            for (auto& [v, coef] : neg) coef = -coef;
            add_row(neg, -r.rhs, false);
        } else {
            add_row(r.terms, r.rhs, r.sense == RowSense::eq);
        }
    }
    for (std::size_t v = 0; v < nv; ++v) {
        const auto& var = m.vars[v];
        if (std::isfinite(var.lb) && std::isfinite(var.ub)) {
            // x <= ub becomes y <= ub - lb (an equality pin when ub == lb)
            add_row({{static_cast<int>(v), 1.0}}, var.ub, var.ub == var.lb);
        }
    }
    sf.c.assign(nc, 0.0);
    for (const auto& [v, coef] : m.objective) {
        sf.c[col_of[v]] += coef * sf.cols[col_of[v]].scale;
        if (col_neg[v] >= 0) sf.c[col_neg[v]] += coef * sf.cols[col_neg[v]].scale;
    }
    return sf;
}

class Simplex {
  public:
    explicit Simplex(const StandardForm& sf) : sf_(sf) {}

    SolveStatus run(std::vector<double>& x_out, double& obj_out) {
        const std::size_t m = sf_.A.size();
        ns_ = sf_.cols.size();
        // layout: structural | slack (per inequality) | artificial | rhs
        slack_col_.assign(m, -1);
        std::size_t nslack = 0;
        for (std::size_t r = 0; r < m; ++r)
            if (!sf_.is_eq[r]) slack_col_[r] = static_cast<int>(ns_ + nslack++);
        std::vector<int> art_col(m, -1);
        std::size_t nart = 0;
        for (std::size_t r = 0; r < m; ++r) {
            bool neg = sf_.b[r] < 0.0;
            // a <= row with nonnegative rhs starts on its slack; anything
            // else needs an artificial
            if (sf_.is_eq[r] || neg) art_col[r] = static_cast<int>(nart++);
        }
        art_base_ = static_cast<int>(ns_ + nslack);
        total_ = ns_ + nslack + nart;
        T_.assign(m + 1, std::vector<double>(total_ + 1, 0.0));
        basis_.assign(m, -1);
        for (std::size_t r = 0; r < m; ++r) {
            double sgn = sf_.b[r] < 0.0 ? -1.0 : 1.0;
            for (std::size_t k = 0; k < ns_; ++k) T_[r][k] = sgn * sf_.A[r][k];
            if (slack_col_[r] >= 0) T_[r][slack_col_[r]] = sgn;
            T_[r][total_] = sgn * sf_.b[r];
            if (art_col[r] >= 0) {
                T_[r][art_base_ + art_col[r]] = 1.0;
                basis_[r] = art_base_ + art_col[r];
            } else {
                basis_[r] = slack_col_[r];
            }
        }
        if (nart > 0) {
            auto& z = T_[m];
            for (std::size_t r = 0; r < m; ++r) {
                if (art_col[r] < 0) continue;
                for (std::size_t k = 0; k <= total_; ++k) z[k] -= T_[r][k];
            }
            for (std::size_t a = 0; a < nart; ++a) z[art_base_ + a] = 0.0;
            if (!iterate(1)) return SolveStatus::error;
            if (T_[m][total_] < -1e-7) return SolveStatus::infeasible;
            drive_out_artificials();
        }
        for (std::size_t k = 0; k <= total_; ++k) T_[m][k] = 0.0;
        for (std::size_t k = 0; k < ns_; ++k) T_[m][k] = -sf_.c[k];
        for (std::size_t r = 0; r < m; ++r) {
            int bv = basis_[r];
            double cb = (bv >= 0 && bv < static_cast<int>(ns_)) ? sf_.c[bv] : 0.0;
            if (cb == 0.0) continue;
            for (std::size_t k = 0; k <= total_; ++k) T_[m][k] += cb * T_[r][k];
        }
        if (!iterate(2)) return SolveStatus::unbounded;
        x_out.assign(ns_, 0.0);
        for (std::size_t r = 0; r < m; ++r)
            if (basis_[r] >= 0 && basis_[r] < static_cast<int>(ns_))
                x_out[basis_[r]] = T_[r][total_];
        obj_out = T_[m][total_];
        return SolveStatus::optimal;
    }

  private:
    bool iterate(int phase) {
        const std::size_t m = sf_.A.size();
        const double eps = 1e-10;
        for (;;) {
            // Bland: lowest-index improving column
            std::size_t enter = total_;
            std::size_t limit = phase == 1 ? total_ : static_cast<std::size_t>(art_base_);
            for (std::size_t k = 0; k < limit; ++k) {
                if (T_[m][k] < -eps) {
                    enter = k;
                    break;
                }
            }
            if (enter == total_) return true;
            std::size_t leave = m;
            double best = kInf;
            for (std::size_t r = 0; r < m; ++r) {
                double a = T_[r][enter];
                if (a <= eps) continue;
                double ratio = T_[r][total_] / a;
                if (leave == m || ratio < best ||
                    (ratio == best && basis_[r] < basis_[leave])) {
                    best = ratio;
                    leave = r;
                }
            }
            if (leave == m) return false;
            pivot(leave, enter);
        }
    }

    void pivot(std::size_t r, std::size_t c) {
        const std::size_t m = sf_.A.size();
        double inv = 1.0 / T_[r][c];
        for (std::size_t k = 0; k <= total_; ++k) T_[r][k] *= inv;
        T_[r][c] = 1.0;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == r) continue;
            double f = T_[i][c];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k <= total_; ++k) T_[i][k] -= f * T_[r][k];
            T_[i][c] = 0.0;
        }
        basis_[r] = static_cast<int>(c);
    }

    // basic artificials at level zero after phase 1 get pivoted onto any
    // structural/slack column; an all-zero row is redundant and stays
    void drive_out_artificials() {
        const std::size_t m = sf_.A.size();
        for (std::size_t r = 0; r < m; ++r) {
            if (basis_[r] < art_base_) continue;
            for (std::size_t k = 0; k < static_cast<std::size_t>(art_base_); ++k) {
                if (std::abs(T_[r][k]) > 1e-9) {
                    pivot(r, k);
                    break;
                }
            }
        }
    }

    const StandardForm& sf_;
    std::vector<std::vector<double>> T_;
    std::vector<int> basis_;
    std::vector<int> slack_col_;
    std::size_t ns_ = 0, total_ = 0;
    int art_base_ = 0;
};

LpSolution solve_embedded(const LpModel& m) {
    StandardForm sf = to_standard(m);
    Simplex sx(sf);
    std::vector<double> y;
    double obj = 0.0;
    LpSolution sol;
    sol.status = sx.run(y, obj);
    if (sol.status != SolveStatus::optimal) return sol;
    std::vector<double> x(m.vars.size(), 0.0);
    std::vector<bool> shifted(m.vars.size(), false);
    for (std::size_t k = 0; k < sf.cols.size(); ++k) {
        const auto& col = sf.cols[k];
        x[col.var] += col.scale * y[k];
        if (!shifted[col.var]) {
            x[col.var] += col.shift;
            shifted[col.var] = true;
        }
    }
    double cobj = 0.0;
    for (const auto& [v, coef] : m.objective) cobj += coef * x[v];
    sol.objective_value = cobj;
    for (std::size_t v = 0; v < m.vars.size(); ++v) sol.assignment[m.vars[v].name] = x[v];
    return sol;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char ch : s) {
        if (ch == '\'')
            out += "'\\''";
        else
            out += ch;
    }
    out += "'";
    return out;
}

LpSolution solve_external(const LpModel& m, const SolverConfig& cfg) {
    if (cfg.external_command.empty())
        throw BackendError("external backend selected but no command configured "
                           "(set MATCHCERT_SOLVER or SolverConfig::external_command)");
    namespace fs = std::filesystem;
    fs::path dir = cfg.work_dir.empty() ? fs::temp_directory_path() : fs::path(cfg.work_dir);
    fs::create_directories(dir);
    // scratch names carry a per-call tag so concurrent solves never collide
    static std::atomic<std::uint64_t> counter{0};
    std::uint64_t tag = splitmix64((static_cast<std::uint64_t>(m.rows.size()) << 20) ^
                                   m.vars.size() ^ (counter.fetch_add(1) << 48));
    fs::path in_path = dir / ("matchcert_" + hex64(tag) + ".lp");
    fs::path out_path = dir / ("matchcert_" + hex64(tag) + ".sol");
    write_interchange_file(m, in_path.string());

    std::string cmd = cfg.external_command;
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        std::size_t at = 0;
        while ((at = s.find(from, at)) != std::string::npos) {
            s.replace(at, from.size(), to);
            at += to.size();
        }
    };
    replace_all(cmd, "{in}", shell_quote(in_path.string()));
    replace_all(cmd, "{out}", shell_quote(out_path.string()));
    cmd = "timeout " + std::to_string(static_cast<long long>(cfg.time_limit_seconds)) + " " + cmd;
    int rc = std::system(cmd.c_str());
    std::error_code ec;
    if (rc != 0) {
        fs::remove(in_path, ec);
        throw BackendError("external solver failed (exit " + std::to_string(rc) + "): " + cmd);
    }
    LpSolution sol = parse_solution_file(out_path.string(), m);
    fs::remove(in_path, ec);
    fs::remove(out_path, ec);
    return sol;
}

}  // namespace

SolverConfig default_solver_config() {
    SolverConfig cfg;
    if (const char* env = std::getenv("MATCHCERT_SOLVER"); env && *env) {
        cfg.backend = SolverBackend::external;
        cfg.external_command = env;
    }
    return cfg;
}

bool polish_grid_solution(const LpModel& m, LpSolution& sol) {
    if (m.kind != LpModelKind::lower_bound || sol.status != SolveStatus::optimal) return false;
    const int n = m.n;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            const auto& v = m.vars[m.g_var(i, j)];
            if (v.lb != 0.0 || v.ub != 1.0) return false;  // bound-customized model
        }
    GridFunction raw(n);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            raw.value(i, j) = sol.assignment.at(m.vars[m.g_var(i, j)].name);
    double eps_raw = 0.0;
    for (const auto& c : check_conditions(raw, CheckMode::strict, 0.0).condition)
        eps_raw = std::max(eps_raw, c.violation);
    if (eps_raw > 1e-7) return false;  // not solver roundoff; leave untouched

    // theta sized so g_safe's slack (>= 1/(16 n^2) per family row) absorbs
    // both the raw violations and the lattice rounding of every row
    const double lattice = 0x1.0p-40;
    double theta = 32.0 * n * n * (eps_raw + (2.0 * n + 2.0) * 0.5 * lattice);
    theta = std::min(theta, 1e-4);
    GridFunction polished(n);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            double x = static_cast<double>(i) / n, y = static_cast<double>(j) / n;
            double safe = 0.5 + x / 8.0 - y / 8.0 - x * y / 16.0;
            double blended = (1.0 - theta) * raw.value(i, j) + theta * safe;
            double snapped = std::nearbyint(blended * 0x1.0p40) * lattice;
            polished.value(i, j) = std::min(1.0, std::max(0.0, snapped));
        }
    if (!check_conditions(polished, CheckMode::strict, 0.0).all_pass()) return false;

    std::vector<double> x(m.vars.size(), 0.0);
    for (const auto& [name, v] : sol.assignment) x[m.var_index(name)] = v;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) x[m.g_var(i, j)] = polished.value(i, j);
    double t = recompute_auxiliaries(m, x);
    for (std::size_t v = 0; v < m.vars.size(); ++v) sol.assignment[m.vars[v].name] = x[v];
    sol.objective_value = t;
    return true;
}

LpSolution solve(const LpModel& m, const SolverConfig& cfg) {
    if (cfg.feasibility_tolerance <= 0.0 || cfg.feasibility_tolerance > 1e-3)
        throw std::invalid_argument("feasibility_tolerance must lie in (0, 1e-3]");
    if (cfg.time_limit_seconds <= 0.0) throw std::invalid_argument("time_limit must be positive");
    LpSolution sol = cfg.backend == SolverBackend::embedded ? solve_embedded(m)
                                                            : solve_external(m, cfg);
    if (sol.status != SolveStatus::optimal) return sol;
    if (cfg.polish) polish_grid_solution(m, sol);
    std::vector<double> x(m.vars.size(), 0.0);
    for (std::size_t v = 0; v < m.vars.size(); ++v) {
        auto it = sol.assignment.find(m.vars[v].name);
        if (it == sol.assignment.end())
            throw SolverToleranceError("solution missing variable " + m.vars[v].name);
        x[v] = it->second;
    }
    RowViolation worst = max_violation(m, x);
    if (worst.amount > cfg.feasibility_tolerance) {
        std::string what = "solution fails validation: ";
        what += worst.row >= 0 ? m.row_to_string(worst.row)
                               : ("bounds of " + m.vars[-1 - worst.row].name);
        what += " violated by " + fmt17(worst.amount);
        throw SolverToleranceError(what);
    }
    return sol;
}

}  // namespace matchcert

#include "matchcert/lp_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "matchcert/util.hpp"

namespace matchcert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int LpModel::add_var(const std::string& name, double lb, double ub) {
    if (index_.count(name)) throw std::invalid_argument("duplicate variable " + name);
    int id = static_cast<int>(vars.size());
    vars.push_back({name, lb, ub});
    index_.emplace(name, id);
    return id;
}

void LpModel::add_row(std::vector<std::pair<int, double>> terms, RowSense sense, double rhs) {
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> merged;
    merged.reserve(terms.size());
    for (const auto& [v, c] : terms) {
        if (v < 0 || v >= static_cast<int>(vars.size()))
            throw std::invalid_argument("row references undeclared variable");
        if (!merged.empty() && merged.back().first == v)
            merged.back().second += c;
        else
            merged.emplace_back(v, c);
    }
    std::erase_if(merged, [](const auto& t) { return t.second == 0.0; });
    rows.push_back({std::move(merged), sense, rhs});
}

int LpModel::var_index(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

int LpModel::g_var(int i, int j) const {
    if (kind == LpModelKind::generic || n == 0) throw std::logic_error("not a grid model");
    int v = var_index("g_" + std::to_string(i) + "_" + std::to_string(j));
    if (v < 0) throw std::logic_error("grid model lacks g variables");
    return v;
}

std::string LpModel::row_to_string(int r) const {
    const LpRow& row = rows[r];
    std::ostringstream out;
    out << "c" << r << ":";
    bool first = true;
    for (const auto& [v, c] : row.terms) {
        double a = c;
        if (first) {
            out << " ";
            if (a < 0) {
                out << "- ";
                a = -a;
            }
            first = false;
        } else {
            out << (a < 0 ? " - " : " + ");
            a = std::abs(a);
        }
        if (a != 1.0) out << fmt17(a) << " ";
        out << vars[v].name;
    }
    if (first) out << " 0";  // empty row
    switch (row.sense) {
        case RowSense::le: out << " <= "; break;
        case RowSense::ge: out << " >= "; break;
        case RowSense::eq: out << " = "; break;
    }
    out << fmt17(row.rhs);
    return out.str();
}

std::vector<std::pair<Rational, Rational>> default_upper_points() {
    return {{{0, 1}, {0, 1}}, {{1, 1}, {1, 1}}, {{0, 1}, {1, 1}}, {{1, 1}, {0, 1}},
            {{23, 40}, {27, 40}}, {{1, 2}, {3, 4}}, {{13, 30}, {23, 30}}};
}

namespace {

std::string g_name(int i, int j) { return "g_" + std::to_string(i) + "_" + std::to_string(j); }

// Shared constraint families. Strict forms are the ones a grid must satisfy
// before piecewise-affine extension; relaxed forms are what any valid rank
// function satisfies after discretization (mean value theorem plus
// monotonicity), including the x = 1 column for the slope-y family.
void add_condition_rows(LpModel& m, bool strict) {
    const int n = m.n;
    const double nd = n;
    auto g = [&](int i, int j) { return m.g_var(i, j); };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= n; ++j)
            m.add_row({{g(i, j), 1.0}, {g(i + 1, j), -1.0}}, RowSense::le, 0.0);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j < n; ++j)
            m.add_row({{g(i, j + 1), 1.0}, {g(i, j), -1.0}}, RowSense::le, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= n; ++j) {
            // n*(g(i+1,j) - g(i,j)) <= g(i, j+1)   [strict; j+1 clamped]
            // n*(g(i+1,j) - g(i,j)) <= g(i+1, j)   [relaxed]
            int ri = strict ? i : i + 1;
            int rj = strict ? std::min(j + 1, n) : j;
            m.add_row({{g(i + 1, j), nd}, {g(i, j), -nd}, {g(ri, rj), -1.0}}, RowSense::le, 0.0);
        }
    if (strict) {
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j < n; ++j) {
                // n*(g(i,j+1) - g(i,j)) >= g(i+1, j) - 1   [i+1 clamped]
                int ri = std::min(i + 1, n);
                m.add_row({{g(i, j + 1), nd}, {g(i, j), -nd}, {g(ri, j), -1.0}}, RowSense::ge,
                          -1.0);
            }
    } else {
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j < n; ++j)
                // n*(g(i,j+1) - g(i,j)) >= g(i, j+1) - 1
                m.add_row({{g(i, j + 1), nd}, {g(i, j), -nd}, {g(i, j + 1), -1.0}}, RowSense::ge,
                          -1.0);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            // (g(n,j) - g(i,j)) - (g(n,j+1) - g(i,j+1)) >= 0
            m.add_row({{g(n, j), 1.0}, {g(i, j), -1.0}, {g(n, j + 1), -1.0}, {g(i, j + 1), 1.0}},
                      RowSense::ge, 0.0);
}

}  // namespace

LpModel build_lower_lp(int n) {
    if (n < 2) throw std::invalid_argument("build_lower_lp: n must be at least 2");
    LpModel m;
    m.kind = LpModelKind::lower_bound;
    m.n = n;
    m.notes.push_back("matchcert kind=lower n=" + std::to_string(n));
    const int N = n + 1;
    const double nd = n;
    const double inv = 1.0 / nd;

    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) m.add_var(g_name(i, j), 0.0, 1.0);
    int t = m.add_var("t", 0.0, kInf);
    m.objective = {{t, 1.0}};

    // s_i_j_l models min_{k<=i} of the inner bracket at (x_i, y_j), y_l
    std::vector<int> s_idx(static_cast<std::size_t>(N) * N * N, -1);
    auto s_at = [&](int i, int j, int l) -> int& {
        return s_idx[(static_cast<std::size_t>(i) * N + j) * N + l];
    };
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            for (int l = 0; l < j; ++l)
                s_at(i, j, l) = m.add_var("s_" + std::to_string(i) + "_" + std::to_string(j) +
                                              "_" + std::to_string(l),
                                          0.0, kInf);
    // p_i_j = sum_{d<i} g(x_d, y_j)
    std::vector<int> p_idx(static_cast<std::size_t>(N) * N, -1);
    auto p_at = [&](int i, int j) -> int& { return p_idx[static_cast<std::size_t>(i) * N + j]; };
    for (int i = 1; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            p_at(i, j) = m.add_var("p_" + std::to_string(i) + "_" + std::to_string(j), 0.0, kInf);

    add_condition_rows(m, /*strict=*/true);

    for (int j = 0; j <= n; ++j)
        for (int i = 1; i <= n; ++i) {
            if (i == 1)
                m.add_row({{p_at(1, j), 1.0}, {m.g_var(0, j), -1.0}}, RowSense::eq, 0.0);
            else
                m.add_row({{p_at(i, j), 1.0}, {p_at(i - 1, j), -1.0}, {m.g_var(i - 1, j), -1.0}},
                          RowSense::eq, 0.0);
        }

    // s_i_j_l <= 1 - g(x_k,y_l) + (1/n) sum_{d<k} g(x_d,y_l)
    //              + (1/n) sum_{d=k..i-1} g(x_d,y_j)          for every k <= i
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            for (int l = 0; l < j; ++l)
                for (int k = 0; k <= i; ++k) {
                    std::vector<std::pair<int, double>> terms;
                    terms.emplace_back(s_at(i, j, l), 1.0);
                    terms.emplace_back(m.g_var(k, l), 1.0);
                    if (k >= 1) terms.emplace_back(p_at(k, l), -inv);
                    if (i >= 1) terms.emplace_back(p_at(i, j), -inv);
                    if (k >= 1) terms.emplace_back(p_at(k, j), inv);
                    m.add_row(std::move(terms), RowSense::le, 1.0);
                }

    // t <= (1-x_i)(1-y_j) + (1-y_j)(1/n) p(i,j) + (1/n) sum_{l<j} s(i,j,l)
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            double yj = static_cast<double>(j) / nd;
            std::vector<std::pair<int, double>> terms;
            terms.emplace_back(t, 1.0);
            if (i >= 1) terms.emplace_back(p_at(i, j), -(1.0 - yj) * inv);
            for (int l = 0; l < j; ++l) terms.emplace_back(s_at(i, j, l), -inv);
            m.add_row(std::move(terms), RowSense::le,
                      (1.0 - static_cast<double>(i) / nd) * (1.0 - yj));
        }
    return m;
}

LowerLpCensus lower_lp_census(int n) {
    const std::int64_t N = n + 1;
    LowerLpCensus c;
    c.g_vars = N * N;
    c.s_vars = N * (static_cast<std::int64_t>(n) * N / 2);
    c.p_vars = static_cast<std::int64_t>(n) * N;
    c.total_vars = c.g_vars + 1 + c.s_vars + c.p_vars;
    c.condition_rows = 2 * n * N + n * N + n * N + static_cast<std::int64_t>(n) * n;
    c.p_rows = static_cast<std::int64_t>(n) * N;
    c.s_rows = (N * (N + 1) / 2) * (static_cast<std::int64_t>(n) * N / 2);
    c.t_rows = N * N;
    c.total_rows = c.condition_rows + c.p_rows + c.s_rows + c.t_rows;
    return c;
}

LpModel build_upper_lp(const UpperBoundSpec& spec) {
    const int n = spec.n;
    if (n < 2) throw std::invalid_argument("build_upper_lp: n must be at least 2");
    if (spec.points.empty()) throw std::invalid_argument("build_upper_lp: empty point set");
    LpModel m;
    m.kind = LpModelKind::upper_bound;
    m.n = n;
    m.notes.push_back("matchcert kind=upper n=" + std::to_string(n));
    const double nd = n;
    const double inv = 1.0 / nd;

    // Round the rational S points to grid nodes; reject anything farther
    // than half a cell.
    std::vector<std::pair<int, int>> S;
    for (const auto& [rx, ry] : spec.points) {
        auto snap = [&](const Rational& r) {
            if (r.den <= 0) throw std::invalid_argument("upper LP: bad rational");
            long long k = std::llround(static_cast<double>(r.num) * n / r.den);
            if (k < 0 || k > n || std::llabs(2 * (r.num * n - k * r.den)) > r.den)
                throw std::invalid_argument("upper LP: S point farther than 1/(2n) from the grid");
            return static_cast<int>(k);
        };
        int k = snap(rx), l = snap(ry);
        S.emplace_back(k, l);
        m.notes.push_back("S " + std::to_string(rx.num) + "/" + std::to_string(rx.den) + "," +
                          std::to_string(ry.num) + "/" + std::to_string(ry.den) + " -> " +
                          std::to_string(k) + "/" + std::to_string(n) + "," + std::to_string(l) +
                          "/" + std::to_string(n));
    }

    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) m.add_var(g_name(i, j), 0.0, 1.0);
    int t = m.add_var("t", 0.0, kInf);
    m.objective = {{t, 1.0}};

    // h_p_j: inner minimum over theta in {0, x_k} at height y_j
    std::vector<std::vector<int>> h(S.size());
    for (std::size_t p = 0; p < S.size(); ++p) {
        int l = S[p].second;
        if (l == 0) continue;
        h[p].resize(l + 1);
        for (int j = 0; j <= l; ++j)
            h[p][j] =
                m.add_var("h_" + std::to_string(p) + "_" + std::to_string(j), 0.0, kInf);
    }

    add_condition_rows(m, /*strict=*/false);

    for (std::size_t p = 0; p < S.size(); ++p) {
        auto [k, l] = S[p];
        if (l == 0) continue;
        for (int j = 0; j <= l; ++j) {
            // theta = 0: h <= 1 - g(0,j) + (1/n) sum_{d=1..k} g(d, l)
            std::vector<std::pair<int, double>> t0{{h[p][j], 1.0}, {m.g_var(0, j), 1.0}};
            for (int d = 1; d <= k; ++d) t0.emplace_back(m.g_var(d, l), -inv);
            m.add_row(std::move(t0), RowSense::le, 1.0);
            // theta = x_k: h <= 1 - g(k,j) + (1/n) sum_{d=1..k} g(d, j)
            std::vector<std::pair<int, double>> t1{{h[p][j], 1.0}, {m.g_var(k, j), 1.0}};
            for (int d = 1; d <= k; ++d) t1.emplace_back(m.g_var(d, j), -inv);
            m.add_row(std::move(t1), RowSense::le, 1.0);
        }
    }

    // t <= (1-x_k)(1-y_l) + (1-y_l)(1/n) sum_{i=1..k} g(i,l)
    //      + (1/n) [h_0/2 + h_1 + ... + h_{l-1} + h_l/2] + 1/(4n)
    for (std::size_t p = 0; p < S.size(); ++p) {
        auto [k, l] = S[p];
        double yl = static_cast<double>(l) / nd;
        std::vector<std::pair<int, double>> terms{{t, 1.0}};
        for (int d = 1; d <= k; ++d) terms.emplace_back(m.g_var(d, l), -(1.0 - yl) * inv);
        for (int j = 0; j <= l && l >= 1; ++j) {
            double w = (j == 0 || j == l) ? 0.5 : 1.0;
            terms.emplace_back(h[p][j], -w * inv);
        }
        m.add_row(std::move(terms),
                  RowSense::le,
                  (1.0 - static_cast<double>(k) / nd) * (1.0 - yl) + 1.0 / (4.0 * nd));
    }
    return m;
}

// ---------------------------------------------------------------------------
// interchange text

namespace {

void write_expr(std::ostream& out, const LpModel& m,
                const std::vector<std::pair<int, double>>& terms) {
    bool first = true;
    for (const auto& [v, c] : terms) {
        double a = c;
        if (first) {
            if (a < 0) {
                out << "- ";
                a = -a;
            }
            first = false;
        } else {
            out << (a < 0 ? " - " : " + ");
            a = std::abs(a);
        }
        if (a != 1.0) out << fmt17(a) << " ";
        out << m.vars[v].name;
    }
    if (first) out << "0";
}

}  // namespace

void write_interchange(const LpModel& m, std::ostream& out) {
    for (const auto& note : m.notes) out << "\\ " << note << "\n";
    out << "Maximize\n";
    write_expr(out, m, m.objective);
    out << "\nSubject To\n";
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        out << "c" << r << ": ";
        write_expr(out, m, m.rows[r].terms);
        switch (m.rows[r].sense) {
            case RowSense::le: out << " <= "; break;
            case RowSense::ge: out << " >= "; break;
            case RowSense::eq: out << " = "; break;
        }
        out << fmt17(m.rows[r].rhs) << "\n";
    }
    out << "Bounds\n";
    for (const auto& v : m.vars) {
        bool lf = std::isfinite(v.lb), uf = std::isfinite(v.ub);
        if (lf && uf)
            out << fmt17(v.lb) << " <= " << v.name << " <= " << fmt17(v.ub) << "\n";
        else if (lf)
            out << v.name << " >= " << fmt17(v.lb) << "\n";
        else if (uf)
            out << v.name << " <= " << fmt17(v.ub) << "\n";
        else
            out << v.name << " free\n";
    }
    out << "End\n";
}

void write_interchange_file(const LpModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_interchange(m, out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

bool is_number_token(const std::string& tok) {
    char* end = nullptr;
    std::strtod(tok.c_str(), &end);
    return end != tok.c_str() && *end == '\0';
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> toks;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t b = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > b) toks.push_back(line.substr(b, i - b));
    }
    return toks;
}

// expr := ["-"] term (("+"|"-") term)*, term := [coef] name
std::vector<std::pair<std::string, double>> parse_expr(const std::vector<std::string>& toks,
                                                       std::size_t from, std::size_t to) {
    std::vector<std::pair<std::string, double>> terms;
    double sign = 1.0;
    double coef = 1.0;
    bool have_coef = false;
    for (std::size_t i = from; i < to; ++i) {
        const std::string& tok = toks[i];
        if (tok == "+" || tok == "-") {
            if (have_coef) throw ParseError("lp parse: dangling coefficient");
            sign = (tok == "-") ? -1.0 : 1.0;
        } else if (is_number_token(tok)) {
            if (have_coef) throw ParseError("lp parse: two coefficients in a row");
            coef = std::strtod(tok.c_str(), nullptr);
            have_coef = true;
        } else {
            terms.emplace_back(tok, sign * coef);
            sign = 1.0;
            coef = 1.0;
            have_coef = false;
        }
    }
    if (have_coef) {
        // trailing bare number: constant term "0" of an empty expression
        if (coef != 0.0) throw ParseError("lp parse: trailing constant in expression");
    }
    return terms;
}

}  // namespace

LpModel parse_interchange(std::istream& in) {
    LpModel m;
    enum Section { none, objective, rows, bounds, done } sec = none;
    std::string line;
    std::vector<std::pair<std::string, double>> obj_terms;
    struct PendingRow {
        std::vector<std::pair<std::string, double>> terms;
        RowSense sense;
        double rhs;
    };
    std::vector<PendingRow> pending;
    struct Bound {
        double lb, ub;
    };
    std::unordered_map<std::string, Bound> bound_of;
    std::vector<std::string> var_order;
    auto touch = [&](const std::string& name) {
        if (!bound_of.count(name)) {
            bound_of[name] = {0.0, kInf};  // default bound
            var_order.push_back(name);
        }
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '\\') {
            std::string note = line.substr(1);
            if (!note.empty() && note[0] == ' ') note.erase(0, 1);
            m.notes.push_back(note);
            if (note.rfind("matchcert kind=lower n=", 0) == 0) {
                m.kind = LpModelKind::lower_bound;
                m.n = std::atoi(note.c_str() + 23);
            } else if (note.rfind("matchcert kind=upper n=", 0) == 0) {
                m.kind = LpModelKind::upper_bound;
                m.n = std::atoi(note.c_str() + 23);
            }
            continue;
        }
        if (line == "Maximize") {
            sec = objective;
            continue;
        }
        if (line == "Subject To") {
            sec = rows;
            continue;
        }
        if (line == "Bounds") {
            sec = bounds;
            continue;
        }
        if (line == "End") {
            sec = done;
            break;
        }
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        switch (sec) {
            case objective:
                for (auto& t : parse_expr(toks, 0, toks.size())) obj_terms.push_back(t);
                break;
            case rows: {
                if (toks[0].back() != ':') throw ParseError("lp parse: row without name: " + line);
                std::size_t op = toks.size();
                RowSense sense = RowSense::le;
                for (std::size_t i = 1; i < toks.size(); ++i) {
                    if (toks[i] == "<=" || toks[i] == ">=" || toks[i] == "=") {
                        op = i;
                        sense = toks[i] == "<=" ? RowSense::le
                                                : (toks[i] == ">=" ? RowSense::ge : RowSense::eq);
                        break;
                    }
                }
                if (op == toks.size()) throw ParseError("lp parse: row without sense: " + line);
                if (op + 2 != toks.size()) throw ParseError("lp parse: bad rhs: " + line);
                PendingRow pr;
                pr.terms = parse_expr(toks, 1, op);
                pr.sense = sense;
                pr.rhs = std::strtod(toks[op + 1].c_str(), nullptr);
                pending.push_back(std::move(pr));
                break;
            }
            case bounds: {
                if (toks.size() == 2 && toks[1] == "free") {
                    touch(toks[0]);
                    bound_of[toks[0]] = {-kInf, kInf};
                } else if (toks.size() == 3 && toks[1] == ">=") {
                    touch(toks[0]);
                    bound_of[toks[0]] = {std::strtod(toks[2].c_str(), nullptr), kInf};
                } else if (toks.size() == 3 && toks[1] == "<=") {
                    touch(toks[0]);
                    bound_of[toks[0]] = {-kInf, std::strtod(toks[2].c_str(), nullptr)};
                } else if (toks.size() == 5 && toks[1] == "<=" && toks[3] == "<=") {
                    touch(toks[2]);
                    bound_of[toks[2]] = {std::strtod(toks[0].c_str(), nullptr),
                                         std::strtod(toks[4].c_str(), nullptr)};
                } else {
                    throw ParseError("lp parse: bad bounds line: " + line);
                }
                break;
            }
            default:
                throw ParseError("lp parse: content outside any section: " + line);
        }
    }
    if (sec != done) throw ParseError("lp parse: missing End marker");
    // variables take the Bounds-section order (the emitter lists every
    // variable there, in index order); names seen only in expressions follow
    for (const auto& [name, c] : obj_terms) touch(name);
    for (const auto& pr : pending)
        for (const auto& [name, c] : pr.terms) touch(name);
    LpModel out;
    out.kind = m.kind;
    out.n = m.n;
    out.notes = m.notes;
    for (const auto& name : var_order) {
        const auto& b = bound_of[name];
        out.add_var(name, b.lb, b.ub);
    }
    for (const auto& [name, c] : obj_terms) {
        int v = out.var_index(name);
        out.objective.emplace_back(v, c);
    }
    for (const auto& pr : pending) {
        std::vector<std::pair<int, double>> terms;
        terms.reserve(pr.terms.size());
        for (const auto& [name, c] : pr.terms) terms.emplace_back(out.var_index(name), c);
        out.add_row(std::move(terms), pr.sense, pr.rhs);
    }
    return out;
}

LpModel parse_interchange_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_interchange(in);
}

// ---------------------------------------------------------------------------
// solutions

RowViolation max_violation(const LpModel& m, const std::vector<double>& x) {
    RowViolation worst;
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        const LpRow& row = m.rows[r];
        double acc = 0.0;
        for (const auto& [v, c] : row.terms) acc += c * x[v];
        double viol = 0.0;
        switch (row.sense) {
            case RowSense::le: viol = acc - row.rhs; break;
            case RowSense::ge: viol = row.rhs - acc; break;
            case RowSense::eq: viol = std::abs(acc - row.rhs); break;
        }
        if (viol > worst.amount) {
            worst.amount = viol;
            worst.row = static_cast<int>(r);
        }
    }
    for (std::size_t v = 0; v < m.vars.size(); ++v) {
        double viol = std::max(m.vars[v].lb - x[v], x[v] - m.vars[v].ub);
        if (viol > worst.amount) {
            worst.amount = viol;
            worst.row = -1 - static_cast<int>(v);  // negative: bound violation
        }
    }
    return worst;
}

double recompute_auxiliaries(const LpModel& m, std::vector<double>& x) {
    if (m.kind == LpModelKind::generic) return 0.0;
    const int n = m.n;
    // p prefix sums (lower model)
    if (m.kind == LpModelKind::lower_bound) {
        for (int j = 0; j <= n; ++j) {
            int prev = -1;
            for (int i = 1; i <= n; ++i) {
                int p = m.var_index("p_" + std::to_string(i) + "_" + std::to_string(j));
                x[p] = (i == 1) ? x[m.g_var(0, j)] : x[prev] + x[m.g_var(i - 1, j)];
                prev = p;
            }
        }
    }
    int t = m.var_index("t");
    // two passes: first rows defining s/h (t still unknown), then t rows
    for (int pass = 0; pass < 2; ++pass) {
        std::unordered_map<int, double> mins;
        for (const LpRow& row : m.rows) {
            if (row.sense != RowSense::le) continue;
            int target = -1;
            for (const auto& [v, c] : row.terms) {
                char c0 = m.vars[v].name[0];
                bool aux = (c0 == 's' || c0 == 'h' || v == t);
                if (aux && c == 1.0) {
                    if (pass == 0 && v == t) {
                        target = -1;
                        break;
                    }
                    if (pass == 1 && v != t) {
                        target = -1;
                        break;
                    }
                    target = v;
                }
            }
            if (target < 0) continue;
            double rest = 0.0;
            for (const auto& [v, c] : row.terms)
                if (v != target) rest += c * x[v];
            double cand = row.rhs - rest;
            auto it = mins.find(target);
            if (it == mins.end() || cand < it->second) mins[target] = cand;
        }
        for (const auto& [v, cand] : mins) x[v] = cand;
    }
    return x[t];
}

LpSolution parse_solution(std::istream& in, const LpModel& m) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("solution: empty input");
    auto toks = tokenize(line);
    if (toks.size() != 2 || toks[0] != "status") throw ParseError("solution: missing status line");
    LpSolution sol;
    if (toks[1] == "optimal")
        sol.status = SolveStatus::optimal;
    else if (toks[1] == "infeasible")
        sol.status = SolveStatus::infeasible;
    else if (toks[1] == "unbounded")
        sol.status = SolveStatus::unbounded;
    else if (toks[1] == "error")
        sol.status = SolveStatus::error;
    else
        throw ParseError("solution: unknown status " + toks[1]);
    if (sol.status != SolveStatus::optimal) return sol;
    if (!std::getline(in, line)) throw ParseError("solution: missing objective line");
    toks = tokenize(line);
    if (toks.size() != 2 || toks[0] != "objective")
        throw ParseError("solution: missing objective line");
    sol.objective_value = std::strtod(toks[1].c_str(), nullptr);

    std::vector<double> x(m.vars.size(), std::numeric_limits<double>::quiet_NaN());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        toks = tokenize(line);
        if (toks.size() != 2) throw ParseError("solution: bad assignment line: " + line);
        int v = m.var_index(toks[0]);
        if (v < 0) throw ParseError("solution: unknown variable " + toks[0]);
        x[v] = std::strtod(toks[1].c_str(), nullptr);
    }
    // grid models may omit auxiliaries; g variables and, for generic models,
    // everything must be present
    bool missing_aux = false;
    for (std::size_t v = 0; v < x.size(); ++v) {
        if (!std::isnan(x[v])) continue;
        char c0 = m.vars[v].name[0];
        bool aux = m.kind != LpModelKind::generic && (c0 == 's' || c0 == 'h' || c0 == 'p' || c0 == 't');
        if (!aux) throw ParseError("solution: missing value for " + m.vars[v].name);
        missing_aux = true;
    }
    if (missing_aux) {
        bool t_missing = std::isnan(x[m.var_index("t")]);
        std::vector<double> filled = x;
        // recompute all auxiliaries, then keep any values the file did provide
        double t_implied = recompute_auxiliaries(m, filled);
        for (std::size_t v = 0; v < x.size(); ++v)
            if (std::isnan(x[v])) x[v] = filled[v];
        if (t_missing) sol.objective_value = t_implied;
    }
    RowViolation worst = max_violation(m, x);
    if (worst.amount > 1e-6) {
        std::string what = "solution violates ";
        what += worst.row >= 0 ? m.row_to_string(worst.row)
                               : ("bounds of " + m.vars[-1 - worst.row].name);
        what += " by " + fmt17(worst.amount);
        throw SolverToleranceError(what);
    }
    for (std::size_t v = 0; v < x.size(); ++v) sol.assignment[m.vars[v].name] = x[v];
    return sol;
}

LpSolution parse_solution_file(const std::string& path, const LpModel& m) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_solution(in, m);
}

void write_solution(const LpSolution& sol, std::ostream& out) {
    switch (sol.status) {
        case SolveStatus::optimal: out << "status optimal\n"; break;
        case SolveStatus::infeasible: out << "status infeasible\n"; break;
        case SolveStatus::unbounded: out << "status unbounded\n"; break;
        case SolveStatus::error: out << "status error\n"; break;
    }
    if (sol.status != SolveStatus::optimal) return;
    out << "objective " << fmt17(sol.objective_value) << "\n";
    std::vector<std::pair<std::string, double>> items(sol.assignment.begin(),
                                                      sol.assignment.end());
    std::sort(items.begin(), items.end());
    for (const auto& [name, v] : items) out << name << " " << fmt17(v) << "\n";
}

void write_solution_file(const LpSolution& sol, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_solution(sol, out);
}

GridFunction extract_grid_function(const LpSolution& sol, int n) {
    if (sol.status != SolveStatus::optimal)
        throw std::invalid_argument("extract_grid_function: solution not optimal");
    GridFunction g(n);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            auto it = sol.assignment.find(g_name(i, j));
            if (it == sol.assignment.end())
                throw std::invalid_argument("extract_grid_function: missing " + g_name(i, j));
            double v = it->second;
            if (v < -1e-9 || v > 1.0 + 1e-9)
                throw SolverToleranceError("extract_grid_function: " + g_name(i, j) + " = " +
                                           fmt17(v) + " needs clamping beyond 1e-9");
            g.value(i, j) = std::min(1.0, std::max(0.0, v));
        }
    return g;
}

}  // namespace matchcert

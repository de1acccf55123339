// matchcert: build and solve the rank-function LPs, check grid conditions,
// certify competitive-ratio lower bounds, simulate generalized RANKING, and
// export contour data. Every command appends a reproducibility manifest.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "matchcert/certifier.hpp"
#include "matchcert/grid.hpp"
#include "matchcert/lp_model.hpp"
#include "matchcert/manifest.hpp"
#include "matchcert/ranking.hpp"
#include "matchcert/solver.hpp"
#include "matchcert/util.hpp"

using namespace matchcert;

namespace {

// exit codes: 0 success, 1 check failure, 2 usage/parameter, 3 resource,
// 4 solver failure
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitResource = 3;
constexpr int kExitSolver = 4;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// rank-function sources accepted by --g: a grid CSV path, "huang", or
// "const:<value>"
PiecewiseAffineG load_g(const std::string& source, int sample_n) {
    if (source == "huang")
        return PiecewiseAffineG(sample_closed_form(huang_reference, sample_n));
    if (source.rfind("const:", 0) == 0) {
        double c = std::strtod(source.c_str() + 6, nullptr);
        return PiecewiseAffineG(GridFunction::constant(sample_n, c));
    }
    return PiecewiseAffineG(read_grid_csv_file(source));
}

bool is_file_source(const std::string& source) {
    return source != "huang" && source.rfind("const:", 0) != 0;
}

SolverConfig make_solver_config(const std::string& backend, const std::string& command,
                                double tol, double time_limit) {
    SolverConfig cfg = default_solver_config();
    if (backend == "embedded") {
        cfg.backend = SolverBackend::embedded;
    } else if (backend == "external") {
        cfg.backend = SolverBackend::external;
    }  // "auto" keeps the MATCHCERT_SOLVER-derived default
    if (!command.empty()) {
        cfg.backend = SolverBackend::external;
        cfg.external_command = command;
    }
    cfg.feasibility_tolerance = tol;
    cfg.time_limit_seconds = time_limit;
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"competitive-ratio certification toolkit for generalized RANKING"};
    app.require_subcommand(1);
    std::string manifest_path;
    app.add_option("--manifest", manifest_path,
                   "manifest file or directory (default: manifests/<digest>)");

    auto* lp_build = app.add_subcommand("lp-build", "emit a lower/upper LP interchange file");
    std::string lb_kind = "lower", lb_out;
    int lb_n = 0;
    lp_build->add_option("--kind", lb_kind, "lower|upper")->check(CLI::IsMember({"lower", "upper"}));
    lp_build->add_option("--n", lb_n, "grid subdivisions")->required();
    lp_build->add_option("--out", lb_out, "output path")->required();

    auto* lp_solve = app.add_subcommand("lp-solve", "solve an LP interchange file");
    std::string ls_in, ls_out, ls_backend = "auto", ls_command;
    double ls_tol = 1e-6, ls_time = 86400.0;
    bool ls_no_polish = false;
    lp_solve->add_option("--in", ls_in, "LP file")->required();
    lp_solve->add_option("--out", ls_out, "solution output path")->required();
    lp_solve->add_option("--backend", ls_backend, "embedded|external|auto");
    lp_solve->add_option("--command", ls_command, "external command template with {in} {out}");
    lp_solve->add_option("--tolerance", ls_tol, "validation tolerance (default 1e-6)");
    lp_solve->add_option("--time-limit", ls_time, "seconds");
    lp_solve->add_flag("--no-polish", ls_no_polish, "keep the raw solver vertex");
    std::string ls_extract;
    lp_solve->add_option("--extract-g", ls_extract, "also write the solved g as a grid CSV");

    auto* g_check = app.add_subcommand("g-check", "check the five rank-function conditions");
    std::string gc_file, gc_mode = "strict";
    double gc_tol = 0.0;
    g_check->add_option("--g", gc_file, "grid CSV")->required();
    g_check->add_option("--mode", gc_mode, "strict|relaxed")
        ->check(CLI::IsMember({"strict", "relaxed"}));
    g_check->add_option("--tolerance", gc_tol, "nonnegative tolerance (default 0)");

    auto* certify = app.add_subcommand("certify", "sweep fhat and certify a competitive ratio");
    std::string ce_g, ce_checkpoint, ce_out_manifest;
    int ce_n = 0, ce_m = 0;
    unsigned ce_workers = 0;
    double ce_margin = 1e-9;
    std::size_t ce_cap = 0;
    int ce_sample_n = 50;
    certify->add_option("--g", ce_g, "grid CSV | huang | const:<c>")->required();
    certify->add_option("--n", ce_n, "sweep grid")->required();
    certify->add_option("--m", ce_m, "inner discretization (divides n)")->required();
    certify->add_option("--workers", ce_workers, "worker threads (default: all cores)");
    certify->add_option("--margin", ce_margin, "numerical margin (default 1e-9)");
    certify->add_option("--mem-cap", ce_cap, "memory cap in bytes");
    certify->add_option("--checkpoint", ce_checkpoint, "resumable gamma-chunk checkpoint file");
    certify->add_option("--sample-n", ce_sample_n, "sampling grid for huang/const sources");
    certify->add_option("--out-manifest", ce_out_manifest, "manifest path for this run");

    auto* simulate = app.add_subcommand("simulate", "estimate empirical competitive ratios");
    std::string si_g, si_instance, si_family = "erdos-renyi";
    int si_trials = 1000, si_size = 20, si_sample_n = 50;
    double si_p = 0.3, si_beta = -1.0;
    std::uint64_t si_seed = 1;
    simulate->add_option("--g", si_g, "grid CSV | huang | const:<c>")->required();
    simulate->add_option("--instance", si_instance, "instance file (overrides --family)");
    simulate->add_option("--family", si_family, "upper-triangular|erdos-renyi|star");
    simulate->add_option("--size", si_size, "instance size parameter");
    simulate->add_option("--p", si_p, "edge probability for erdos-renyi");
    simulate->add_option("--trials", si_trials, "number of trials");
    simulate->add_option("--seed", si_seed, "master seed");
    simulate->add_option("--beta", si_beta, "run the per-edge dual coverage check at this beta");
    simulate->add_option("--sample-n", si_sample_n, "sampling grid for huang/const sources");

    auto* contour = app.add_subcommand("contour", "export g on a grid as x,y,value CSV rows");
    std::string co_g, co_out;
    int co_res = 50, co_sample_n = 50;
    contour->add_option("--g", co_g, "grid CSV | huang | const:<c>")->required();
    contour->add_option("--resolution", co_res, "points per axis (>= 2)");
    contour->add_option("--out", co_out, "output CSV path")->required();
    contour->add_option("--sample-n", co_sample_n, "sampling grid for huang/const sources");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    Timer timer;
    RunManifest man;

    if (lp_build->parsed()) {
        man.command = "lp-build";
        man.add_param("kind", lb_kind);
        man.add_param("n", std::to_string(lb_n));
        man.add_param("out", lb_out);
        LpModel model = lb_kind == "lower" ? build_lower_lp(lb_n)
                                           : build_upper_lp({lb_n, default_upper_points()});
        write_interchange_file(model, lb_out);
        for (const auto& note : model.notes) man.add_output("note", note);
        man.add_output("vars", std::to_string(model.vars.size()));
        man.add_output("rows", std::to_string(model.rows.size()));
        man.add_output("lp_digest", file_digest(lb_out));
        std::cout << "wrote " << lb_out << " (" << model.vars.size() << " vars, "
                  << model.rows.size() << " rows)\n";
    } else if (lp_solve->parsed()) {
        man.command = "lp-solve";
        man.add_param("in", ls_in);
        man.add_param("backend", ls_backend);
        man.add_input(ls_in);
        LpModel model = parse_interchange_file(ls_in);
        SolverConfig cfg = make_solver_config(ls_backend, ls_command, ls_tol, ls_time);
        cfg.polish = !ls_no_polish;
        LpSolution sol = solve(model, cfg);
        write_solution_file(sol, ls_out);
        if (!ls_extract.empty() && sol.status == SolveStatus::optimal) {
            if (model.kind == LpModelKind::generic)
                throw std::invalid_argument("--extract-g requires a lower/upper grid model");
            write_grid_csv_file(extract_grid_function(sol, model.n), ls_extract);
            man.add_output("g_digest", file_digest(ls_extract));
        }
        man.add_output("status", sol.status == SolveStatus::optimal      ? "optimal"
                                 : sol.status == SolveStatus::infeasible ? "infeasible"
                                 : sol.status == SolveStatus::unbounded  ? "unbounded"
                                                                         : "error");
        man.add_output("objective", fmt17(sol.objective_value));
        man.add_output("sol_digest", file_digest(ls_out));
        man.wall_seconds = timer.seconds();
        man.append_to(manifest_path);
        std::cout << fmt17(sol.objective_value) << "\n";
        return sol.status == SolveStatus::optimal ? kExitOk : kExitSolver;
    } else if (g_check->parsed()) {
        man.command = "g-check";
        man.add_param("g", gc_file);
        man.add_param("mode", gc_mode);
        man.add_param("tolerance", fmt17(gc_tol));
        man.add_input(gc_file);
        GridFunction g = read_grid_csv_file(gc_file);
        ConditionReport rep = check_conditions(
            g, gc_mode == "strict" ? CheckMode::strict : CheckMode::relaxed, gc_tol);
        std::cout << rep.summary() << "\n";
        man.add_output("all_pass", rep.all_pass() ? "1" : "0");
        man.wall_seconds = timer.seconds();
        man.append_to(manifest_path);
        return rep.all_pass() ? kExitOk : kExitCheckFailed;
    } else if (certify->parsed()) {
        man.command = "certify";
        man.add_param("g", ce_g);
        man.add_param("n", std::to_string(ce_n));
        man.add_param("m", std::to_string(ce_m));
        man.add_param("workers", std::to_string(ce_workers));
        man.add_param("margin", fmt17(ce_margin));
        if (is_file_source(ce_g)) man.add_input(ce_g);
        PiecewiseAffineG g = load_g(ce_g, ce_sample_n);
        CertifierParams params;
        params.n = ce_n;
        params.m = ce_m;
        params.workers = ce_workers;
        params.numerical_margin = ce_margin;
        params.memory_cap_bytes = ce_cap;
        CertifiedBound bound = sweep(g, params, ce_checkpoint);
        man.add_output("g_source", ce_g);
        std::istringstream block(bound.to_manifest_block());
        for (std::string ln; std::getline(block, ln);) {
            auto eq = ln.find('=');
            man.add_output(ln.substr(0, eq), ln.substr(eq + 1));
        }
        man.wall_seconds = timer.seconds();
        man.append_to(ce_out_manifest.empty() ? manifest_path : ce_out_manifest);
        std::cout << fmt17(bound.certified_ratio) << "\n";
        return kExitOk;
    } else if (simulate->parsed()) {
        man.command = "simulate";
        man.add_param("g", si_g);
        man.add_param("trials", std::to_string(si_trials));
        man.add_param("seed", std::to_string(si_seed));
        if (is_file_source(si_g)) man.add_input(si_g);
        PiecewiseAffineG pwa = load_g(si_g, si_sample_n);
        RankFn g = [&pwa](double yv, double yu) { return pwa.eval(yv, yu); };
        InstanceGenerator gen;
        if (!si_instance.empty()) {
            man.add_input(si_instance);
            MatchInstance fixed = read_instance_file(si_instance);
            gen = [fixed](std::mt19937_64&) { return fixed; };
        } else if (si_family == "upper-triangular") {
            int size = si_size;
            gen = [size](std::mt19937_64&) { return make_upper_triangular(size); };
        } else if (si_family == "star") {
            int size = si_size;
            gen = [size](std::mt19937_64& rng) { return make_star(size, rng); };
        } else if (si_family == "erdos-renyi") {
            int size = si_size;
            double p = si_p;
            gen = [size, p](std::mt19937_64& rng) { return make_erdos_renyi(size, size, p, rng); };
        } else {
            throw std::invalid_argument("unknown family " + si_family);
        }
        man.add_param("family", si_instance.empty() ? si_family : "file");
        RatioEstimate est = estimate_ratio(gen, g, si_trials, si_seed);
        std::cout << "trials=" << est.trials << " skipped=" << est.skipped
                  << " mean_ratio=" << fmt17(est.mean_ratio)
                  << " stderr=" << fmt17(est.stderr_ratio)
                  << " min_ratio=" << fmt17(est.min_ratio) << "\n";
        man.add_output("mean_ratio", fmt17(est.mean_ratio));
        man.add_output("stderr", fmt17(est.stderr_ratio));
        man.add_output("min_ratio", fmt17(est.min_ratio));
        man.add_output("skipped", std::to_string(est.skipped));
        if (si_beta >= 0.0) {
            std::mt19937_64 rng(si_seed);
            MatchInstance inst =
                si_instance.empty() ? gen(rng) : read_instance_file(si_instance);
            DualCoverageReport rep = dual_coverage_check(inst, g, si_trials, si_beta, si_seed);
            std::cout << "dual_coverage flagged=" << rep.flagged_count << "/" << rep.edges.size()
                      << " at beta=" << fmt17(si_beta) << "\n";
            man.add_output("dual_flagged", std::to_string(rep.flagged_count));
        }
    } else if (contour->parsed()) {
        man.command = "contour";
        man.add_param("g", co_g);
        man.add_param("resolution", std::to_string(co_res));
        if (co_res < 2) throw std::invalid_argument("--resolution must be at least 2");
        if (is_file_source(co_g)) man.add_input(co_g);
        PiecewiseAffineG g = load_g(co_g, co_sample_n);
        std::ofstream out(co_out);
        if (!out) throw std::runtime_error("cannot open " + co_out);
        for (int i = 0; i < co_res; ++i)
            for (int j = 0; j < co_res; ++j) {
                double x = static_cast<double>(i) / (co_res - 1);
                double y = static_cast<double>(j) / (co_res - 1);
                out << fmt17(x) << "," << fmt17(y) << "," << fmt17(g.eval(x, y)) << "\n";
            }
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + co_out);
        man.add_output("csv_digest", file_digest(co_out));
        std::cout << "wrote " << co_out << "\n";
    }

    man.wall_seconds = timer.seconds();
    man.append_to(manifest_path);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return kExitResource;
    } catch (const BackendError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const SolverToleranceError& e) {
        std::cerr << "solver tolerance error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

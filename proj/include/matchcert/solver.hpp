#pragma once

#include <string>

#include "matchcert/lp_model.hpp"

namespace matchcert {

enum class SolverBackend { embedded, external };

struct SolverConfig {
    SolverBackend backend = SolverBackend::embedded;
    // command template with {in} and {out} placeholders, e.g.
    // "python3 tools/solve_lp.py {in} {out}"; defaults to $MATCHCERT_SOLVER
    std::string external_command;
    double time_limit_seconds = 86400.0;
    double feasibility_tolerance = 1e-9;
    // refine lower/upper grid solutions onto a dyadic lattice (see
    // polish_grid_solution); raw solver output is kept when off
    bool polish = true;
    std::string work_dir;  // scratch dir for external solves (default: temp)
};

// Fills backend/external_command from MATCHCERT_SOLVER when set.
SolverConfig default_solver_config();

// Solves the model and re-validates the returned assignment against every
// row within config.feasibility_tolerance before accepting it. The embedded
// backend is a dense two-phase tableau simplex with Bland's rule:
// deterministic, no exact arithmetic, intended for test-scale models. The
// external backend writes the interchange file, runs the configured command,
// and parses the documented solution format.
LpSolution solve(const LpModel& model, const SolverConfig& config);

// Replaces the g values of a lower/upper-bound solution with
//   round_to_lattice((1 - theta) g + theta g_safe),  lattice = 2^-40,
// where g_safe(x,y) = 1/2 + x/8 - y/8 - xy/16 satisfies every constraint
// family with slack at least 1/(16 n^2) and theta is sized so the rounded
// grid still satisfies the families exactly (verified here at tolerance 0;
// on verification failure the solution is left untouched and false is
// returned). Auxiliaries and t are recomputed from the polished grid, so
// the emitted assignment stays feasible and self-consistent. Lattice values
// make the discrete condition checks exact in double arithmetic, which is
// what downstream certification requires of a solved g. Skipped when any g
// bound differs from [0,1].
bool polish_grid_solution(const LpModel& model, LpSolution& sol);

}  // namespace matchcert

#!/usr/bin/env python3
"""LP driver: reads the matchcert interchange format, solves with HiGHS via
scipy.optimize.linprog, writes the matchcert solution format.

Usage: solve_lp.py INPUT.lp OUTPUT.sol [--method highs|highs-ipm|auto]

Interchange grammar (one item per line):
    \\ comment
    Maximize
    <expr>
    Subject To
    <name>: <expr> (<=|>=|=) <number>
    Bounds
    <lb> <= <name> <= <ub>  |  <name> >= <lb>  |  <name> <= <ub>  |  <name> free
    End
where <expr> is terms joined by + / -, each term an optional coefficient
followed by a variable name.
"""
import sys
import time
from array import array

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

INF = float("inf")


def is_number(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


class Model:
    def __init__(self):
        self.var_index = {}
        self.var_names = []
        self.lb = array("d")
        self.ub = array("d")
        self.obj = {}
        # rows as parallel arrays (triplet form)
        self.r = array("i")
        self.c = array("i")
        self.v = array("d")
        self.sense = array("b")  # 0 <=, 1 >=, 2 =
        self.rhs = array("d")

    def var(self, name):
        idx = self.var_index.get(name)
        if idx is None:
            idx = len(self.var_names)
            self.var_index[name] = idx
            self.var_names.append(name)
            self.lb.append(0.0)
            self.ub.append(INF)
        return idx


def parse_expr(model, toks, into_row=None):
    sign = 1.0
    coef = 1.0
    have_coef = False
    terms = {}
    for tok in toks:
        if tok == "+" or tok == "-":
            sign = -1.0 if tok == "-" else 1.0
        elif is_number(tok):
            coef = float(tok)
            have_coef = True
        else:
            terms[model.var(tok)] = terms.get(model.var(tok), 0.0) + sign * coef
            sign = 1.0
            coef = 1.0
            have_coef = False
    if have_coef and coef != 0.0:
        raise ValueError("trailing constant in expression")
    return terms


def parse(path):
    model = Model()
    section = None
    nrows = 0
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("\\"):
                continue
            if line in ("Maximize", "Subject To", "Bounds", "End"):
                section = line
                if line == "End":
                    break
                continue
            toks = line.split()
            if section == "Maximize":
                model.obj.update(parse_expr(model, toks))
            elif section == "Subject To":
                if not toks[0].endswith(":"):
                    raise ValueError("row without name: " + line)
                op_at = None
                for i, tok in enumerate(toks):
                    if tok in ("<=", ">=", "="):
                        op_at = i
                        break
                if op_at is None or op_at + 2 != len(toks):
                    raise ValueError("bad row: " + line)
                terms = parse_expr(model, toks[1:op_at])
                for var, coef in terms.items():
                    model.r.append(nrows)
                    model.c.append(var)
                    model.v.append(coef)
                model.sense.append({"<=": 0, ">=": 1, "=": 2}[toks[op_at]])
                model.rhs.append(float(toks[op_at + 1]))
                nrows += 1
            elif section == "Bounds":
                if len(toks) == 2 and toks[1] == "free":
                    i = model.var(toks[0])
                    model.lb[i], model.ub[i] = -INF, INF
                elif len(toks) == 3 and toks[1] == ">=":
                    i = model.var(toks[0])
                    model.lb[i], model.ub[i] = float(toks[2]), INF
                elif len(toks) == 3 and toks[1] == "<=":
                    i = model.var(toks[0])
                    model.lb[i], model.ub[i] = -INF, float(toks[2])
                elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                    i = model.var(toks[2])
                    model.lb[i], model.ub[i] = float(toks[0]), float(toks[4])
                else:
                    raise ValueError("bad bounds line: " + line)
            else:
                raise ValueError("content outside any section: " + line)
    if section != "End":
        raise ValueError("missing End marker")
    return model, nrows


def solve(model, nrows, method):
    nv = len(model.var_names)
    rows = np.frombuffer(model.r, dtype=np.int32)
    cols = np.frombuffer(model.c, dtype=np.int32)
    vals = np.frombuffer(model.v, dtype=np.float64)
    sense = np.frombuffer(model.sense, dtype=np.int8)
    rhs = np.frombuffer(model.rhs, dtype=np.float64)

    row_sense = sense[rows]
    flip = np.where(row_sense == 1, -1.0, 1.0)
    ub_mask_r = sense != 2
    eq_mask_r = ~ub_mask_r
    # renumber rows into the <= block and the == block
    ub_ids = np.cumsum(ub_mask_r) - 1
    eq_ids = np.cumsum(eq_mask_r) - 1
    term_is_ub = row_sense != 2
    A_ub = sparse.csc_matrix(
        (vals[term_is_ub] * flip[term_is_ub],
         (ub_ids[rows[term_is_ub]], cols[term_is_ub])),
        shape=(int(ub_mask_r.sum()), nv))
    b_ub = rhs[ub_mask_r] * np.where(sense[ub_mask_r] == 1, -1.0, 1.0)
    A_eq = None
    b_eq = None
    if eq_mask_r.any():
        term_is_eq = ~term_is_ub
        A_eq = sparse.csc_matrix(
            (vals[term_is_eq], (eq_ids[rows[term_is_eq]], cols[term_is_eq])),
            shape=(int(eq_mask_r.sum()), nv))
        b_eq = rhs[eq_mask_r]
    cvec = np.zeros(nv)
    for var, coef in model.obj.items():
        cvec[var] = -coef  # linprog minimizes
    bounds = list(zip(model.lb, model.ub))
    bounds = [(lo if lo != -INF else None, hi if hi != INF else None) for lo, hi in bounds]
    if method == "auto":
        method = "highs-ipm" if nrows > 50000 else "highs"
    res = linprog(cvec, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method=method)
    return res


def main():
    argv = sys.argv[1:]
    method = "auto"
    if "--method" in argv:
        k = argv.index("--method")
        method = argv[k + 1]
        del argv[k:k + 2]
    if len(argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    t0 = time.time()
    model, nrows = parse(argv[0])
    t1 = time.time()
    res = solve(model, nrows, method)
    t2 = time.time()
    print(f"solve_lp: {len(model.var_names)} vars, {nrows} rows, "
          f"parse {t1 - t0:.1f}s, solve {t2 - t1:.1f}s, status {res.status}",
          file=sys.stderr)
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status, "error")
    with open(argv[1], "w") as out:
        out.write(f"status {status}\n")
        if status != "optimal":
            return 0
        out.write("objective %.17g\n" % -res.fun)
        for name, idx in model.var_index.items():
            out.write("%s %.17g\n" % (name, res.x[idx]))
    return 0


if __name__ == "__main__":
    sys.exit(main())

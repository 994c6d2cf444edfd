"""External-solver backend built on scipy's HiGHS interface.

Invoked as ``python3 -m gridmend.scipy_backend MODEL.lp OUT.sol [time_limit]``;
speaks the same LP/solution file contract as any other external solver, and
doubles as the independent cross-check for the embedded branch and bound.
"""

from __future__ import annotations

import sys

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .milp import Assignment, export_solution, parse_lp


def solve_with_scipy(model, time_limit: float | None = None) -> Assignment:
    n = model.num_vars
    c = np.zeros(n)
    for i, coef in model.obj.items():
        c[i] = coef
    lb = np.array(model.var_lb)
    ub = np.array(model.var_ub)
    integrality = np.zeros(n)
    for i in model.binary_indices():
        integrality[i] = 1
    rows_i, rows_j, rows_v, cl, cu = [], [], [], [], []
    for r in range(model.num_cons):
        for j, coef in model.con_terms[r]:
            rows_i.append(r)
            rows_j.append(j)
            rows_v.append(coef)
        rhs = model.con_rhs[r]
        sense = model.con_senses[r]
        cl.append(rhs if sense in ("=", ">=") else -np.inf)
        cu.append(rhs if sense in ("=", "<=") else np.inf)
    constraints = []
    if cl:
        A = sparse.csr_matrix((rows_v, (rows_i, rows_j)),
                              shape=(model.num_cons, n))
        constraints = [LinearConstraint(A, cl, cu)]
    options = {}
    if time_limit:
        options["time_limit"] = float(time_limit)
    res = milp(c, constraints=constraints, bounds=Bounds(lb, ub),
               integrality=integrality, options=options)
    if res.status == 2:
        # HiGHS presolve occasionally mislabels tightly-scaled feeder models
        # as infeasible; re-check with presolve disabled before believing it
        res = milp(c, constraints=constraints, bounds=Bounds(lb, ub),
                   integrality=integrality,
                   options={**options, "presolve": False})
    if res.status == 0:
        values = {model.var_names[i]: float(res.x[i]) for i in range(n)
                  if abs(res.x[i]) > 1e-12}
        return Assignment(values=values,
                          objective=float(res.fun) + model.obj_constant,
                          status="optimal")
    if res.status == 2:
        return Assignment(values={}, objective=np.inf, status="infeasible")
    if res.status == 1 and res.x is not None:
        values = {model.var_names[i]: float(res.x[i]) for i in range(n)
                  if abs(res.x[i]) > 1e-12}
        return Assignment(values=values,
                          objective=float(res.fun) + model.obj_constant,
                          status="feasible")
    return Assignment(values={}, objective=np.inf, status="time-limit")


def main(argv=None):
    argv = argv if argv is not None else sys.argv[1:]
    if len(argv) < 2:
        print("usage: python3 -m gridmend.scipy_backend MODEL.lp OUT.sol "
              "[time_limit]", file=sys.stderr)
        return 2
    lp_path, sol_path = argv[0], argv[1]
    time_limit = float(argv[2]) if len(argv) > 2 else None
    with open(lp_path, encoding="utf-8") as fh:
        model = parse_lp(fh.read())
    result = solve_with_scipy(model, time_limit)
    with open(sol_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(export_solution(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())

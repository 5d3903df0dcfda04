"""Hand the MILP to HiGHS through :func:`scipy.optimize.milp`."""
from __future__ import annotations

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .model import IlpModel, SolveResult, decode, make_result


def solve_highs(model: IlpModel, tol: float, time_limit: float | None = None,
                node_limit: int | None = None) -> SolveResult:
    lp = model.lp
    options = {"disp": False, "mip_rel_gap": tol}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    if node_limit is not None:
        options["node_limit"] = int(node_limit)
    res = milp(lp.c, constraints=LinearConstraint(lp.A, lp.lo, lp.hi),
               integrality=lp.integrality, bounds=Bounds(lp.var_lb, lp.var_ub), options=options)
    if res.x is None:
        raise RuntimeError(f"HiGHS returned no solution: {res.message}")
    x = decode(model, np.round(res.x[:model.num_binaries]))
    dual = getattr(res, "mip_dual_bound", None)
    dual = np.inf if dual is None or not np.isfinite(dual) else float(dual) + lp.const
    # a relative MIP gap leaves the incumbent short of proven optimality; HiGHS also
    # keeps its own absolute gap (1e-6), which scipy does not expose
    status = "optimal" if res.status == 0 and tol <= 1e-9 else "budget-exceeded"
    out = make_result(model.inst, x, dual, status, int(getattr(res, "mip_node_count", 0) or 0),
                      "highs")
    if res.status == 0 and status != "optimal":
        out.status = "optimal-within-gap"
    return out

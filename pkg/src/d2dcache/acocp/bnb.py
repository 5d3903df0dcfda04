"""Depth-first branch and bound over per-(file, user) segment levels."""
from __future__ import annotations

import math

import numpy as np

from ..cost import expected_cost_lb
from .model import IlpModel, SolveResult, make_result


class TermBound:
    """Admissible per-term bound for a partially fixed placement.

    Each (f, i) term is minimised on its own: unfixed levels may take any
    value up to the node's residual cache/availability, and the unfixed part
    of the expected collected count is relaxed to an interval.
    """

    def __init__(self, model: IlpModel):
        inst = model.inst
        self.inst = inst
        self.e = model.e
        self.w = inst.P / inst.U
        U = inst.U
        self.ii = np.arange(U)[None, :, None]
        self.jj = np.arange(U)[None, None, :]
        self.s = inst.s_rec.astype(np.float64)[:, None]

    def __call__(self, x, fixed, cap_left, avail_left) -> float:
        inst = self.inst
        ub = np.minimum(np.minimum(inst.s_rec[:, None], cap_left[None, :]), avail_left[:, None])
        ub = np.where(fixed, x, np.maximum(ub, 0))
        lev = np.where(fixed, x, 0)
        # got[f, i, j] = e[i, j, level of (f, j)]
        got_fixed = self.e[self.ii, self.jj, lev[:, None, :]]
        got_fixed = np.where(fixed[:, None, :], got_fixed, 0.0).sum(axis=2)
        got_free = self.e[self.ii, self.jj, ub[:, None, :]]
        got_free = np.where(fixed[:, None, :], 0.0, got_free).sum(axis=2)
        short0 = self.s - got_fixed - ub
        add = np.clip(np.minimum(short0, got_free), 0.0, None)
        val = inst.delta_d * (got_fixed + add) + inst.delta_n * np.maximum(short0 - add, 0.0)
        return math.fsum((self.w * val).ravel())


def branch_order(inst) -> list[tuple[int, int]]:
    """Groups by descending ``P * delta_n * s_rec``; groups that can hold nothing are dropped."""
    groups = sorted(((f, i) for f in range(inst.F) for i in range(inst.U)),
                    key=lambda g: (-inst.P[g] * inst.delta_n * inst.s_rec[g[0]], g))
    return [g for g in groups if min(inst.C[g[1]], inst.s_max[g[0]]) > 0]


def solve_bnb(model: IlpModel, budget: int, tol: float, trace=None) -> SolveResult:
    """Exhaustive search with pruning; ``trace`` (a list) receives ``(node_bound, incumbent)``."""
    inst = model.inst
    F, U = inst.F, inst.U
    groups = branch_order(inst)
    bound = TermBound(model)
    best_x = inst.zero_placement()
    best = expected_cost_lb(inst, best_x)
    fixed0 = np.ones((F, U), dtype=bool)
    for f, i in groups:
        fixed0[f, i] = False
    stack = [(-np.inf, 0, inst.zero_placement(), fixed0, inst.C.copy(), inst.s_max.copy())]
    nodes = 0
    status = "optimal"
    open_lb = math.inf
    while stack:
        if nodes >= budget:
            status = "budget-exceeded"
            open_lb = min(s[0] for s in stack)
            break
        parent_b, depth, x, fixed, capl, avl = stack.pop()
        if parent_b >= best - tol:
            continue
        b = bound(x, fixed, capl, avl)
        nodes += 1
        if trace is not None:
            trace.append((b, best))
        if b >= best - tol:
            continue
        if depth == len(groups):
            best, best_x = b, x
            continue
        f, i = groups[depth]
        kmax = int(min(inst.s_rec[f], capl[i], avl[f]))
        for k in range(kmax + 1):      # pushed ascending so the largest level pops first
            cx, cf = x.copy(), fixed.copy()
            cx[f, i] = k
            cf[f, i] = True
            cc, ca = capl.copy(), avl.copy()
            cc[i] -= k
            ca[f] -= k
            stack.append((b, depth + 1, cx, cf, cc, ca))
    return make_result(inst, best_x, open_lb, status, nodes, "bnb")

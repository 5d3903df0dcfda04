"""MILP form of the linearised caching problem.

Binary ``y[f, i, k]`` selects ``x[f, i] = k`` for ``k = 0..s_rec[f]``; a
continuous ``dn2[f, i] >= 0`` is the epigraph of the clipped network term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..cost import InvalidPlacement, expected_cost, expected_cost_lb
from ..model import Instance, validate_instance, validate_placement
from ..prob import pair_tables


@dataclass
class LinearProgram:
    """``min c.v + const  s.t.  lo <= A v <= hi,  var_lb <= v <= var_ub``."""

    names: list[str]
    c: np.ndarray
    A: sparse.csr_matrix
    lo: np.ndarray
    hi: np.ndarray
    row_names: list[str]
    var_lb: np.ndarray
    var_ub: np.ndarray
    integrality: np.ndarray
    const: float = 0.0

    @property
    def num_vars(self) -> int:
        return len(self.names)


@dataclass
class IlpModel:
    inst: Instance
    lp: LinearProgram
    e: np.ndarray          # e[i, j, k] = E[min(B*M_ij, k)]
    y_start: np.ndarray    # y_start[f, i]: index of y[f, i, 0]
    d_index: np.ndarray    # d_index[f, i]: index of dn2[f, i]

    @property
    def num_binaries(self) -> int:
        return int(self.lp.integrality.sum())

    @property
    def num_continuous(self) -> int:
        return self.lp.num_vars - self.num_binaries

    def objective_at(self, y) -> float:
        """Objective at an integral ``y`` with every ``dn2`` at its smallest feasible value."""
        lp = self.lp
        v = np.zeros(lp.num_vars)
        ys = np.asarray(y, dtype=np.float64)
        yi = np.flatnonzero(lp.integrality)
        v[yi] = ys
        act = lp.A @ v
        epi = np.array([r.startswith("epi_") for r in lp.row_names])
        rows = np.flatnonzero(epi)
        # every epigraph row has coefficient 1 on its dn2 variable
        v[self.d_index.ravel()] = np.maximum(lp.lo[rows] - act[rows], 0.0)
        return math.fsum(lp.c * v) + lp.const


@dataclass
class SolveResult:
    x: np.ndarray
    lb_value: float        # certified lower bound on the linearised optimum
    objective: float       # lower-bounding function at x
    ub_value: float        # exact expected cost at x
    nodes: int
    status: str            # "optimal" | "budget-exceeded"
    backend: str = "bnb"
    wall_s: float = 0.0

    @property
    def gap(self) -> float:
        return (self.ub_value - self.lb_value) / self.ub_value if self.ub_value > 0 else 0.0


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------

def build(inst: Instance) -> IlpModel:
    bad = validate_instance(inst)
    if bad:
        raise ValueError("invalid instance: " + "; ".join(map(str, bad)))
    U, F = inst.U, inst.F
    e = pair_tables(inst).emin
    names: list[str] = []
    y_start = np.zeros((F, U), dtype=np.int64)
    for f in range(F):
        for i in range(U):
            y_start[f, i] = len(names)
            names += [f"y_f{f}_u{i}_k{k}" for k in range(inst.s_rec[f] + 1)]
    nbin = len(names)
    d_index = nbin + np.arange(F * U).reshape(F, U)
    names += [f"dn2_f{f}_u{i}" for f in range(F) for i in range(U)]
    n = len(names)

    c = np.zeros(n)
    for f in range(F):
        ks = np.arange(inst.s_rec[f] + 1)
        for j in range(U):
            # user j's copies are pulled by every requester i != j
            w = inst.P[f] @ e[:, j, :inst.s_rec[f] + 1]
            c[y_start[f, j] + ks] = inst.delta_d * w / U
        c[d_index[f]] = inst.P[f] / U

    rows, cols, vals, lo, hi, rnames = [], [], [], [], [], []

    def add_row(name, idx, coef, lower, upper):
        r = len(rnames)
        rnames.append(name)
        rows.extend([r] * len(idx))
        cols.extend(idx)
        vals.extend(coef)
        lo.append(lower)
        hi.append(upper)

    for f in range(F):
        for i in range(U):
            k = inst.s_rec[f] + 1
            add_row(f"sel_f{f}_u{i}", list(range(y_start[f, i], y_start[f, i] + k)), [1.0] * k, 1.0, 1.0)
    for i in range(U):
        idx, coef = [], []
        for f in range(F):
            idx += list(range(y_start[f, i] + 1, y_start[f, i] + inst.s_rec[f] + 1))
            coef += list(range(1, inst.s_rec[f] + 1))
        add_row(f"cache_u{i}", idx, [float(v) for v in coef], -np.inf, float(inst.C[i]))
    for f in range(F):
        idx, coef = [], []
        for i in range(U):
            idx += list(range(y_start[f, i] + 1, y_start[f, i] + inst.s_rec[f] + 1))
            coef += list(range(1, inst.s_rec[f] + 1))
        add_row(f"avail_f{f}", idx, [float(v) for v in coef], -np.inf, float(inst.s_max[f]))
    dn = inst.delta_n
    for f in range(F):
        S = inst.s_rec[f]
        for i in range(U):
            idx, coef = [int(d_index[f, i])], [1.0]
            for j in range(U):
                ks = range(1, S + 1)
                w = [k * dn for k in ks] if j == i else [dn * e[i, j, k] for k in ks]
                for k, wk in zip(ks, w):
                    if wk != 0.0:
                        idx.append(int(y_start[f, j] + k))
                        coef.append(float(wk))
            add_row(f"epi_f{f}_u{i}", idx, coef, float(dn * S), np.inf)

    A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(rnames), n))
    integrality = np.zeros(n, dtype=np.int64)
    integrality[:nbin] = 1
    var_ub = np.full(n, np.inf)
    var_ub[:nbin] = 1.0
    lp = LinearProgram(names=names, c=c, A=A, lo=np.array(lo), hi=np.array(hi), row_names=rnames,
                       var_lb=np.zeros(n), var_ub=var_ub, integrality=integrality)
    return IlpModel(inst=inst, lp=lp, e=e, y_start=y_start, d_index=d_index)


def encode(model: IlpModel, x) -> np.ndarray:
    """Binary vector (length = number of binaries) with ``y[f, i, x[f, i]] = 1``."""
    inst = model.inst
    x = np.asarray(x)
    y = np.zeros(model.num_binaries, dtype=np.int64)
    if np.any(x < 0) or np.any(x > inst.s_rec[:, None]):
        raise ValueError("placement outside 0..s_rec")
    y[(model.y_start + x).ravel()] = 1
    return y


def decode(model: IlpModel, y) -> np.ndarray:
    """Placement selected by an integral ``y``."""
    inst = model.inst
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (model.num_binaries,):
        raise ValueError(f"y has shape {y.shape}, expected ({model.num_binaries},)")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("y must be integral 0/1")
    x = np.zeros((inst.F, inst.U), dtype=np.int64)
    for f in range(inst.F):
        S = inst.s_rec[f]
        for i in range(inst.U):
            seg = y[model.y_start[f, i]:model.y_start[f, i] + S + 1]
            hit = np.flatnonzero(seg)
            if hit.size != 1:
                raise ValueError(f"group (f={f}, i={i}) selects {hit.size} levels")
            x[f, i] = hit[0]
    return x


def certificate(inst: Instance, x_lb) -> tuple[float, float, float]:
    """``(ub, lb, gap)`` sandwiching the optimum, for an optimal linearised solution ``x_lb``."""
    bad = validate_placement(inst, x_lb)
    if bad:
        raise InvalidPlacement("; ".join(map(str, bad)))
    ub = expected_cost(inst, x_lb).total
    lb = expected_cost_lb(inst, x_lb)
    return ub, lb, (ub - lb) / ub if ub > 0 else 0.0


def make_result(inst: Instance, x, lb_bound: float, status: str, nodes: int,
                backend: str) -> SolveResult:
    """Package a solution; ``lb_bound`` is the search's own certified bound."""
    objective = expected_cost_lb(inst, x)
    lb = objective if status == "optimal" else min(objective, lb_bound)
    return SolveResult(x=np.asarray(x, dtype=np.int64), lb_value=lb, objective=objective,
                       ub_value=expected_cost(inst, x).total, nodes=nodes, status=status,
                       backend=backend)

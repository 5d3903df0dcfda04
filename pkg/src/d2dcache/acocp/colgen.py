"""Branch and price over whole per-file configurations.

The linearised objective is a sum of per-file parts and only the cache rows
tie files together, so the choice for one file can be treated as a single
column ``x[f, :]``.  Columns are priced exactly by scanning every feasible
configuration, which makes the Lagrangian value at the master's duals a
certified lower bound at every iteration.  Branching splits the level of one
(file, user) pair, as in :mod:`.bnb`.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from ..cost import expected_cost_lb
from ..model import Instance, validate_placement
from .model import IlpModel, SolveResult, make_result

log = logging.getLogger(__name__)

DEFAULT_MAX_CONFIGS = 2_000_000
INT_TOL = 1e-7
MAX_ROUNDS = 1000


class TooLarge(RuntimeError):
    pass


def _caps(inst: Instance, s: int) -> np.ndarray:
    return np.minimum(inst.C, s)


def enumeration_size(inst: Instance) -> int:
    """Number of level vectors scanned before the availability filter."""
    keys = {(int(s), int(m)) for s, m in zip(inst.s_rec, inst.s_max)}
    return sum(int(np.prod(_caps(inst, s) + 1, dtype=np.float64)) for s, _ in keys)


class ConfigSpace:
    """Every level vector one file may take, with the per-requester term values.

    ``T[n, i]`` is ``delta_d * D_i + delta_n * max(s - D_i - x_i, 0)`` for
    configuration ``X[n]``, where ``D_i`` is the expected number of segments
    requester ``i`` collects from the others.
    """

    def __init__(self, inst: Instance, e: np.ndarray, s: int, s_max: int):
        caps = _caps(inst, s)
        grids = np.meshgrid(*[np.arange(c + 1, dtype=np.int8) for c in caps], indexing="ij")
        X = np.stack([g.ravel() for g in grids], axis=1)
        X = X[X.sum(axis=1, dtype=np.int64) <= s_max]
        D = np.zeros((X.shape[0], inst.U))
        for j in range(inst.U):
            D += e[:, j, X[:, j]].T
        self.X = X
        self.Xf = X.astype(np.float64)
        self.T = inst.delta_d * D + inst.delta_n * np.maximum(s - D - X, 0.0)
        self.zero = int(np.flatnonzero(X.sum(axis=1) == 0)[0])

    def __len__(self):
        return self.X.shape[0]


class BranchAndPrice:
    def __init__(self, model: IlpModel, max_configs: int = DEFAULT_MAX_CONFIGS):
        inst = model.inst
        if enumeration_size(inst) > max_configs:
            raise TooLarge(f"{enumeration_size(inst)} configurations exceed {max_configs}")
        self.inst = inst
        keys = [(int(s), int(m)) for s, m in zip(inst.s_rec, inst.s_max)]
        self.key = keys
        self.spaces = {k: ConfigSpace(inst, model.e, *k) for k in sorted(set(keys))}
        self.files_of = {k: [f for f in range(inst.F) if keys[f] == k] for k in self.spaces}
        # G[k][:, c] is the weighted cost of every configuration for the c-th file of key k
        self.G = {k: sp.T @ (inst.P[self.files_of[k]].T / inst.U) for k, sp in self.spaces.items()}
        self.slot = {f: c for k, fs in self.files_of.items() for c, f in enumerate(fs)}
        self.pool = [[self.spaces[keys[f]].zero] for f in range(inst.F)]
        self.in_pool = [set(p) for p in self.pool]
        self.big_m = 1e4 * (1.0 + sum(float(g.max(axis=0).sum()) for g in self.G.values()))

    def cost(self, f: int, n: int) -> float:
        return float(self.G[self.key[f]][n, self.slot[f]])

    def config(self, f: int, n: int) -> np.ndarray:
        return self.spaces[self.key[f]].X[n]

    # -- master ------------------------------------------------------------

    def _columns(self, masks):
        cols = []
        for f in range(self.inst.F):
            m = masks.get(f)
            cols += [(f, n) for n in self.pool[f] if m is None or m[n]]
        return cols

    def _master(self, cols):
        inst = self.inst
        F, U = inst.F, inst.U
        nc = len(cols)
        c = np.r_[[self.cost(f, n) for f, n in cols], np.full(F, self.big_m)]
        rows_eq = [f for f, _ in cols] + list(range(F))
        A_eq = sparse.csr_matrix((np.ones(nc + F), (rows_eq, np.arange(nc + F))), shape=(F, nc + F))
        X = np.array([self.config(f, n) for f, n in cols], dtype=np.float64)
        A_ub = sparse.csr_matrix(np.hstack([X.T, np.zeros((U, F))]))
        res = linprog(c, A_ub=A_ub, b_ub=inst.C.astype(np.float64), A_eq=A_eq, b_eq=np.ones(F),
                      bounds=(0, None), method="highs")
        if res.status != 0:
            raise RuntimeError(f"master LP failed: {res.message}")
        return res

    def _price(self, nu, pi, masks):
        """Lagrangian value at ``nu`` and the improving columns."""
        inst = self.inst
        L = -float(nu @ inst.C)
        new = []
        for k, sp in self.spaces.items():
            red_all = self.G[k] + (sp.Xf @ nu)[:, None]
            for f in self.files_of[k]:
                red = red_all[:, self.slot[f]]
                m = masks.get(f)
                if m is not None:
                    red = np.where(m, red, np.inf)
                n = int(np.argmin(red))
                v = float(red[n])
                if not np.isfinite(v):
                    return math.inf, []
                L += v
                if v - pi[f] < -1e-9 * (1.0 + abs(v)) and n not in self.in_pool[f]:
                    new.append((f, n))
        return L, new

    def solve_node(self, masks, parent_bound, incumbent, tol):
        """Column generation at one node.

        Returns ``(bound, cols, lam)``; ``lam`` is None when the node is pruned
        or infeasible.
        """
        bound = parent_bound
        for _ in range(MAX_ROUNDS):
            cols = self._columns(masks)
            res = self._master(cols)
            nu = np.maximum(-res.ineqlin.marginals, 0.0)
            pi = res.eqlin.marginals
            L, new = self._price(nu, pi, masks)
            bound = max(bound, L)
            if bound >= incumbent - tol:
                return bound, cols, None
            if not new:
                break
            for f, n in new:
                self.pool[f].append(n)
                self.in_pool[f].add(n)
        lam = res.x[:len(cols)]
        if np.any(res.x[len(cols):] > INT_TOL):
            return math.inf, cols, None
        return bound, cols, lam

    def restricted_mip(self, time_limit: float = 10.0):
        """Best integer combination of the pooled columns, or None."""
        inst = self.inst
        cols = self._columns({})
        nc = len(cols)
        c = np.array([self.cost(f, n) for f, n in cols])
        A_eq = sparse.csr_matrix((np.ones(nc), ([f for f, _ in cols], np.arange(nc))),
                                 shape=(inst.F, nc))
        X = np.array([self.config(f, n) for f, n in cols], dtype=np.float64)
        cons = [LinearConstraint(A_eq, 1, 1), LinearConstraint(sparse.csr_matrix(X.T), -np.inf, inst.C)]
        res = milp(c, constraints=cons, integrality=np.ones(nc), bounds=Bounds(0, 1),
                   options={"disp": False, "time_limit": time_limit})
        if res.x is None:
            return None
        return self._placement(cols, np.round(res.x))

    def _placement(self, cols, lam):
        x = self.inst.zero_placement()
        for (f, n), v in zip(cols, lam):
            if v > 0.5:
                x[f] = self.config(f, n)
        return x


def _fractional_split(bp: BranchAndPrice, cols, lam):
    """Pick ``(f, i, t)`` so that branching on ``x[f, i] <= t`` cuts off ``lam``."""
    by_file: dict[int, list[tuple[float, np.ndarray]]] = {}
    for (f, n), v in zip(cols, lam):
        if v > INT_TOL:
            by_file.setdefault(f, []).append((v, bp.config(f, n)))
    best = None
    for f, used in by_file.items():
        if len(used) < 2:
            continue
        top = max(v for v, _ in used)
        X = np.array([x for _, x in used])
        w = np.array([v for v, _ in used])
        for i in np.flatnonzero(X.min(axis=0) != X.max(axis=0)):
            mean = float(w @ X[:, i])
            t = math.floor(mean) if abs(mean - round(mean)) > INT_TOL else int(X[:, i].min())
            score = (abs(top - 0.5), -bp.inst.P[f, i])
            if best is None or score < best[0]:
                best = (score, f, int(i), t)
    if best is None:
        raise RuntimeError("fractional master solution without a splittable pair")
    return best[1:]


def solve_colgen(model: IlpModel, budget: int, tol: float,
                 max_configs: int = DEFAULT_MAX_CONFIGS) -> SolveResult:
    bp = BranchAndPrice(model, max_configs)
    inst = model.inst
    best_x = inst.zero_placement()
    best = expected_cost_lb(inst, best_x)
    tie = itertools.count()
    heap = [(-math.inf, next(tie), {})]
    nodes = 0
    root_done = False
    status = "optimal"
    open_lb = math.inf
    while heap:
        if nodes >= budget:
            status = "budget-exceeded"
            open_lb = min(h[0] for h in heap)
            break
        pb, _, masks = heapq.heappop(heap)
        if pb >= best - tol:
            continue
        bound, cols, lam = bp.solve_node(masks, pb, best, tol)
        nodes += 1
        if not root_done:
            root_done = True
            x = bp.restricted_mip()
            if x is not None and not validate_placement(inst, x):
                v = expected_cost_lb(inst, x)
                if v < best:
                    best, best_x = v, x
        if lam is None or bound >= best - tol:
            continue
        if all(v < INT_TOL or v > 1 - INT_TOL for v in lam):
            x = bp._placement(cols, lam)
            v = expected_cost_lb(inst, x)
            if v < best and not validate_placement(inst, x):
                best, best_x = v, x
            continue
        f, i, t = _fractional_split(bp, cols, lam)
        X = bp.spaces[bp.key[f]].X
        base = masks.get(f)
        for keep in (X[:, i] <= t, X[:, i] > t):
            child = dict(masks)
            child[f] = keep if base is None else (base & keep)
            heapq.heappush(heap, (bound, next(tie), child))
    log.debug("branch and price: %d nodes, %d pooled columns", nodes, sum(map(len, bp.pool)))
    return make_result(inst, best_x, open_lb, status, nodes, "dw")

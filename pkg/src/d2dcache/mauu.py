"""Mobility-aware user-by-user placement.

Users are visited once, in a given order.  For the visited user every other
column of ``x`` is frozen, and because the expected cost is a sum of
per-file parts, the best allocation of that user's cache is a
knapsack-style dynamic program over files fed by the cost matrix ``V``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .cost import expected_collected
from .model import Instance, check_dimensions
from .prob import collected_pmf, pair_tables

TIE_TOL = 1e-12


@dataclass
class UserDpState:
    """Cost matrix, DP table and backpointers for one user.

    ``V[f, k]`` is the system cost when the user stores ``k`` segments of
    ``f`` and nothing else (NaN where ``k`` is not allowed).  ``W[q, c]`` is
    the best system cost using files ``0..q`` and at most ``c`` cache slots,
    and ``choice[q, c]`` the number of segments of file ``q`` in that optimum.
    """

    V: np.ndarray
    W: np.ndarray
    choice: np.ndarray
    g: np.ndarray


class _Evaluator:
    """Expected cost of a placement with cached per-(f, j) count laws."""

    def __init__(self, inst: Instance, x: np.ndarray):
        self.inst = inst
        self.tab = pair_tables(inst)
        self.x = np.array(x, dtype=np.int64)
        self.collected = expected_collected(inst, self.x)
        self.dist = [None] * inst.F
        self.short = np.zeros((inst.F, inst.U))
        for f in range(inst.F):
            self._refresh(f)

    def _refresh(self, f: int):
        inst, cap = self.inst, int(self.inst.s_rec[f])
        d = np.stack([collected_pmf(self.tab, self.x, f, j, cap) for j in range(inst.U)])
        self.dist[f] = d
        self.short[f] = d[:, :cap] @ (cap - np.arange(cap))

    def cost(self) -> float:
        inst = self.inst
        terms = inst.delta_d * self.collected + inst.delta_n * self.short
        return math.fsum((inst.P * terms).ravel()) / inst.U

    def deltas(self, i: int, f: int, kmax: int) -> np.ndarray:
        """Cost change when user ``i`` (currently storing none of ``f``) stores ``k`` of it."""
        inst, tab = self.inst, self.tab
        cap = int(inst.s_rec[f])
        P = inst.P[f] / inst.U
        d = self.dist[f]
        w = cap - np.arange(cap)
        out = np.zeros(kmax + 1)
        others = np.arange(inst.U) != i
        for k in range(1, kmax + 1):
            # requester i: own copies shift its count up by k
            own = d[i, :max(cap - k, 0)] @ (cap - k - np.arange(max(cap - k, 0)))
            delta = P[i] * inst.delta_n * (own - self.short[f, i])
            # requesters j != i: one more independent source min(B*M_ji, k)
            ker = tab.pmf[:, i, k, :k + 1]                     # (U, k+1)
            below = np.zeros((inst.U, cap))
            for t in range(min(k, cap - 1) + 1):
                below[:, t:] += ker[:, t:t + 1] * d[:, :cap - t]
            new_short = below @ w
            dj = inst.delta_d * tab.emin[:, i, k] + inst.delta_n * (new_short - self.short[f])
            delta += math.fsum((P * dj)[others])
            out[k] = delta
        return out

    def set_column(self, i: int, g: np.ndarray):
        for f in np.flatnonzero(g):
            self.x[f, i] = g[f]
            self._refresh(f)
        self.collected = expected_collected(self.inst, self.x)


def _check_pre(inst: Instance, x_fixed, i: int, S_rem) -> tuple[np.ndarray, np.ndarray]:
    x = check_dimensions(inst, np.asarray(x_fixed)).astype(np.int64)
    if np.any(x[:, i] != 0):
        raise ValueError(f"column {i} of x_fixed must be zero")
    S_rem = np.asarray(S_rem, dtype=np.int64)
    free = inst.s_max - x.sum(axis=1)
    if S_rem.shape != (inst.F,) or np.any(S_rem < 0) or np.any(S_rem > free):
        raise ValueError("S_rem must lie between 0 and the uncached segments of each file")
    return x, S_rem


def _level_caps(inst: Instance, i: int, S_rem: np.ndarray) -> np.ndarray:
    return np.minimum(np.minimum(inst.s_rec, S_rem), inst.C[i])


def _cost_matrix(ev: _Evaluator, i: int, S_rem: np.ndarray) -> np.ndarray:
    inst = ev.inst
    caps = _level_caps(inst, i, S_rem)
    base = ev.cost()
    V = np.full((inst.F, int(inst.C[i]) + 1), np.nan)
    for f in range(inst.F):
        V[f, :caps[f] + 1] = base + ev.deltas(i, f, int(caps[f]))
    return V


def build_cost_matrix(inst: Instance, x_fixed, i: int, S_rem) -> np.ndarray:
    """``V[f, k]``: expected cost of ``x_fixed`` with ``x[f, i] = k``.

    Only the terms touching user ``i`` are recomputed per entry; other
    entries of a row are NaN beyond ``min(C_i, s_rec[f], S_rem[f])``.
    """
    x, S_rem = _check_pre(inst, x_fixed, i, S_rem)
    return _cost_matrix(_Evaluator(inst, x), i, S_rem)


def solve_dp(V: np.ndarray, C: int) -> UserDpState:
    """Knapsack over files on the cost matrix; ties go to fewer segments."""
    F = V.shape[0]
    base = V[0, 0]
    delta = V - base
    W = np.zeros((F, C + 1))
    choice = np.zeros((F, C + 1), dtype=np.int64)
    prev = np.zeros(C + 1)
    for q in range(F):
        allowed = np.flatnonzero(~np.isnan(delta[q]))
        for c in range(C + 1):
            best, arg = math.inf, 0
            for r in allowed:
                if r > c:
                    break
                val = delta[q, r] + prev[c - r]
                if val < best - TIE_TOL:
                    best, arg = val, r
            W[q, c] = best
            choice[q, c] = arg
        prev = W[q]
    g = np.zeros(F, dtype=np.int64)
    c = C
    for q in range(F - 1, -1, -1):
        g[q] = choice[q, c]
        c -= g[q]
    return UserDpState(V=V, W=W + base, choice=choice, g=g)


def optimize_user(inst: Instance, x_fixed, i: int, S_rem) -> np.ndarray:
    """Cost-minimising cache content of user ``i`` with every other user frozen."""
    x, S_rem = _check_pre(inst, x_fixed, i, S_rem)
    if inst.C[i] == 0:
        return np.zeros(inst.F, dtype=np.int64)
    V = _cost_matrix(_Evaluator(inst, x), i, S_rem)
    return solve_dp(V, int(inst.C[i])).g


@dataclass
class Step:
    user: int
    g: np.ndarray
    cost: float          # expected cost after the user's cache is fixed
    state: UserDpState | None


def run_steps(inst: Instance, order: Sequence[int] | None = None,
              keep_state: bool = False) -> Iterator[Step]:
    """Yield one :class:`Step` per processed user."""
    order = range(inst.U) if order is None else order
    if sorted(order) != list(range(inst.U)):
        raise ValueError("order must be a permutation of the users")
    ev = _Evaluator(inst, inst.zero_placement())
    S_rem = inst.s_max.copy()
    for i in order:
        if inst.C[i] == 0:
            yield Step(i, np.zeros(inst.F, dtype=np.int64), ev.cost(), None)
            continue
        st = solve_dp(_cost_matrix(ev, i, S_rem), int(inst.C[i]))
        ev.set_column(i, st.g)
        S_rem = S_rem - st.g
        yield Step(i, st.g, ev.cost(), st if keep_state else None)


def run(inst: Instance, order: Sequence[int] | None = None) -> np.ndarray:
    """Process every user once and return the resulting placement."""
    x = inst.zero_placement()
    for step in run_steps(inst, order):
        x[:, step.user] = step.g
    return x


def user_order(U: int, seed=None) -> list[int]:
    """Identity order, or a seeded random permutation."""
    if seed is None:
        return list(range(U))
    return [int(v) for v in np.random.default_rng(seed).permutation(U)]

"""Contact-count and collected-segment distributions.

``M_ij ~ Poisson(lam_ij * T)`` contacts happen before the deadline, each
moving up to ``B`` segments, so user ``i`` can pull ``min(B * M_ij, x_fj)``
segments of file ``f`` from user ``j``.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np
from scipy import special

from .model import Instance, check_dimensions

MASS_TOL = 1e-9


@dataclass(frozen=True)
class CountDistribution:
    """Finite pmf on ``0..cap``; with ``tail_absorbed`` the last entry is ``Pr(X >= cap)``."""

    cap: int
    pmf: np.ndarray
    tail_absorbed: bool = True

    def __post_init__(self):
        pmf = np.clip(np.asarray(self.pmf, dtype=np.float64), 0.0, None)
        if pmf.shape != (self.cap + 1,):
            raise ValueError(f"pmf has {pmf.size} entries, expected {self.cap + 1}")
        pmf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)

    def mean(self) -> float:
        return math.fsum(np.arange(self.cap + 1) * self.pmf)

    def total(self) -> float:
        return math.fsum(self.pmf)


def pr_count(lam: float, T: float, B: int, t: int) -> float:
    """``Pr(B * M = t)`` for ``M ~ Poisson(lam * T)``."""
    if t < 0 or t % B:
        return 0.0
    m = t // B
    mu = lam * T
    if mu == 0.0:
        return 1.0 if m == 0 else 0.0
    return math.exp(m * math.log(mu) - mu - math.lgamma(m + 1))


def poisson_sf(k: int, mu: float) -> float:
    """``Pr(M > k)`` for ``M ~ Poisson(mu)`` via the regularised incomplete gamma."""
    if k < 0:
        return 1.0
    if mu == 0.0:
        return 0.0
    return float(special.pdtrc(k, mu))


def min_count_dist(lam: float, T: float, B: int, cap: int) -> CountDistribution:
    """Law of ``min(B * M, cap)``; the atom at ``cap`` carries the whole upper tail."""
    if cap < 0:
        raise ValueError("cap must be non-negative")
    pmf = np.zeros(cap + 1)
    for t in range(0, cap, B):
        pmf[t] = pr_count(lam, T, B, t)
    # B*M >= cap  <=>  M >= ceil(cap / B)
    pmf[cap] = poisson_sf(-(-cap // B) - 1, lam * T)
    return CountDistribution(cap, pmf)


def expected_min(lam: float, T: float, B: int, k: int) -> float:
    """``E[min(B * M, k)]`` as the finite sum over the atoms plus ``k * Pr(B*M > k)``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    body = math.fsum(t * pr_count(lam, T, B, t) for t in range(0, k + 1, B))
    return body + k * poisson_sf(k // B, lam * T)


def conv_capped(a: np.ndarray, b: np.ndarray, cap: int) -> np.ndarray:
    """Distribution of ``min(X + Y, cap)`` from pmfs of independent ``X`` and ``Y``."""
    full = np.convolve(a, b)
    if full.size <= cap:
        out = np.zeros(cap + 1)
        out[:full.size] = full
        return out
    out = full[:cap + 1].copy()
    out[cap] += full[cap + 1:].sum()
    return out


def point_mass(v: int, cap: int) -> np.ndarray:
    out = np.zeros(cap + 1)
    out[min(v, cap)] = 1.0
    return out


class PairTables:
    """Per-pair kernels of one instance, indexed ``[i, j, k]``.

    ``emin[i, j, k]`` is ``E[min(B*M_ij, k)]`` and ``pmf[i, j, k, :k+1]`` the law
    of ``min(B*M_ij, k)``, for ``k = 0..max s_rec``.  Diagonal entries are zero.
    """

    def __init__(self, inst: Instance):
        U, S = inst.U, inst.max_rec
        self.S = S
        self.emin = np.zeros((U, U, S + 1))
        self.pmf = np.zeros((U, U, S + 1, S + 1))
        self.pmf[..., 0] = 1.0
        for i in range(U):
            for j in range(i + 1, U):
                lam = inst.lam[i, j]
                for k in range(1, S + 1):
                    e = expected_min(lam, inst.T_D, inst.B, k)
                    p = min_count_dist(lam, inst.T_D, inst.B, k).pmf
                    self.emin[i, j, k] = self.emin[j, i, k] = e
                    self.pmf[i, j, k] = self.pmf[j, i, k] = 0.0
                    self.pmf[i, j, k, :k + 1] = self.pmf[j, i, k, :k + 1] = p
        self.emin.setflags(write=False)
        self.pmf.setflags(write=False)


_TABLES: "weakref.WeakKeyDictionary[Instance, PairTables]" = weakref.WeakKeyDictionary()


def pair_tables(inst: Instance) -> PairTables:
    tab = _TABLES.get(inst)
    if tab is None:
        tab = _TABLES[inst] = PairTables(inst)
    return tab


def collected_pmf(tab: PairTables, x: np.ndarray, f: int, i: int, cap: int,
                  order=None) -> np.ndarray:
    """pmf of ``min(S_fi, cap)`` by convolving the other users one at a time."""
    out = point_mass(int(x[f, i]), cap)
    users = range(x.shape[1]) if order is None else order
    for j in users:
        xj = int(x[f, j])
        if j == i or xj == 0:
            continue
        out = conv_capped(out, tab.pmf[i, j, xj, :xj + 1], cap)
    return out


def segment_count_dist(inst: Instance, x: np.ndarray, f: int, i: int,
                       order=None) -> CountDistribution:
    """Law of the segments of file ``f`` user ``i`` holds at the deadline, capped at ``s_rec[f]``.

    ``order`` optionally fixes the sequence in which the other users are folded in.
    """
    x = check_dimensions(inst, x)
    cap = int(inst.s_rec[f])
    if np.any(x[f] > cap):
        raise ValueError(f"x[{f}] exceeds s_rec={cap}")
    return CountDistribution(cap, collected_pmf(pair_tables(inst), x, f, i, cap, order))

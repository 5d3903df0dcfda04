"""Exhaustive solvers for tiny instances and the 3-SAT decision experiment.

Placements are enumerated user by user.  Each user's column ranges over the
bounded compositions of its cache (``x[f, i] <= s_rec[f]``, column sum at
most ``C[i]``), and a branch is cut as soon as a file's running total would
exceed ``s_max``.  Among equal objectives the placement met first wins; with
the default user order that is the lexicographically smallest ``x.T``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cost import expected_collected, expected_shortfall, lb_terms
from .model import Instance, SatFormula, literal_user, reduce_3sat

DEFAULT_LIMIT = 10**8
TIE_TOL = 1e-12


class SearchTooLarge(RuntimeError):
    pass


def user_allocations(inst: Instance, i: int) -> list[np.ndarray]:
    """Every feasible cache column of user ``i``, in lexicographic order."""
    ranges = [range(min(int(s), int(inst.C[i])) + 1) for s in inst.s_rec]
    return [np.array(g, dtype=np.int64) for g in itertools.product(*ranges)
            if sum(g) <= inst.C[i]]


def _cocp_value(inst: Instance, x: np.ndarray) -> float:
    terms = inst.delta_d * expected_collected(inst, x) + inst.delta_n * expected_shortfall(inst, x)
    return math.fsum((inst.P * terms).ravel()) / inst.U


def _acocp_value(inst: Instance, x: np.ndarray) -> float:
    d2d, net = lb_terms(inst, x)
    return math.fsum((inst.P * (d2d + net)).ravel()) / inst.U


def _search(inst: Instance, value: Callable, limit: int,
            order: Sequence[int] | None) -> tuple[np.ndarray, float]:
    order = list(range(inst.U)) if order is None else list(order)
    if sorted(order) != list(range(inst.U)):
        raise ValueError("order must be a permutation of the users")
    allocs = [user_allocations(inst, i) for i in order]
    x = inst.zero_placement()
    best = [math.inf, None]
    leaves = 0

    def visit(depth: int, left: np.ndarray):
        nonlocal leaves
        if depth == len(order):
            leaves += 1
            if leaves > limit:
                raise SearchTooLarge(f"more than {limit} placements to evaluate")
            v = value(inst, x)
            if v < best[0] - TIE_TOL:
                best[0], best[1] = v, x.copy()
            return
        i = order[depth]
        for g in allocs[depth]:
            if np.any(g > left):
                continue
            x[:, i] = g
            visit(depth + 1, left - g)
        x[:, i] = 0

    visit(0, inst.s_max.astype(np.int64))
    return best[1], best[0]


def enumerate_cocp(inst: Instance, limit: int = DEFAULT_LIMIT,
                   order: Sequence[int] | None = None) -> tuple[np.ndarray, float]:
    """Globally cheapest placement under the exact expected cost.

    Raises
    ------
    SearchTooLarge
        If more than ``limit`` placements would have to be evaluated.
    """
    return _search(inst, _cocp_value, limit, order)


def enumerate_acocp(inst: Instance, limit: int = DEFAULT_LIMIT,
                    order: Sequence[int] | None = None) -> tuple[np.ndarray, float]:
    """Globally cheapest placement under the lower-bounding function."""
    return _search(inst, _acocp_value, limit, order)


# ---------------------------------------------------------------------------
# 3-SAT
# ---------------------------------------------------------------------------

def brute_force_sat(phi: SatFormula) -> tuple[bool, ...] | None:
    """A satisfying assignment (first in binary order), or None."""
    for bits in itertools.product((False, True), repeat=phi.num_vars):
        if phi.satisfied_by(bits):
            return bits
    return None


def decode_assignment(x: np.ndarray, num_vars: int) -> tuple[bool, ...] | None:
    """Truth values read off the literal pairs, or None if some pair is not
    split one ``a`` / one ``b``.  A literal is true when its user caches ``a``."""
    out = []
    for v in range(1, num_vars + 1):
        pos, neg = x[:, literal_user(v)], x[:, literal_user(-v)]
        if tuple(pos) == (1, 0) and tuple(neg) == (0, 1):
            out.append(True)
        elif tuple(pos) == (0, 1) and tuple(neg) == (1, 0):
            out.append(False)
        else:
            return None
    return tuple(out)


@dataclass(frozen=True)
class SatReport:
    """Outcome of solving one reduced instance exactly.

    ``inconclusive`` is set when the formula is satisfiable but the optimal
    placement does not decode to a satisfying assignment.
    """

    satisfiable: bool
    optimum: float
    x: np.ndarray
    assignment: tuple[bool, ...] | None
    assignment_recovered: bool
    inconclusive: bool


def sat_decision_experiment(phi: SatFormula, eps: float, delta_d: float = 1.0,
                            limit: int = DEFAULT_LIMIT) -> SatReport:
    inst = reduce_3sat(phi, eps, delta_d, strict=True)
    x, opt = enumerate_cocp(inst, limit)
    sat = brute_force_sat(phi) is not None
    a = decode_assignment(x, phi.num_vars)
    recovered = a is not None and phi.satisfied_by(a)
    return SatReport(satisfiable=sat, optimum=opt, x=x, assignment=a,
                     assignment_recovered=recovered, inconclusive=sat and not recovered)

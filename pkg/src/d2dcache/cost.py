"""Expected cost of a placement, its linear lower bound, and realised cost."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Instance, check_dimensions, validate_placement
from .prob import collected_pmf, pair_tables


class InvalidPlacement(ValueError):
    pass


@dataclass(frozen=True)
class CostReport:
    """Expected average cost per user and its breakdown.

    ``per_user[i]`` is ``sum_f P[f, i] * Delta_fi`` and ``total`` their mean.
    ``terms_d2d`` and ``terms_net`` hold the unweighted per-(file, user)
    expected D2D and network costs.
    """

    total: float
    per_user: np.ndarray
    d2d_component: float
    network_component: float
    terms_d2d: np.ndarray
    terms_net: np.ndarray


def _require_valid(inst: Instance, x) -> np.ndarray:
    x = check_dimensions(inst, np.asarray(x))
    bad = validate_placement(inst, x)
    if bad:
        raise InvalidPlacement("; ".join(map(str, bad)))
    return x.astype(np.int64)


def expected_collected(inst: Instance, x: np.ndarray) -> np.ndarray:
    """``E[sum_{j != i} min(B*M_ij, x_fj)]`` for every ``(f, i)``."""
    emin = pair_tables(inst).emin
    U = inst.U
    out = np.zeros((inst.F, U))
    jj = np.arange(U)
    for i in range(U):
        # emin[i, i, :] is zero, so the j == i term drops out
        out[:, i] = emin[i, jj[None, :], x].sum(axis=1)
    return out


def expected_shortfall(inst: Instance, x: np.ndarray) -> np.ndarray:
    """``E[max(s_rec - S_fi, 0)]`` for every ``(f, i)``."""
    tab = pair_tables(inst)
    out = np.zeros((inst.F, inst.U))
    for f in range(inst.F):
        cap = int(inst.s_rec[f])
        w = cap - np.arange(cap + 1)
        for i in range(inst.U):
            if x[f, i] >= cap:
                continue
            out[f, i] = math.fsum(w * collected_pmf(tab, x, f, i, cap))
    return out


def _weighted_total(inst: Instance, terms: np.ndarray) -> float:
    return math.fsum((inst.P * terms).ravel()) / inst.U


def expected_cost(inst: Instance, x) -> CostReport:
    """Exact expected average cost per user of placement ``x``.

    The shortfall part uses the distribution of the collected-segment count
    built by sequential convolution, so the cost is polynomial in U and F.
    """
    x = _require_valid(inst, x)
    d2d = inst.delta_d * expected_collected(inst, x)
    net = inst.delta_n * expected_shortfall(inst, x)
    per_user = np.array([math.fsum(inst.P[:, i] * (d2d[:, i] + net[:, i]))
                         for i in range(inst.U)])
    d2d_c = _weighted_total(inst, d2d)
    net_c = _weighted_total(inst, net)
    return CostReport(total=d2d_c + net_c, per_user=per_user, d2d_component=d2d_c,
                      network_component=net_c, terms_d2d=d2d, terms_net=net)


def lb_terms(inst: Instance, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-(f, i) D2D term and clipped network term of the lower-bounding function."""
    col = expected_collected(inst, x)
    d2d = inst.delta_d * col
    net = inst.delta_n * (inst.s_rec[:, None] - col - x)
    return d2d, np.maximum(net, 0.0)


def expected_cost_lb(inst: Instance, x) -> float:
    """Lower bound on :func:`expected_cost` obtained by moving the expectation
    inside the shortfall ``max``."""
    x = _require_valid(inst, x)
    d2d, net = lb_terms(inst, x)
    return _weighted_total(inst, d2d + net)


def realized_cost(inst: Instance, x, M) -> float:
    """Cost per user for one realisation ``M`` of the contact counts."""
    x = check_dimensions(inst, np.asarray(x)).astype(np.int64)
    M = np.asarray(M)
    if M.shape != (inst.U, inst.U):
        raise ValueError(f"contact matrix has shape {M.shape}, expected ({inst.U}, {inst.U})")
    if not np.array_equal(M, M.T):
        raise ValueError("contact matrix must be symmetric")
    if np.any(M < 0):
        raise ValueError("contact counts must be non-negative")
    M = M.copy()
    np.fill_diagonal(M, 0)
    # got[f, i, j] = min(B * M_ij, x_fj)
    got = np.minimum(inst.B * M[None, :, :], x[:, None, :])
    collected = got.sum(axis=2)
    short = np.maximum(inst.s_rec[:, None] - collected - x, 0)
    terms = inst.delta_d * collected + inst.delta_n * short
    return _weighted_total(inst, terms)

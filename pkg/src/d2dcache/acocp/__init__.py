"""Linearised placement problem: model, exact solvers and LP export.

``solve_exact`` picks a backend.  ``"dw"`` is branch and price over whole
per-file configurations and is the default whenever those can be enumerated;
``"highs"`` hands the MILP to HiGHS; ``"bnb"`` is a plain depth-first search
meant for small instances and for cross-checking.
"""
from __future__ import annotations

import logging
import time

from .bnb import solve_bnb
from .colgen import DEFAULT_MAX_CONFIGS, TooLarge, enumeration_size, solve_colgen
from .highs import solve_highs
from .lpformat import export_lp, read_lp
from .model import IlpModel, LinearProgram, SolveResult, build, certificate, decode, encode

log = logging.getLogger(__name__)

DEFAULT_NODES = 10**7
BACKENDS = ("auto", "dw", "highs", "bnb")

__all__ = [
    "BACKENDS", "DEFAULT_NODES", "IlpModel", "LinearProgram", "SolveResult", "build",
    "certificate", "decode", "encode", "export_lp", "read_lp", "solve_exact",
]


def solve_exact(model: IlpModel, budget: int = DEFAULT_NODES, tol: float = 1e-9,
                backend: str = "auto", time_limit: float | None = None) -> SolveResult:
    """Minimise the linearised objective.

    Parameters
    ----------
    model : IlpModel
        Output of :func:`build`.
    budget : int
        Node budget.  When it runs out the best placement found is returned
        with status ``"budget-exceeded"`` and a certified lower bound.
    tol : float
        Absolute pruning tolerance (relative MIP gap for HiGHS).
    backend : str
        One of ``BACKENDS``.
    time_limit : float, optional
        Wall-clock limit in seconds, HiGHS only.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "auto":
        backend = "dw" if enumeration_size(model.inst) <= DEFAULT_MAX_CONFIGS else "highs"
    t0 = time.perf_counter()
    if backend == "dw":
        res = solve_colgen(model, budget, tol)
    elif backend == "highs":
        res = solve_highs(model, tol, time_limit=time_limit, node_limit=budget)
    else:
        res = solve_bnb(model, budget, tol)
    res.wall_s = time.perf_counter() - t0
    log.info("%s: status=%s ub=%.6f lb=%.6f nodes=%d %.2fs", res.backend, res.status,
             res.ub_value, res.lb_value, res.nodes, res.wall_s)
    return res

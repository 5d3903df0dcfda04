"""Parameter sweeps over generated instances, written as CSV rows.

A sweep varies one generator parameter over a grid.  Each (value, seed)
cell builds one instance and runs every requested method on it; when
``acocp`` is among the methods its lower bound is also attached to the
other methods' rows, so their ``gap`` is measured against a certified
bound.
"""
from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import acocp, baselines, mauu, oracle
from .cost import expected_cost
from .model import generate_instance

log = logging.getLogger(__name__)

CSV_HEADER = ("sweep_param", "value", "seed", "method", "cost", "lb", "gap", "wall_ms")
METHODS = ("acocp", "mauu", "popular", "random", "brute")
DEFAULT_SEEDS = 20

_BASE = dict(U=8, F=80, C=5, B=1, delta_d=1.0, delta_n=30.0, gamma=0.8, beta=4.43,
             theta=1 / 1088, s_star=4, alpha=3, T_D=600.0)


@dataclass(frozen=True)
class Preset:
    param: str
    values: tuple
    base: dict = field(default_factory=dict)
    methods: tuple = ("acocp", "mauu", "popular", "random")

    def generator_args(self, value, overrides=None) -> dict:
        args = {**_BASE, **self.base, **(overrides or {})}
        args[self.param] = value
        return args


PRESETS = {
    "C": Preset("C", (3, 4, 5, 6, 7)),
    "U": Preset("U", (4, 5, 6, 7, 8)),
    "F": Preset("F", (40, 60, 80, 100, 120), dict(B=2, s_rec_fixed=4)),
    "beta": Preset("beta", (1, 2, 3, 4, 5, 6)),
    "TD": Preset("T_D", (200.0, 400.0, 600.0, 800.0, 1000.0), dict(B=2)),
    "gamma": Preset("gamma", (0.4, 0.6, 0.8, 1.0, 1.2), dict(U=20, F=200, C=4, s_star=3),
                    methods=("mauu", "popular", "random")),
}


def make_instance(args: dict, seed: int):
    args = dict(args)
    return generate_instance(args.pop("U"), args.pop("F"), args.pop("C"), seed=seed, **args)


@dataclass(frozen=True)
class Row:
    sweep_param: str
    value: float
    seed: int
    method: str
    cost: float
    lb: float | None
    gap: float | None
    wall_ms: float

    def as_csv(self) -> list[str]:
        fmt = lambda v: "" if v is None else repr(float(v))
        return [self.sweep_param, repr(self.value), str(self.seed), self.method,
                fmt(self.cost), fmt(self.lb), fmt(self.gap), f"{self.wall_ms:.1f}"]


@dataclass(frozen=True)
class SolverOptions:
    nodes: int = acocp.DEFAULT_NODES
    tol: float = 1e-9
    order_seed: int | None = None
    backend: str = "auto"


def solve(inst, method: str, seed: int = 0, opts: SolverOptions = SolverOptions()):
    """Placement from one method, plus the ACOCP result when there is one."""
    if method == "acocp":
        res = acocp.solve_exact(acocp.build(inst), opts.nodes, opts.tol, opts.backend)
        return res.x, res
    if method == "mauu":
        return mauu.run(inst, mauu.user_order(inst.U, opts.order_seed)), None
    if method == "popular":
        return baselines.popular_caching(inst), None
    if method == "random":
        return baselines.random_caching(inst, seed), None
    if method == "brute":
        return oracle.enumerate_cocp(inst)[0], None
    raise ValueError(f"unknown method {method!r}")


def run_cell(param: str, value, seed: int, args: dict, methods, opts: SolverOptions) -> list[Row]:
    inst = make_instance(args, seed)
    rows, lb = [], None
    # the bound-producing method goes first so the others can be compared with it
    for method in sorted(methods, key=lambda m: m != "acocp"):
        t0 = time.perf_counter()
        x, res = solve(inst, method, seed, opts)
        wall = (time.perf_counter() - t0) * 1e3
        cost = res.ub_value if res is not None else expected_cost(inst, x).total
        if res is not None:
            lb = res.lb_value
        gap = None if lb is None else (cost - lb) / cost
        rows.append(Row(param, value, seed, method, cost, lb, gap, wall))
        log.info("%s=%s seed=%d %s cost=%.6f", param, value, seed, method, cost)
    return rows


def _run_cell(job):
    return run_cell(*job)


def sweep(preset: Preset, seeds, values=None, methods=None, overrides=None,
          opts: SolverOptions = SolverOptions(), jobs: int = 1) -> list[Row]:
    """Every (value, seed) cell of a sweep, in sorted order."""
    values = preset.values if values is None else values
    methods = preset.methods if methods is None else methods
    bad = set(methods) - set(METHODS)
    if bad:
        raise ValueError(f"unknown methods: {sorted(bad)}")
    jobs_ = [(preset.param, v, s, preset.generator_args(v, overrides), tuple(methods), opts)
             for v in values for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            cells = list(pool.map(_run_cell, jobs_))
    else:
        cells = [_run_cell(j) for j in jobs_]
    order = {m: k for k, m in enumerate(METHODS)}
    rows = [r for c in cells for r in c]
    return sorted(rows, key=lambda r: (r.value, r.seed, order[r.method]))


def write_csv(rows, sink) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.as_csv())


def read_csv(source) -> list[Row]:
    opt = lambda s: None if s == "" else float(s)
    out = []
    for d in csv.DictReader(source):
        out.append(Row(d["sweep_param"], float(d["value"]), int(d["seed"]), d["method"],
                       float(d["cost"]), opt(d["lb"]), opt(d["gap"]), float(d["wall_ms"])))
    return out

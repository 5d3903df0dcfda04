"""Command-line front end.

Subcommands ``gen``, ``eval``, ``solve``, ``simulate``, ``sweep``,
``export-lp`` and ``reduce``.  Generator parameters come from a named preset,
then a JSON config file, then explicit flags, each overriding the previous.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import acocp, experiments, oracle
from .cost import expected_cost, expected_cost_lb
from .model import (instance_to_dict, load_instance, load_placement, parse_dimacs, reduce_3sat,
                    save_instance, save_placement)
from .sim import monte_carlo_cost

log = logging.getLogger("d2dcache")

# flag name -> generator argument
_GEN_FLAGS = {
    "U": int, "F": int, "C": int, "gamma": float, "beta": float, "theta": float,
    "s_star": int, "alpha": int, "s_rec": int, "B": int, "delta_d": float, "delta_n": float,
    "T_D": float,
}


def _add_generator_flags(p):
    g = p.add_argument_group("instance generator")
    g.add_argument("--config", help="JSON file with generator fields and an optional 'sweep' section")
    for name, typ in _GEN_FLAGS.items():
        g.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None)


def _generator_overrides(args) -> tuple[dict, dict]:
    """Generator overrides (config, then flags) and the config's sweep section."""
    over, sweep = {}, {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        sweep = cfg.pop("sweep", {})
        over.update({k: v for k, v in cfg.items() if k in _GEN_FLAGS})
    over.update({k: getattr(args, k) for k in _GEN_FLAGS if getattr(args, k) is not None})
    if "s_rec" in over:
        over["s_rec_fixed"] = over.pop("s_rec")
    return over, sweep


def _solver_opts(args) -> experiments.SolverOptions:
    return experiments.SolverOptions(nodes=args.nodes, tol=args.tol, order_seed=args.order_seed,
                                     backend=args.backend)


def _emit(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    over, _ = _generator_overrides(args)
    preset = experiments.PRESETS[args.preset]
    value = args.value if args.value is not None else over.get(preset.param, preset.values[0])
    value = type(preset.values[0])(value)
    inst = experiments.make_instance(preset.generator_args(value, over), args.seed)
    if args.out:
        save_instance(inst, args.out)
    else:
        json.dump(instance_to_dict(inst), sys.stdout)
        sys.stdout.write("\n")
    return 0


def cmd_eval(args) -> int:
    inst = load_instance(args.instance)
    x = load_placement(args.placement)
    rep = expected_cost(inst, x)
    print(f"cost {rep.total!r}")
    print(f"d2d {rep.d2d_component!r}")
    print(f"network {rep.network_component!r}")
    print(f"lower_bound {expected_cost_lb(inst, x)!r}")
    for i, v in enumerate(rep.per_user):
        print(f"user {i} {float(v)!r}")
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    x, res = experiments.solve(inst, args.method, args.seed, _solver_opts(args))
    extra = {"method": args.method, "cost": expected_cost(inst, x).total}
    if res is not None:
        extra.update(lb=res.lb_value, gap=res.gap, status=res.status, nodes=res.nodes)
        print(f"status {res.status} nodes {res.nodes}")
        print(f"ub {res.ub_value!r} lb {res.lb_value!r} gap {res.gap!r}")
    else:
        print(f"cost {extra['cost']!r}")
    if args.out:
        save_placement(x, args.out, **extra)
    return 0


def cmd_simulate(args) -> int:
    inst = load_instance(args.instance)
    x = load_placement(args.placement)
    mean, se = monte_carlo_cost(inst, x, args.reps, args.seed)
    exact = expected_cost(inst, x).total
    print(f"monte_carlo {mean!r} stderr {se!r}")
    print(f"expected {exact!r} z {(mean - exact) / se if se > 0 else 0.0!r}")
    return 0


def cmd_sweep(args) -> int:
    over, cfg = _generator_overrides(args)
    figure = args.figure or cfg.get("figure")
    if figure not in experiments.PRESETS:
        raise SystemExit(f"unknown preset {figure!r}; choose from {sorted(experiments.PRESETS)}")
    preset = experiments.PRESETS[figure]
    values = args.values or cfg.get("values")
    if values is not None:
        values = [type(preset.values[0])(v) for v in values]
    n_seeds = args.seeds or cfg.get("seeds", experiments.DEFAULT_SEEDS)
    methods = args.methods.split(",") if args.methods else cfg.get("methods")
    seeds = range(args.seed, args.seed + n_seeds)
    rows = experiments.sweep(preset, seeds, values, methods, over, _solver_opts(args), args.jobs)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            experiments.write_csv(rows, fh)
    else:
        experiments.write_csv(rows, sys.stdout)
    return 0


def cmd_export_lp(args) -> int:
    _emit(args, acocp.export_lp(acocp.build(load_instance(args.instance))))
    return 0


def cmd_reduce(args) -> int:
    with open(args.cnf) as fh:
        phi = parse_dimacs(fh.read())
    inst = reduce_3sat(phi, args.eps)
    if args.out:
        save_instance(inst, args.out)
    print(f"users {inst.U} delta_n {inst.delta_n!r}")
    if args.decide:
        rep = oracle.sat_decision_experiment(phi, args.eps, limit=args.nodes)
        print(f"satisfiable {rep.satisfiable} optimum {rep.optimum!r}")
        print(f"assignment {rep.assignment} recovered {rep.assignment_recovered}"
              f"{' (inconclusive)' if rep.inconclusive else ''}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="d2dcache", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def solver_flags(p):
        p.add_argument("--nodes", type=int, default=acocp.DEFAULT_NODES, help="node budget")
        p.add_argument("--tol", type=float, default=1e-9, help="absolute optimality tolerance")
        p.add_argument("--order-seed", type=int, default=None,
                       help="shuffle the user order of mauu with this seed")
        p.add_argument("--backend", choices=acocp.BACKENDS, default="auto")

    p = sub.add_parser("gen", help="generate an instance")
    p.add_argument("--preset", choices=sorted(experiments.PRESETS), default="C")
    p.add_argument("--value", type=float, default=None, help="value of the preset's swept parameter")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    _add_generator_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="expected cost and lower bound of a placement")
    p.add_argument("instance")
    p.add_argument("placement")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("solve", help="compute a placement")
    p.add_argument("instance")
    p.add_argument("--method", choices=experiments.METHODS, default="mauu")
    p.add_argument("--seed", type=int, default=0, help="seed of the random baseline")
    p.add_argument("--out")
    solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="Monte Carlo check of a placement's cost")
    p.add_argument("instance")
    p.add_argument("placement")
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter sweep and write CSV")
    p.add_argument("figure", nargs="?", help=f"one of {', '.join(experiments.PRESETS)}")
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--seeds", type=int, default=None, help="number of seeds per value")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--methods", help="comma-separated subset of " + ",".join(experiments.METHODS))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    solver_flags(p)
    _add_generator_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-lp", help="write the linearised model in LP format")
    p.add_argument("instance")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("reduce", help="build the caching instance of a 3-CNF formula")
    p.add_argument("cnf")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--decide", action="store_true", help="also solve it by enumeration")
    p.add_argument("--nodes", type=int, default=oracle.DEFAULT_LIMIT)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())

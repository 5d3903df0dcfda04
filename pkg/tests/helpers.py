"""Random tiny instances and feasible placements shared by the tests."""
from __future__ import annotations

import itertools

import numpy as np

from d2dcache.model import Instance


def random_instance(rng: np.random.Generator, U=None, F=None, C=None, s_star=2, B=None,
                    rate_scale=None, T_D=1.0) -> Instance:
    """Small instance with Dirichlet request columns and mixed contact intensities."""
    U = int(rng.integers(1, 4)) if U is None else U
    F = int(rng.integers(1, 4)) if F is None else F
    C = rng.integers(0, 3, size=U) if C is None else np.broadcast_to(C, (U,))
    s_rec = rng.integers(1, s_star + 1, size=F)
    s_max = s_rec * rng.integers(1, 3, size=F)
    P = rng.dirichlet(np.ones(F), size=U).T
    scale = float(rng.choice([0.05, 0.5, 2.0])) if rate_scale is None else rate_scale
    lam = np.triu(rng.exponential(scale, size=(U, U)), 1)
    B = int(rng.integers(1, 3)) if B is None else B
    delta_d = float(rng.uniform(0, 2))
    return Instance(C=C, s_rec=s_rec, s_max=s_max, P=P, lam=lam + lam.T, B=B,
                    delta_d=delta_d, delta_n=delta_d + float(rng.uniform(0, 40)), T_D=T_D)


def random_placement(inst: Instance, rng: np.random.Generator) -> np.ndarray:
    """Feasible placement built by adding random segments until nothing fits."""
    x = inst.zero_placement()
    for _ in range(int(inst.C.sum())):
        ok = ((x.sum(axis=0)[None, :] < inst.C[None, :])
              & (x.sum(axis=1)[:, None] < inst.s_max[:, None])
              & (x < inst.s_rec[:, None]))
        cand = np.argwhere(ok)
        if len(cand) == 0 or rng.random() < 0.15:
            break
        f, i = cand[rng.integers(len(cand))]
        x[f, i] += 1
    return x


def all_placements(inst: Instance):
    """Every feasible placement (tiny instances only)."""
    cols = []
    for i in range(inst.U):
        ranges = [range(min(int(s), int(inst.C[i])) + 1) for s in inst.s_rec]
        cols.append([g for g in itertools.product(*ranges) if sum(g) <= inst.C[i]])
    for combo in itertools.product(*cols):
        x = np.array(combo, dtype=np.int64).T.reshape(inst.F, inst.U)
        if np.all(x.sum(axis=1) <= inst.s_max):
            yield x


def tiny_instances(n: int, seed: int, **kw) -> list[Instance]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        inst = random_instance(rng, U=int(rng.integers(2, 4)), F=int(rng.integers(1, 4)),
                               C=rng.integers(1, 3, size=1)[0], **kw)
        out.append(inst)
    return out

"""Problem instances, placements, random generators and the 3-SAT gadget.

A placement is a plain ``(F, U)`` integer array ``x`` where ``x[f, i]`` is
the number of coded segments of file ``f`` stored by user ``i``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

PROB_TOL = 1e-9


class DimensionError(ValueError):
    """Array shapes disagree with the instance dimensions."""


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    """Full description of one caching problem.

    Attributes
    ----------
    C : (U,) int array
        Cache size of every user, in segments.
    s_rec, s_max : (F,) int arrays
        Segments needed to recover a file and segments the encoder produces.
    P : (F, U) float array
        ``P[f, i]`` is the probability that user ``i`` requests file ``f``.
    lam : (U, U) float array
        Pairwise contact rates (contacts per unit time), symmetric.
    B : int
        Segments transferable per contact.
    delta_d, delta_n : float
        Per-segment cost of a D2D transfer and of a network download.
    T_D : float
        Collection deadline.
    """

    C: np.ndarray
    s_rec: np.ndarray
    s_max: np.ndarray
    P: np.ndarray
    lam: np.ndarray
    B: int = 1
    delta_d: float = 1.0
    delta_n: float = 30.0
    T_D: float = 600.0
    U: int = field(init=False)
    F: int = field(init=False)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "C", _frozen(self.C, np.int64).reshape(-1))
        set_(self, "s_rec", _frozen(self.s_rec, np.int64).reshape(-1))
        set_(self, "s_max", _frozen(self.s_max, np.int64).reshape(-1))
        set_(self, "P", _frozen(self.P, np.float64))
        set_(self, "lam", _frozen(self.lam, np.float64))
        set_(self, "B", int(self.B))
        set_(self, "delta_d", float(self.delta_d))
        set_(self, "delta_n", float(self.delta_n))
        set_(self, "T_D", float(self.T_D))
        set_(self, "U", int(self.C.shape[0]))
        set_(self, "F", int(self.s_rec.shape[0]))
        if self.s_max.shape != (self.F,):
            raise DimensionError(f"s_max has shape {self.s_max.shape}, expected ({self.F},)")
        if self.P.shape != (self.F, self.U):
            raise DimensionError(f"P has shape {self.P.shape}, expected ({self.F}, {self.U})")
        if self.lam.shape != (self.U, self.U):
            raise DimensionError(f"lambda has shape {self.lam.shape}, expected ({self.U}, {self.U})")

    @property
    def max_rec(self) -> int:
        return int(self.s_rec.max())

    def replace(self, **changes) -> "Instance":
        kw = dict(C=self.C, s_rec=self.s_rec, s_max=self.s_max, P=self.P, lam=self.lam,
                  B=self.B, delta_d=self.delta_d, delta_n=self.delta_n, T_D=self.T_D)
        kw.update(changes)
        return Instance(**kw)

    def zero_placement(self) -> np.ndarray:
        return np.zeros((self.F, self.U), dtype=np.int64)

    def permuted(self, users: Sequence[int] | None = None,
                 files: Sequence[int] | None = None) -> "Instance":
        """Relabel users and/or files; ``users[new] = old``."""
        u = np.arange(self.U) if users is None else np.asarray(users)
        f = np.arange(self.F) if files is None else np.asarray(files)
        return self.replace(C=self.C[u], s_rec=self.s_rec[f], s_max=self.s_max[f],
                            P=self.P[np.ix_(f, u)], lam=self.lam[np.ix_(u, u)])


@dataclass(frozen=True)
class Violation:
    field: str
    index: tuple
    message: str

    def __str__(self):
        return f"{self.field}{list(self.index)}: {self.message}"


def validate_instance(inst: Instance) -> list[Violation]:
    """Return every broken invariant of ``inst`` (empty list when valid)."""
    out = []
    if inst.U < 1:
        out.append(Violation("U", (), "need at least one user"))
    if inst.F < 1:
        out.append(Violation("F", (), "need at least one file"))
    for i in np.flatnonzero(inst.C < 0):
        out.append(Violation("C", (int(i),), f"negative cache size {inst.C[i]}"))
    for f in range(inst.F):
        if inst.s_rec[f] < 1:
            out.append(Violation("s_rec", (f,), f"must be positive, got {inst.s_rec[f]}"))
        if inst.s_max[f] < inst.s_rec[f]:
            out.append(Violation("s_max", (f,), f"s_max={inst.s_max[f]} < s_rec={inst.s_rec[f]}"))
    bad_p = np.argwhere((inst.P < 0) | (inst.P > 1) | ~np.isfinite(inst.P))
    for f, i in bad_p:
        out.append(Violation("P", (int(f), int(i)), f"probability out of [0,1]: {inst.P[f, i]}"))
    col = inst.P.sum(axis=0)
    for i in np.flatnonzero(np.abs(col - 1.0) > PROB_TOL):
        out.append(Violation("P", (int(i),), f"request probabilities of user {i} sum to {col[i]!r}"))
    lam = inst.lam
    for i, j in np.argwhere((lam < 0) | ~np.isfinite(lam)):
        out.append(Violation("lambda", (int(i), int(j)), f"invalid rate {lam[i, j]}"))
    for i in np.flatnonzero(np.diag(lam) != 0):
        out.append(Violation("lambda", (int(i), int(i)), "diagonal must be zero"))
    for i, j in np.argwhere(np.triu(lam != lam.T, 1)):
        out.append(Violation("lambda", (int(i), int(j)),
                             f"asymmetric: {lam[i, j]} vs {lam[j, i]}"))
    if inst.B < 1:
        out.append(Violation("B", (), f"batch must be positive, got {inst.B}"))
    if not inst.T_D > 0:
        out.append(Violation("T_D", (), f"deadline must be positive, got {inst.T_D}"))
    if not (inst.delta_n >= inst.delta_d >= 0):
        out.append(Violation("delta", (), f"need delta_n >= delta_d >= 0, got "
                                          f"{inst.delta_n}, {inst.delta_d}"))
    return out


def check_dimensions(inst: Instance, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (inst.F, inst.U):
        raise DimensionError(f"placement has shape {x.shape}, expected ({inst.F}, {inst.U})")
    return x


def validate_placement(inst: Instance, x: np.ndarray) -> list[Violation]:
    """Check cache capacity, segment availability and the per-user s_rec cap.

    Raises
    ------
    DimensionError
        If ``x`` is not ``(F, U)``.
    """
    x = check_dimensions(inst, x)
    out = []
    if not np.all(np.equal(np.mod(x, 1), 0)):
        out.append(Violation("x", (), "placement must be integral"))
    for f, i in np.argwhere(x < 0):
        out.append(Violation("x", (int(f), int(i)), f"negative count {x[f, i]}"))
    used = x.sum(axis=0)
    for i in np.flatnonzero(used > inst.C):
        out.append(Violation("cache", (int(i),), f"user {i} stores {used[i]} > C={inst.C[i]}"))
    spread = x.sum(axis=1)
    for f in np.flatnonzero(spread > inst.s_max):
        out.append(Violation("availability", (int(f),),
                             f"file {f} cached {spread[f]} times > s_max={inst.s_max[f]}"))
    for f, i in np.argwhere(x > inst.s_rec[:, None]):
        out.append(Violation("s_rec", (int(f), int(i)),
                             f"x={x[f, i]} exceeds s_rec={inst.s_rec[f]}"))
    return out


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def gen_zipf(F: int, gamma: float) -> np.ndarray:
    """Zipf request probabilities ``f**-gamma`` normalised over ``f = 1..F``."""
    if F < 1:
        raise ValueError("F must be at least 1")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    w = np.arange(1, F + 1, dtype=np.float64) ** (-float(gamma))
    return w / math.fsum(w)


def _rng(seed) -> np.random.Generator:
    # PCG64 through SeedSequence; identical streams on every platform
    return np.random.default_rng(seed)


def gen_contact_rates(U: int, beta: float, theta: float, seed) -> np.ndarray:
    """Symmetric Gamma(shape=beta, scale=theta) contact rates with zero diagonal.

    Uniforms from PCG64 are pushed through the Gamma inverse CDF, one per
    unordered pair, filling the upper triangle column by column.  Consequently
    the leading ``k x k`` block is the same for every ``U >= k`` and, for a
    fixed seed, every rate is increasing in ``beta``.
    """
    if U < 2:
        raise ValueError("need at least two users")
    if not (beta > 0 and theta > 0):
        raise ValueError("beta and theta must be positive")
    u = _rng(seed).random(U * (U - 1) // 2)
    vals = stats.gamma.ppf(u, beta, scale=theta)
    lam = np.zeros((U, U))
    pos = 0
    for j in range(1, U):
        lam[:j, j] = vals[pos:pos + j]
        pos += j
    return lam + lam.T


def gen_thresholds(F: int, s_star: int, alpha: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``s_rec`` uniformly from ``1..s_star`` and set ``s_max = alpha * s_rec``."""
    if s_star < 1 or alpha < 1:
        raise ValueError("s_star and alpha must be at least 1")
    s_rec = _rng(seed).integers(1, s_star + 1, size=F, dtype=np.int64)
    return s_rec, alpha * s_rec


def generate_instance(U: int, F: int, C: int, *, gamma: float = 0.8, beta: float = 4.43,
                      theta: float = 1 / 1088, s_star: int = 4, alpha: int = 3,
                      s_rec_fixed: int | None = None, B: int = 1, delta_d: float = 1.0,
                      delta_n: float = 30.0, T_D: float = 600.0, seed=0) -> Instance:
    """Random instance in the style of the evaluation section.

    Contact rates and thresholds use independent child streams of ``seed`` so
    sweeping one parameter leaves the other random draws untouched.
    """
    ss_rates, ss_rec = np.random.SeedSequence(seed).spawn(2)
    lam = gen_contact_rates(U, beta, theta, ss_rates) if U > 1 else np.zeros((1, 1))
    if s_rec_fixed is None:
        s_rec, s_max = gen_thresholds(F, s_star, alpha, ss_rec)
    else:
        s_rec = np.full(F, s_rec_fixed, dtype=np.int64)
        s_max = alpha * s_rec
    P = np.repeat(gen_zipf(F, gamma)[:, None], U, axis=1)
    return Instance(C=np.full(U, C), s_rec=s_rec, s_max=s_max, P=P, lam=lam,
                    B=B, delta_d=delta_d, delta_n=delta_n, T_D=T_D)


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

def instance_to_dict(inst: Instance) -> dict:
    return {
        "U": inst.U, "F": inst.F,
        "C": inst.C.tolist(), "s_rec": inst.s_rec.tolist(), "s_max": inst.s_max.tolist(),
        "P": inst.P.tolist(), "lambda": inst.lam.tolist(),
        "B": inst.B, "delta_d": inst.delta_d, "delta_n": inst.delta_n, "T_D": inst.T_D,
    }


def instance_from_dict(d: dict) -> Instance:
    inst = Instance(C=d["C"], s_rec=d["s_rec"], s_max=d["s_max"], P=d["P"], lam=d["lambda"],
                    B=d["B"], delta_d=d["delta_d"], delta_n=d["delta_n"], T_D=d["T_D"])
    if (d.get("U", inst.U), d.get("F", inst.F)) != (inst.U, inst.F):
        raise DimensionError(f"declared U,F = {d.get('U')},{d.get('F')} disagree with arrays")
    return inst


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1))


def load_instance(path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def save_placement(x: np.ndarray, path, **extra) -> None:
    doc = {"x": np.asarray(x, dtype=np.int64).tolist()}
    doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1))


def load_placement(path) -> np.ndarray:
    return np.asarray(json.loads(Path(path).read_text())["x"], dtype=np.int64)


# ---------------------------------------------------------------------------
# 3-SAT
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SatFormula:
    """3-CNF with DIMACS literals: ``+v`` is variable ``v``, ``-v`` its negation."""

    num_vars: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(int(l) for l in c) for c in self.clauses))

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def problems(self) -> list[str]:
        """Structural defects: clause width, variable range, repeated variables."""
        out = []
        m, n = self.num_vars, self.num_clauses
        if n < 1:
            out.append("formula has no clauses")
        for c, clause in enumerate(self.clauses):
            if len(clause) != 3:
                out.append(f"clause {c} has {len(clause)} literals")
                continue
            if any(l == 0 or abs(l) > m for l in clause):
                out.append(f"clause {c} references a variable outside 1..{m}")
            if len({abs(l) for l in clause}) != 3:
                out.append(f"clause {c} repeats a variable or contains a literal and its negation")
        return out

    def occurrence_problems(self) -> list[str]:
        """Literals occurring in no clause or in every clause."""
        out = []
        m, n = self.num_vars, self.num_clauses
        for v in range(1, m + 1):
            for lit in (v, -v):
                k = sum(lit in clause for clause in self.clauses)
                if not 1 <= k <= n - 1:
                    out.append(f"literal {lit} occurs in {k} clauses, need 1..{n - 1}")
        return out

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return all(any(assignment[abs(l) - 1] == (l > 0) for l in c) for c in self.clauses)


def parse_dimacs(text: str) -> SatFormula:
    """Read a DIMACS CNF document; every clause must have three literals."""
    num_vars = None
    lits: list[int] = []
    for line in text.splitlines():
        tok = line.split()
        if not tok or tok[0] in ("c", "%"):
            continue
        if tok[0] == "p":
            if len(tok) < 4 or tok[1] != "cnf":
                raise ValueError(f"bad problem line: {line!r}")
            num_vars = int(tok[2])
            continue
        lits.extend(int(t) for t in tok)
    if num_vars is None:
        raise ValueError("missing 'p cnf' line")
    clauses, cur = [], []
    for l in lits:
        if l == 0:
            clauses.append(tuple(cur))
            cur = []
        else:
            cur.append(l)
    if cur:
        clauses.append(tuple(cur))
    return SatFormula(num_vars, tuple(clauses))


def to_dimacs(phi: SatFormula) -> str:
    lines = [f"p cnf {phi.num_vars} {phi.num_clauses}"]
    lines += [" ".join(map(str, c)) + " 0" for c in phi.clauses]
    return "\n".join(lines) + "\n"


def literal_user(lit: int) -> int:
    """User index of a literal: pair ``v`` holds ``z_v`` at ``2(v-1)`` and its negation next."""
    return 2 * (abs(lit) - 1) + (0 if lit > 0 else 1)


def delta_n_threshold(m: int, n: int, eps: float, delta_d: float) -> float:
    return 3 * n + n * eps * (m - 3) / (1 - eps) ** (m - 2) * delta_d


def reduce_3sat(phi: SatFormula, eps: float, delta_d: float = 1.0,
                margin: float = 1.01, strict: bool = False) -> Instance:
    """Caching instance whose optimum encodes satisfiability of ``phi``.

    Users ``0..2m-1`` are literal users (one pair per variable, unit cache),
    users ``2m..2m+n-1`` are clause users (no cache).  File 0 plays the role
    of ``a`` and file 1 of ``b``.  With ``strict`` every literal must also
    occur in between 1 and ``n - 1`` clauses.
    """
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    bad = phi.problems() + (phi.occurrence_problems() if strict else [])
    if bad:
        raise ValueError("formula violates reduction assumptions: " + "; ".join(bad))
    m, n = phi.num_vars, phi.num_clauses
    U = 2 * m + n
    near, far = math.log(1 / eps), math.log(1 / (1 - eps))
    lam = np.full((U, U), far)
    for v in range(m):
        lam[2 * v, 2 * v + 1] = lam[2 * v + 1, 2 * v] = near
    for c, clause in enumerate(phi.clauses):
        cu = 2 * m + c
        for lit in clause:
            lu = literal_user(lit)
            lam[cu, lu] = lam[lu, cu] = near
    np.fill_diagonal(lam, 0.0)
    P = np.zeros((2, U))
    P[:, :2 * m] = 0.5
    P[0, 2 * m:] = 1.0
    C = np.r_[np.ones(2 * m, dtype=np.int64), np.zeros(n, dtype=np.int64)]
    return Instance(C=C, s_rec=[1, 1], s_max=[m, m], P=P, lam=lam, B=1, delta_d=delta_d,
                    delta_n=margin * delta_n_threshold(m, n, eps, delta_d), T_D=1.0)

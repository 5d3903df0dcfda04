"""CPLEX LP text writer and a reader for the same subset."""
from __future__ import annotations

import re

import numpy as np
from scipy import sparse

from .model import IlpModel, LinearProgram


def _num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _linear(terms, width=78) -> list[str]:
    lines, cur = [], ""
    for name, coef in terms:
        sign = "-" if coef < 0 else "+"
        a = abs(coef)
        tok = f"{sign} {name}" if a == 1 else f"{sign} {_num(a)} {name}"
        if cur and len(cur) + len(tok) + 1 > width:
            lines.append(cur)
            cur = "  " + tok
        else:
            cur = (cur + " " + tok) if cur else "  " + tok
    if cur:
        lines.append(cur)
    return lines or ["  0"]


def export_lp(model: IlpModel | LinearProgram, sink=None) -> str:
    """Render the model as CPLEX LP text; write it to ``sink`` (path or file) if given."""
    lp = model.lp if isinstance(model, IlpModel) else model
    names = lp.names
    out = ["\\ linearised cost-optimal caching model", "Minimize"]
    obj = [(names[j], lp.c[j]) for j in np.flatnonzero(lp.c)]
    body = _linear(obj)
    body[0] = " obj:" + body[0][1:]
    if lp.const:
        body.append(f"  {'-' if lp.const < 0 else '+'} {_num(abs(lp.const))}")
    out += body
    out.append("Subject To")
    A = lp.A.tocsr()
    for r, rn in enumerate(lp.row_names):
        s, t = A.indptr[r], A.indptr[r + 1]
        terms = [(names[j], v) for j, v in zip(A.indices[s:t], A.data[s:t])]
        lines = _linear(terms)
        lines[0] = f" {rn}:" + lines[0][1:]
        lo, hi = lp.lo[r], lp.hi[r]
        if lo == hi:
            rel = f"= {_num(lo)}"
        elif np.isinf(hi):
            rel = f">= {_num(lo)}"
        elif np.isinf(lo):
            rel = f"<= {_num(hi)}"
        else:
            raise ValueError(f"ranged row {rn} is not supported")
        lines[-1] += " " + rel
        out += lines
    out.append("Bounds")
    for j in np.flatnonzero(~lp.integrality.astype(bool)):
        lo, hi = lp.var_lb[j], lp.var_ub[j]
        if np.isinf(hi):
            out.append(f" {names[j]} >= {_num(lo)}")
        else:
            out.append(f" {_num(lo)} <= {names[j]} <= {_num(hi)}")
    out.append("Binary")
    bins = [names[j] for j in np.flatnonzero(lp.integrality)]
    for s in range(0, len(bins), 6):
        out.append(" " + " ".join(bins[s:s + 6]))
    out.append("End")
    text = "\n".join(out) + "\n"
    if sink is not None:
        if hasattr(sink, "write"):
            sink.write(text)
        else:
            with open(sink, "w") as fh:
                fh.write(text)
    return text


_TERM = re.compile(r"([+-])\s*(?:([0-9.eE+-]+)\s+)?([A-Za-z_][\w.]*)|([+-])\s*([0-9.eE+-]+)")


def _parse_terms(expr: str):
    expr = expr.strip()
    if expr and expr[0] not in "+-":
        expr = "+ " + expr
    terms, const = [], 0.0
    pos = 0
    for m in _TERM.finditer(expr):
        if expr[pos:m.start()].strip():
            raise ValueError(f"cannot parse {expr[pos:m.start()]!r}")
        pos = m.end()
        if m.group(3):
            coef = float(m.group(2)) if m.group(2) else 1.0
            terms.append((m.group(3), coef if m.group(1) == "+" else -coef))
        else:
            v = float(m.group(5))
            const += v if m.group(4) == "+" else -v
    if expr[pos:].strip():
        raise ValueError(f"cannot parse {expr[pos:]!r}")
    return terms, const


def read_lp(text: str) -> LinearProgram:
    """Parse the LP subset written by :func:`export_lp`."""
    sections: dict[str, list[str]] = {}
    cur = None
    heads = {"minimize": "obj", "subject to": "rows", "bounds": "bounds", "binary": "bin",
             "binaries": "bin", "end": "end"}
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in heads:
            cur = heads[key]
            sections.setdefault(cur, [])
            continue
        if cur is None:
            raise ValueError(f"content before first section: {line!r}")
        sections[cur].append(line)

    def statements(lines):
        out = []
        for line in lines:
            if line.startswith("  ") and out:
                out[-1] += " " + line.strip()
            else:
                out.append(line.strip())
        return out

    names: list[str] = []
    index: dict[str, int] = {}

    def var(nm):
        if nm not in index:
            index[nm] = len(names)
            names.append(nm)
        return index[nm]

    obj_stmt = " ".join(l.strip() for l in sections.get("obj", []))
    obj_stmt = obj_stmt.split(":", 1)[1] if ":" in obj_stmt else obj_stmt
    obj_terms, const = _parse_terms(obj_stmt)
    rows = []
    for st in statements(sections.get("rows", [])):
        rn, expr = st.split(":", 1)
        m = re.match(r"(.*?)(<=|>=|=)\s*([-+0-9.eE]+|[-+]?inf)\s*$", expr)
        if not m:
            raise ValueError(f"bad constraint {st!r}")
        terms, c0 = _parse_terms(m.group(1))
        rows.append((rn.strip(), terms, m.group(2), float(m.group(3)) - c0))
    for nm, _ in obj_terms:
        var(nm)
    for _, terms, _, _ in rows:
        for nm, _ in terms:
            var(nm)
    bound_stmts = [l.strip() for l in sections.get("bounds", []) if l.strip()]
    binaries = [nm for l in sections.get("bin", []) for nm in l.split()]
    for nm in binaries:
        var(nm)
    for st in bound_stmts:
        for nm in re.findall(r"[A-Za-z_][\w.]*", st):
            if nm.lower() not in ("inf", "infinity", "free"):
                var(nm)
    # keep the writer's ordering: binaries first, in declaration order
    order = binaries + [n for n in names if n not in set(binaries)]
    index = {n: k for k, n in enumerate(order)}
    n = len(order)
    c = np.zeros(n)
    for nm, v in obj_terms:
        c[index[nm]] += v
    ri, ci, vv, lo, hi = [], [], [], [], []
    for r, (_, terms, sense, rhs) in enumerate(rows):
        for nm, v in terms:
            ri.append(r)
            ci.append(index[nm])
            vv.append(v)
        lo.append(rhs if sense in (">=", "=") else -np.inf)
        hi.append(rhs if sense in ("<=", "=") else np.inf)
    var_lb, var_ub = np.zeros(n), np.full(n, np.inf)
    integrality = np.zeros(n, dtype=np.int64)
    for nm in binaries:
        integrality[index[nm]] = 1
        var_ub[index[nm]] = 1.0
    for st in bound_stmts:
        m2 = re.match(r"([-+0-9.eE]+)\s*<=\s*(\S+)\s*<=\s*([-+0-9.eE]+|[-+]?inf)$", st)
        m1 = re.match(r"(\S+)\s*(>=|<=)\s*([-+0-9.eE]+|[-+]?inf)$", st)
        if m2:
            j = index[m2.group(2)]
            var_lb[j], var_ub[j] = float(m2.group(1)), float(m2.group(3))
        elif m1:
            j = index[m1.group(1)]
            if m1.group(2) == ">=":
                var_lb[j] = float(m1.group(3))
            else:
                var_ub[j] = float(m1.group(3))
        else:
            raise ValueError(f"bad bound {st!r}")
    A = sparse.csr_matrix((vv, (ri, ci)), shape=(len(rows), n))
    return LinearProgram(names=order, c=c, A=A, lo=np.array(lo), hi=np.array(hi),
                         row_names=[r[0] for r in rows], var_lb=var_lb, var_ub=var_ub,
                         integrality=integrality, const=const)

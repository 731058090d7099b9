"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

All variables are non-negative. Rows carry a sense (``<=``, ``>=``,
``==``). Small by design: the LPs in this package have at most a few
thousand rows and a few dozen columns (or the transpose).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = ["LinearProgramSpec", "LPSolution", "solve_lp", "to_lp_format"]

SENSES = ("<=", ">=", "==")
PIVOT_EPS = 1e-11
COST_EPS = 1e-11
FEAS_TOL = 1e-9
MAX_ITER = 100_000


@dataclass(frozen=True, eq=False)
class LinearProgramSpec:
    """``max``/``min`` ``c @ x`` subject to ``A @ x (senses) b``, ``x >= 0``."""

    names: tuple[str, ...]
    A: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray
    c: np.ndarray
    maximize: bool = True
    row_names: tuple[str, ...] = ()

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "senses", tuple(self.senses))
        rows, cols = A.shape
        if len(self.names) != cols or c.shape != (cols,):
            raise ValueError("variable names / objective do not match column count")
        if b.shape != (rows,) or len(self.senses) != rows:
            raise ValueError("right-hand side / senses do not match row count")
        if any(s not in SENSES for s in self.senses):
            raise ValueError(f"row senses must be among {SENSES}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("LP data must be finite")
        if not self.row_names:
            object.__setattr__(self, "row_names", tuple(f"r{i}" for i in range(rows)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Per-row constraint violation (0 when satisfied)."""
        lhs = self.A @ x
        out = np.zeros(len(self.b))
        for i, s in enumerate(self.senses):
            if s == "<=":
                out[i] = max(lhs[i] - self.b[i], 0.0)
            elif s == ">=":
                out[i] = max(self.b[i] - lhs[i], 0.0)
            else:
                out[i] = abs(lhs[i] - self.b[i])
        return out


@dataclass(frozen=True, eq=False)
class LPSolution:
    status: str
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: float = float("nan")
    iterations: int = 0
    names: tuple[str, ...] = ()

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def value(self, name: str) -> float:
        return float(self.x[self.names.index(name)])


class _Unbounded(Exception):
    pass


class _IterationLimit(Exception):
    pass


def _pivot(T: np.ndarray, basis: list[int], r: int, col: int) -> None:
    T[r] /= T[r, col]
    for i in range(T.shape[0]):
        if i != r and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[r]
    basis[r] = col


def _bland(T: np.ndarray, basis: list[int], cost: np.ndarray, allowed: np.ndarray, it: list[int]) -> None:
    """Minimise ``cost @ x`` over the tableau in place, Bland's rule."""
    while True:
        if it[0] >= MAX_ITER:
            raise _IterationLimit
        reduced = cost - cost[basis] @ T[:, :-1]
        candidates = np.flatnonzero(allowed & (reduced < -COST_EPS))
        if candidates.size == 0:
            return
        col = int(candidates[0])
        column = T[:, col]
        rows = np.flatnonzero(column > PIVOT_EPS)
        if rows.size == 0:
            raise _Unbounded
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(min(tied, key=lambda i: basis[i]))
        _pivot(T, basis, r, col)
        it[0] += 1


def solve_lp(spec: LinearProgramSpec) -> LPSolution:
    """Solve ``spec`` to an optimal basic solution or report why not."""
    A, b = spec.A.copy(), spec.b.copy()
    senses = list(spec.senses)
    rows, n = A.shape
    for i in range(rows):
        if b[i] < 0:
            A[i], b[i] = -A[i], -b[i]
            senses[i] = {"<=": ">=", ">=": "<=", "==": "=="}[senses[i]]

    n_slack = sum(s != "==" for s in senses)
    n_art = sum(s != "<=" for s in senses)
    width = n + n_slack + n_art
    T = np.zeros((rows, width + 1))
    T[:, :n] = A
    T[:, -1] = b
    basis = [0] * rows
    s_col, a_col = n, n + n_slack
    for i, s in enumerate(senses):
        if s == "<=":
            T[i, s_col] = 1.0
            basis[i] = s_col
            s_col += 1
        else:
            if s == ">=":
                T[i, s_col] = -1.0
                s_col += 1
            T[i, a_col] = 1.0
            basis[i] = a_col
            a_col += 1
    artificial = np.zeros(width, dtype=bool)
    artificial[n + n_slack:] = True
    it = [0]

    try:
        if n_art:
            _bland(T, basis, artificial.astype(float), np.ones(width, dtype=bool), it)
            if T[[i for i in range(rows) if artificial[basis[i]]], -1].sum() > FEAS_TOL:
                return LPSolution("infeasible", iterations=it[0], names=spec.names)
            # drive zero-level artificials out of the basis; drop redundant rows
            keep = []
            for i in range(T.shape[0]):
                if not artificial[basis[i]]:
                    keep.append(i)
                    continue
                cols = np.flatnonzero(~artificial & (np.abs(T[i, :-1]) > PIVOT_EPS))
                if cols.size:
                    _pivot(T, basis, i, int(cols[0]))
                    keep.append(i)
            T = T[keep]
            basis = [basis[i] for i in keep]
        cost = np.zeros(width)
        cost[:n] = -spec.c if spec.maximize else spec.c
        _bland(T, basis, cost, ~artificial, it)
    except _Unbounded:
        return LPSolution("unbounded", iterations=it[0], names=spec.names)
    except _IterationLimit:
        return LPSolution("iteration_limit", iterations=it[0], names=spec.names)

    x = np.zeros(width)
    x[basis] = T[:, -1]
    x = x[:n]
    if np.any(x < -FEAS_TOL) or spec.residuals(np.maximum(x, 0.0)).max(initial=0.0) > FEAS_TOL:
        return LPSolution("numerical_error", x=x, iterations=it[0], names=spec.names)
    x = np.maximum(x, 0.0)
    return LPSolution("optimal", x, float(spec.c @ x), it[0], spec.names)


def _fmt(coef: float) -> str:
    return repr(float(coef))


def to_lp_format(spec: LinearProgramSpec, name: str = "prophetlp") -> str:
    """Render ``spec`` in CPLEX LP text format."""

    def expr(coefs: Sequence[float]) -> str:
        terms = [f"{'-' if a < 0 else '+'} {_fmt(abs(a))} {v}"
                 for a, v in zip(coefs, spec.names) if a != 0.0]
        if not terms:
            return f"0 {spec.names[0]}"
        out = " ".join(terms)
        return out[2:] if out.startswith("+ ") else out

    op = {"<=": "<=", ">=": ">=", "==": "="}
    lines = [f"\\ {name}", "Maximize" if spec.maximize else "Minimize", f" obj: {expr(spec.c)}",
             "Subject To"]
    for rn, row, s, rhs in zip(spec.row_names, spec.A, spec.senses, spec.b):
        lines.append(f" {rn}: {expr(row)} {op[s]} {_fmt(rhs)}")
    lines.append("Bounds")
    lines.extend(f" {v} >= 0" for v in spec.names)
    lines.append("End")
    return "\n".join(lines) + "\n"

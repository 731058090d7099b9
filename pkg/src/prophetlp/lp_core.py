"""Price LP, its dual over subset distributions, and certificate checks.

For target ratio ``alpha`` and scaling ``beta`` the primal has one price per
item plus the slack pair ``lplus``/``lminus``, and one row per subset ``T``:

    sum_j p_j (beta [j not in T] - [j in T]) + lplus - lminus
        <= beta * R(T) - E[OPT] / alpha

with ``R(T) = sum_i E[v_i(OPT_i(v) minus T)]``. A non-negative optimum means
the optimal prices reach ratio ``alpha``. The dual puts a probability
distribution ``mu`` on subsets ``T``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .instances import Instance
from .offline import OptStats, opt_stats
from .simplex import LinearProgramSpec, LPSolution, solve_lp
from .valuations import XOS, Additive, bundle, items_of, supporting_additive

__all__ = [
    "Parameters",
    "PriceVector",
    "DualCertificate",
    "MAX_LP_ITEMS",
    "build_primal",
    "build_dual",
    "solve_lp",
    "prices_from_primal",
    "certificate_from_dual",
    "direct_dual_objective",
    "dual_objective",
    "marginal_absence_prob",
    "check_dual_feasible",
    "verify_feasible_point",
    "random_feasible_certificate",
    "fgl_prices",
    "load_certificate",
    "certificate_from_dict",
    "certificate_to_dict",
]

MAX_LP_ITEMS = 16
CERT_TOL = 1e-9


@dataclass(frozen=True)
class Parameters:
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha >= 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")


@dataclass(frozen=True)
class PriceVector:
    prices: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "prices", tuple(float(p) for p in self.prices))
        if any(not np.isfinite(p) or p < 0 for p in self.prices):
            raise ValueError(f"prices must be finite and non-negative: {self.prices}")

    def __len__(self) -> int:
        return len(self.prices)

    def __iter__(self):
        return iter(self.prices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.prices)


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """Distribution over subsets of an ``m``-item universe, indexed by bitmask."""

    m: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape != (1 << self.m,):
            raise ValueError(f"expected {1 << self.m} subset weights, got {w.shape}")
        if np.any(w < 0):
            raise ValueError("certificate weights must be non-negative")
        if abs(w.sum() - 1.0) > CERT_TOL:
            raise ValueError(f"certificate weights sum to {w.sum()!r}, not 1")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_mapping(cls, m: int, mu: Mapping[int, float]) -> "DualCertificate":
        w = np.zeros(1 << m)
        for T, x in mu.items():
            if T < 0 or T >> m:
                raise ValueError(f"subset {items_of(T)} outside {m}-item universe")
            w[T] += x
        return cls(m, w)

    @classmethod
    def point_mass(cls, m: int, T: int) -> "DualCertificate":
        return cls.from_mapping(m, {T: 1.0})

    def items(self) -> Iterable[tuple[int, float]]:
        for T in np.flatnonzero(self.weights):
            yield int(T), float(self.weights[T])

    def as_mapping(self) -> dict[int, float]:
        return dict(self.items())


def _check_size(inst: Instance, max_items: int) -> None:
    if inst.m > max_items:
        raise ValueError(f"{inst.m} items means {1 << inst.m} subset rows; cap is m <= {max_items}")


def _lp_data(inst: Instance, params: Parameters) -> tuple[np.ndarray, np.ndarray]:
    """Row coefficients on prices and right-hand sides, one row per subset."""
    stats = opt_stats(inst)
    masks = np.arange(1 << inst.m)
    present = ((masks[:, None] >> np.arange(inst.m)[None, :]) & 1).astype(float)
    coef = params.beta * stats.residual_price_weights() - present
    rhs = params.beta * stats.residual_values() - stats.expected_optimum / params.alpha
    return coef, rhs


def build_primal(inst: Instance, params: Parameters, max_items: int = MAX_LP_ITEMS) -> LinearProgramSpec:
    _check_size(inst, max_items)
    coef, rhs = _lp_data(inst, params)
    rows = coef.shape[0]
    A = np.hstack([coef, np.ones((rows, 1)), -np.ones((rows, 1))])
    names = tuple(f"p{j}" for j in range(inst.m)) + ("lplus", "lminus")
    c = np.zeros(inst.m + 2)
    c[-2], c[-1] = 1.0, -1.0
    return LinearProgramSpec(names, A, ("<=",) * rows, rhs, c, maximize=True,
                             row_names=tuple(f"T{T}" for T in range(rows)))


def build_dual(inst: Instance, params: Parameters, max_items: int = MAX_LP_ITEMS) -> LinearProgramSpec:
    _check_size(inst, max_items)
    coef, rhs = _lp_data(inst, params)
    A = np.vstack([coef.T, np.ones((1, coef.shape[0]))])
    b = np.zeros(inst.m + 1)
    b[-1] = 1.0
    names = tuple(f"muT_{T}" for T in range(coef.shape[0]))
    return LinearProgramSpec(names, A, (">=",) * inst.m + ("==",), b, rhs, maximize=False,
                             row_names=tuple(f"item{j}" for j in range(inst.m)) + ("norm",))


def prices_from_primal(sol: LPSolution) -> tuple[PriceVector, float]:
    """Prices and slack objective ``lplus - lminus`` of an optimal primal."""
    if not sol.optimal:
        raise ValueError(f"primal solve did not reach optimality (status {sol.status})")
    m = len(sol.names) - 2
    slack = sol.value("lplus") - sol.value("lminus")
    return PriceVector(tuple(sol.x[:m])), float(slack)


def certificate_from_dual(sol: LPSolution, m: int) -> DualCertificate:
    if not sol.optimal:
        raise ValueError(f"dual solve did not reach optimality (status {sol.status})")
    w = np.maximum(sol.x, 0.0)
    return DualCertificate(m, w / w.sum())


def direct_dual_objective(cert: DualCertificate, inst: Instance, params: Parameters) -> float:
    """``sum_T mu_T (beta R(T) - E[OPT]/alpha)``."""
    _, rhs = _lp_data(inst, params)
    return float(cert.weights @ rhs)


def dual_objective(cert: DualCertificate, inst: Instance, params: Parameters) -> float:
    """Dual objective with the sums reordered per agent and optimal bundle.

    ``sum_i sum_S E[1{S = OPT_i(v)} (beta sum_T mu_T v_i(S minus T) - v_i(S)/alpha)]``.
    Raises if it disagrees with :func:`direct_dual_objective` beyond 1e-9.
    """
    stats = opt_stats(inst)
    masks = np.arange(1 << inst.m)
    total = 0.0
    for r in stats.records:
        for v, S in zip(r.profile.valuations, r.allocation.bundles):
            kept = float(cert.weights @ v.table[S & ~masks])
            total += r.profile.probability * (params.beta * kept - v.table[S] / params.alpha)
    direct = direct_dual_objective(cert, inst, params)
    if abs(total - direct) > 1e-9:
        raise ArithmeticError(f"reordered dual objective {total} != direct {direct}")
    return float(total)


def marginal_absence_prob(cert: DualCertificate, j: int) -> float:
    """``Pr_{T ~ mu}[j not in T]``."""
    if not 0 <= j < cert.m:
        raise ValueError(f"item {j} outside {cert.m}-item universe")
    masks = np.arange(1 << cert.m)
    return float(cert.weights[(masks >> j) & 1 == 0].sum())


def check_dual_feasible(cert: DualCertificate, params: Parameters) -> np.ndarray:
    """Per-item margin ``Pr[j not in T] - 1/(1+beta)``; feasible iff all >= -1e-9."""
    return np.array([marginal_absence_prob(cert, j) for j in range(cert.m)]) - 1.0 / (1.0 + params.beta)


def verify_feasible_point(inst: Instance, params: Parameters, prices: PriceVector | Sequence[float]) -> float:
    """Worst row slack ``min_T (RHS_T - LHS_T)`` at ``lplus = lminus = 0``."""
    p = np.asarray(list(prices), dtype=float)
    if p.shape != (inst.m,):
        raise ValueError(f"expected {inst.m} prices, got {p.shape}")
    coef, rhs = _lp_data(inst, params)
    return float((rhs - coef @ p).min())


def random_feasible_certificate(m: int, beta: float, rng: np.random.Generator,
                                concentration: float = 0.3) -> DualCertificate:
    """Random distribution over subsets pushed into the dual-feasible region.

    Draws Dirichlet weights over all subsets, then for every item whose
    presence probability exceeds ``beta/(1+beta)`` moves the needed fraction
    of mass from each set containing it to that set without it. Removing an
    item never raises another item's presence probability, so one sweep
    suffices. Test scaffolding for the certificate checks.
    """
    w = rng.dirichlet(np.full(1 << m, concentration))
    masks = np.arange(1 << m)
    cap = beta / (1.0 + beta)
    for j in range(m):
        has = (masks >> j) & 1 == 1
        present = w[has].sum()
        if present > cap:
            # land a hair inside the boundary so float error cannot push it out
            keep = cap * (1.0 - 1e-12) / present
            moved = w[has] * (1.0 - keep)
            w[has] -= moved
            np.add.at(w, masks[has] & ~(1 << j), moved)
    return DualCertificate(m, w / w.sum())


def fgl_prices(inst: Instance, stats: OptStats | None = None) -> PriceVector:
    """Half the expected contribution of each item to the offline optimum.

    ``p_j = 1/2 sum_i E[w_i^{OPT_i(v)}({j}) 1{j in OPT_i(v)}]`` with
    ``w_i^S`` the supporting additive clause of ``v_i`` at ``S``. XOS only.
    """
    stats = stats or opt_stats(inst)
    p = np.zeros(inst.m)
    for r in stats.records:
        for v, S in zip(r.profile.valuations, r.allocation.bundles):
            if not isinstance(v, (XOS, Additive)):
                raise TypeError("FGL prices are defined for XOS valuations only")
            w = np.asarray(supporting_additive(v, S).weights)
            for j in items_of(S):
                p[j] += 0.5 * r.profile.probability * w[j]
    return PriceVector(tuple(p))


# --------------------------------------------------------------------------
# certificate files: {"mu": [{"items": [...], "weight": w}, ...]}


def certificate_to_dict(cert: DualCertificate) -> dict:
    return {"mu": [{"items": items_of(T), "weight": w} for T, w in cert.items()]}


def certificate_from_dict(doc: dict, m: int) -> DualCertificate:
    if not isinstance(doc, dict) or not isinstance(doc.get("mu"), list):
        raise ValueError("certificate document needs a 'mu' list")
    mu: dict[int, float] = {}
    for e, entry in enumerate(doc["mu"]):
        if not isinstance(entry, dict) or "items" not in entry or "weight" not in entry:
            raise ValueError(f"mu[{e}]: needs 'items' and 'weight'")
        items, weight = entry["items"], entry["weight"]
        if not isinstance(items, list) or any(not isinstance(j, int) or not 0 <= j < m for j in items):
            raise ValueError(f"mu[{e}]: items must be indices in 0..{m - 1}")
        if not isinstance(weight, (int, float)) or weight < 0:
            raise ValueError(f"mu[{e}]: weight must be non-negative")
        T = bundle(items)
        mu[T] = mu.get(T, 0.0) + float(weight)
    return DualCertificate.from_mapping(m, mu)


def load_certificate(path: str | Path, m: int) -> DualCertificate:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    return certificate_from_dict(doc, m)

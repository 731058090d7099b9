"""Valuation classes over a finite item universe.

Bundles are plain ``int`` bitmasks: item ``j`` is in bundle ``S`` iff
``S >> j & 1``. Every valuation knows its universe size ``m`` and can
produce a dense value table over all ``2**m`` bundles, which the rest of
the package uses for vectorised lookups.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "UniverseMismatchError",
    "Additive",
    "XOS",
    "PHk",
    "MPHk",
    "Valuation",
    "bundle",
    "items_of",
    "full_bundle",
    "popcount",
    "evaluate",
    "supporting_additive",
    "supporting_phk",
    "demand",
    "rank",
    "canonical_order",
]

# utilities within this distance are treated as ties
TIE_TOL = 1e-12


class UniverseMismatchError(ValueError):
    """A bundle or valuation refers to items outside the item universe."""


# --------------------------------------------------------------------------
# bundle helpers


def bundle(items: Iterable[int]) -> int:
    mask = 0
    for j in items:
        if j < 0:
            raise UniverseMismatchError(f"negative item index {j}")
        mask |= 1 << j
    return mask


def items_of(mask: int) -> list[int]:
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return out


def full_bundle(m: int) -> int:
    return (1 << m) - 1


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def _check_bundle(mask: int, m: int) -> None:
    if mask < 0 or mask >> m:
        raise UniverseMismatchError(f"bundle {items_of(mask)} outside universe of {m} items")


_ORDER_CACHE: dict[int, np.ndarray] = {}


def canonical_order(m: int) -> np.ndarray:
    """All bundles of an ``m``-item universe sorted by (cardinality, bitmask)."""
    order = _ORDER_CACHE.get(m)
    if order is None:
        masks = np.arange(1 << m)
        sizes = np.array([popcount(int(s)) for s in masks])
        order = masks[np.lexsort((masks, sizes))]
        order.setflags(write=False)
        _ORDER_CACHE[m] = order
    return order


def _subset_tables(m: int) -> np.ndarray:
    """Boolean matrix ``inc[S, j]`` = item j in bundle S."""
    masks = np.arange(1 << m)
    return ((masks[:, None] >> np.arange(m)[None, :]) & 1).astype(bool)


# --------------------------------------------------------------------------
# valuation classes


@dataclass(frozen=True)
class Additive:
    """``a(S) = sum of weights[j] for j in S``."""

    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.weights:
            raise ValueError("additive function needs at least one item")
        if any(not np.isfinite(w) or w < 0 for w in self.weights):
            raise ValueError(f"additive weights must be finite and non-negative: {self.weights}")

    @property
    def m(self) -> int:
        return len(self.weights)

    def value(self, S: int) -> float:
        _check_bundle(S, self.m)
        return float(sum(w for j, w in enumerate(self.weights) if S >> j & 1))

    @cached_property
    def table(self) -> np.ndarray:
        t = _subset_tables(self.m) @ np.asarray(self.weights)
        t.setflags(write=False)
        return t


@dataclass(frozen=True)
class XOS:
    """Maximum over a non-empty list of additive clauses."""

    clauses: tuple[Additive, ...]

    def __post_init__(self):
        clauses = tuple(c if isinstance(c, Additive) else Additive(c) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if not clauses:
            raise ValueError("XOS function needs at least one clause")
        if len({c.m for c in clauses}) != 1:
            raise UniverseMismatchError("XOS clauses disagree on the item count")

    @property
    def m(self) -> int:
        return self.clauses[0].m

    def value(self, S: int) -> float:
        return max(c.value(S) for c in self.clauses)

    @cached_property
    def table(self) -> np.ndarray:
        t = np.max([c.table for c in self.clauses], axis=0)
        t.setflags(write=False)
        return t


@dataclass(frozen=True)
class PHk:
    """Positive-hyperedge function of rank at most ``k``.

    ``edges`` holds ``(bitmask, weight)`` pairs; ``v(S)`` sums the weights
    of every hyperedge contained in ``S``.
    """

    m: int
    k: int
    edges: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("item universe must be non-empty")
        if self.k < 1:
            raise ValueError(f"rank bound k must be positive, got {self.k}")
        edges = tuple(sorted((int(X), float(w)) for X, w in self.edges))
        seen = set()
        for X, w in edges:
            _check_bundle(X, self.m)
            if X in seen:
                raise ValueError(f"duplicate hyperedge {items_of(X)}")
            seen.add(X)
            size = popcount(X)
            if size == 0:
                raise ValueError("hyperedges must be non-empty")
            if size > self.k:
                raise ValueError(f"hyperedge {items_of(X)} exceeds rank bound k={self.k}")
            if not np.isfinite(w) or w <= 0:
                raise ValueError(f"hyperedge weights must be positive, got {w}")
        object.__setattr__(self, "edges", edges)

    @property
    def rank(self) -> int:
        return max((popcount(X) for X, _ in self.edges), default=0)

    def value(self, S: int) -> float:
        _check_bundle(S, self.m)
        return float(sum(w for X, w in self.edges if X & S == X))

    @cached_property
    def table(self) -> np.ndarray:
        masks = np.arange(1 << self.m)
        t = np.zeros(1 << self.m)
        for X, w in self.edges:
            t += np.where(masks & X == X, w, 0.0)
        t.setflags(write=False)
        return t


@dataclass(frozen=True)
class MPHk:
    """Maximum over a non-empty list of PH-k functions."""

    k: int
    clauses: tuple[PHk, ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if not self.clauses:
            raise ValueError("MPH-k function needs at least one clause")
        if len({c.m for c in self.clauses}) != 1:
            raise UniverseMismatchError("MPH-k clauses disagree on the item count")
        for c in self.clauses:
            if c.rank > self.k:
                raise ValueError(f"clause of rank {c.rank} exceeds k={self.k}")

    @property
    def m(self) -> int:
        return self.clauses[0].m

    def value(self, S: int) -> float:
        return max(c.value(S) for c in self.clauses)

    @cached_property
    def table(self) -> np.ndarray:
        t = np.max([c.table for c in self.clauses], axis=0)
        t.setflags(write=False)
        return t


Valuation = Union[Additive, XOS, PHk, MPHk]


def rank(v: Valuation) -> int:
    """Largest hyperedge size needed to express ``v`` (1 for additive/XOS)."""
    if isinstance(v, (Additive, XOS)):
        return 1
    if isinstance(v, PHk):
        return max(v.rank, 1)
    return max(max(c.rank for c in v.clauses), 1)


# --------------------------------------------------------------------------
# oracles


def evaluate(v: Valuation, S: int) -> float:
    """Exact value of bundle ``S``; raises if ``S`` leaves the universe."""
    _check_bundle(S, v.m)
    return float(v.table[S])


def supporting_additive(v: XOS | Additive, S: int) -> Additive:
    """Clause attaining ``v(S)``; lowest clause index wins ties."""
    _check_bundle(S, v.m)
    if isinstance(v, Additive):
        return v
    values = [c.table[S] for c in v.clauses]
    best = max(values)
    return v.clauses[next(i for i, x in enumerate(values) if x >= best - TIE_TOL)]


def supporting_phk(v: MPHk | PHk, S: int) -> PHk:
    """PH-k clause attaining ``v(S)``; lowest clause index wins ties."""
    _check_bundle(S, v.m)
    if isinstance(v, PHk):
        return v
    values = [c.table[S] for c in v.clauses]
    best = max(values)
    return v.clauses[next(i for i, x in enumerate(values) if x >= best - TIE_TOL)]


def price_table(prices: Sequence[float], m: int) -> np.ndarray:
    """Total price of every bundle, indexed by bitmask."""
    p = np.asarray(prices, dtype=float)
    if p.shape != (m,):
        raise UniverseMismatchError(f"expected {m} prices, got {p.shape}")
    return _subset_tables(m) @ p


def demand(v: Valuation, prices: Sequence[float], available: int) -> int:
    """Utility-maximising bundle among subsets of ``available``.

    Exhaustive over all subsets. Ties go to the smaller bundle, then to
    the smaller bitmask, so the empty bundle wins any tie at utility 0.
    """
    _check_bundle(available, v.m)
    return demand_from_tables(v.table, price_table(prices, v.m), available, v.m)


def demand_from_tables(values: np.ndarray, costs: np.ndarray, available: int, m: int) -> int:
    order = canonical_order(m)
    cand = order[(order & ~available) == 0]
    util = values[cand] - costs[cand]
    best = util.max()
    return int(cand[np.argmax(util >= best - TIE_TOL)])

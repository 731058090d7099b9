"""Brute-force offline optimum and the expectations the LP is built from."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .instances import DEFAULT_PROFILE_CAP, Instance, ValuationProfile, enumerate_profiles
from .valuations import TIE_TOL, evaluate, full_bundle

__all__ = [
    "AllocationTooLarge",
    "Allocation",
    "OptRecord",
    "OptStats",
    "optimal_allocation",
    "opt_bundle",
    "optimal_partial_welfare",
    "opt_stats",
]

DEFAULT_ASSIGNMENT_CAP = 10**7


class AllocationTooLarge(RuntimeError):
    """``n**m`` assignments exceed the configured cap."""


@dataclass(frozen=True)
class Allocation:
    bundles: tuple[int, ...]

    def __post_init__(self):
        seen = 0
        for X in self.bundles:
            if X & seen:
                raise ValueError("allocation bundles overlap")
            seen |= X

    @property
    def allocated(self) -> int:
        out = 0
        for X in self.bundles:
            out |= X
        return out

    def welfare(self, profile: ValuationProfile) -> float:
        return sum(evaluate(v, X) for v, X in zip(profile.valuations, self.bundles))


@lru_cache(maxsize=None)
def _assignment_masks(n: int, m: int) -> np.ndarray:
    """``masks[a, i]``: bundle of agent i under the a-th assignment vector.

    Assignments are listed lexicographically with item 0 most significant.
    """
    assign = np.array(list(itertools.product(range(n), repeat=m)), dtype=np.int64).reshape(-1, m)
    bits = (1 << np.arange(m, dtype=np.int64))[None, :]
    masks = np.stack([((assign == i) * bits).sum(axis=1) for i in range(n)], axis=1)
    masks.setflags(write=False)
    return masks


def optimal_allocation(
    profile: ValuationProfile, cap: int = DEFAULT_ASSIGNMENT_CAP
) -> tuple[Allocation, float]:
    """Welfare-maximising full allocation by exhaustive assignment search.

    Every item goes to exactly one agent. Among (near-)optimal assignments
    the lexicographically smallest owner vector wins.
    """
    n, m = profile.n, profile.m
    if n**m > cap:
        raise AllocationTooLarge(f"{n}**{m} assignments exceeds cap {cap}")
    masks = _assignment_masks(n, m)
    welfare = np.zeros(len(masks))
    for i, v in enumerate(profile.valuations):
        welfare += v.table[masks[:, i]]
    best = welfare.max()
    a = int(np.argmax(welfare >= best - TIE_TOL))
    return Allocation(tuple(int(X) for X in masks[a])), float(welfare[a])


def opt_bundle(profile: ValuationProfile, i: int) -> int:
    return optimal_allocation(profile)[0].bundles[i]


def optimal_partial_welfare(profile: ValuationProfile) -> float:
    """Independent oracle: best welfare when items may also stay unassigned.

    Plain enumeration over ``evaluate``; shares no code with the vectorised
    search in :func:`optimal_allocation`.
    """
    n, m = profile.n, profile.m
    best = 0.0
    for owners in itertools.product(range(n + 1), repeat=m):
        bundles = [0] * n
        for j, o in enumerate(owners):
            if o < n:
                bundles[o] |= 1 << j
        best = max(best, sum(evaluate(v, X) for v, X in zip(profile.valuations, bundles)))
    return best


@dataclass(frozen=True)
class OptRecord:
    profile: ValuationProfile
    allocation: Allocation
    welfare: float


@dataclass(frozen=True, eq=False)
class OptStats:
    """Exact expectations over all profiles of the canonical offline optimum."""

    m: int
    n: int
    expected_optimum: float
    item_probs: np.ndarray
    records: tuple[OptRecord, ...]

    def agent_item_probs(self) -> np.ndarray:
        """``out[i, j] = Pr[j in OPT_i(v)]``."""
        out = np.zeros((self.n, self.m))
        for r in self.records:
            for i, X in enumerate(r.allocation.bundles):
                out[i] += r.profile.probability * ((X >> np.arange(self.m)) & 1)
        return out

    def residual_values(self) -> np.ndarray:
        """``out[T] = sum_i E[v_i(OPT_i(v) minus T)]`` for every bundle ``T``."""
        masks = np.arange(1 << self.m)
        out = np.zeros(1 << self.m)
        for r in self.records:
            for v, X in zip(r.profile.valuations, r.allocation.bundles):
                out += r.profile.probability * v.table[X & ~masks]
        return out

    def residual_price_weights(self) -> np.ndarray:
        """``out[T, j] = sum_i Pr[j in OPT_i(v)] * [j not in T]``.

        The full-allocation convention makes the probability sum exactly 1
        (checked in :func:`opt_stats`), so this is the absence indicator.
        """
        masks = np.arange(1 << self.m)
        return ((~masks[:, None] >> np.arange(self.m)[None, :]) & 1).astype(float)


def opt_stats(inst: Instance, cap: int = DEFAULT_PROFILE_CAP) -> OptStats:
    """Exact offline statistics; memoised per instance."""
    return _opt_stats(inst, cap)


@lru_cache(maxsize=256)
def _opt_stats(inst: Instance, cap: int) -> OptStats:
    records = []
    q = np.zeros(inst.m)
    total = 0.0
    for prof in enumerate_profiles(inst, cap):
        alloc, w = optimal_allocation(prof)
        records.append(OptRecord(prof, alloc, w))
        total += prof.probability * w
        for X in alloc.bundles:
            q += prof.probability * ((X >> np.arange(inst.m)) & 1)
        if alloc.allocated != full_bundle(inst.m):
            raise AssertionError("canonical optimum left items unassigned")
    if not np.allclose(q, 1.0, atol=1e-10):
        raise AssertionError(f"item allocation probabilities {q} differ from 1")
    q.setflags(write=False)
    return OptStats(inst.m, inst.n, total, q, tuple(records))

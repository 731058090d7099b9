"""Sequential posted-price mechanism and its welfare lower bound."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .instances import Instance, ValuationProfile, enumerate_profiles, sample_profile
from .lp_core import PriceVector
from .offline import Allocation, opt_stats
from .valuations import TIE_TOL, demand_from_tables, full_bundle, price_table

__all__ = [
    "MechanismOutcome",
    "WelfareEstimate",
    "run_mechanism",
    "expected_welfare",
    "lemma1_bound",
    "lemma1_terms",
]


@dataclass(frozen=True)
class MechanismOutcome:
    allocation: Allocation
    sold: int
    revenue: float
    utilities: tuple[float, ...]
    welfare: float


@dataclass(frozen=True)
class WelfareEstimate:
    mean: float
    stderr: float = 0.0
    samples: int = 0  # 0 for exact enumeration

    @property
    def exact(self) -> bool:
        return self.samples == 0


def _prices(prices: PriceVector | Sequence[float], m: int) -> np.ndarray:
    p = np.asarray(list(prices), dtype=float)
    if p.shape != (m,):
        raise ValueError(f"expected {m} prices, got {p.shape}")
    if np.any(p < 0):
        raise ValueError("prices must be non-negative")
    return p


def run_mechanism(profile: ValuationProfile, prices: PriceVector | Sequence[float]) -> MechanismOutcome:
    """Agents arrive in profile order and each buys its demand among unsold items."""
    m = profile.m
    p = _prices(prices, m)
    costs = price_table(p, m)
    remaining = full_bundle(m)
    bundles, utils = [], []
    welfare = 0.0
    for v in profile.valuations:
        X = demand_from_tables(v.table, costs, remaining, m)
        bundles.append(X)
        value = float(v.table[X])
        utils.append(value - float(costs[X]))
        welfare += value
        remaining &= ~X
    sold = full_bundle(m) & ~remaining
    return MechanismOutcome(Allocation(tuple(bundles)), sold, float(costs[sold]), tuple(utils), welfare)


def expected_welfare(
    inst: Instance,
    prices: PriceVector | Sequence[float],
    samples: int | None = None,
    seed: int | None = None,
) -> WelfareEstimate:
    """Exact expected welfare, or a Monte Carlo mean when ``samples`` is given."""
    if samples is None:
        total = sum(prof.probability * run_mechanism(prof, prices).welfare
                    for prof in enumerate_profiles(inst))
        return WelfareEstimate(float(total))
    if samples < 2:
        raise ValueError("Monte Carlo needs at least two samples")
    rng = np.random.default_rng(seed)
    w = np.array([run_mechanism(sample_profile(inst, rng), prices).welfare for _ in range(samples)])
    return WelfareEstimate(float(w.mean()), float(w.std(ddof=1) / np.sqrt(samples)), samples)


def lemma1_terms(inst: Instance, prices: PriceVector | Sequence[float], beta: float) -> np.ndarray:
    """For every ``T``: ``p(T) + beta * sum_i E[v_i(S minus T) - p(S minus T)]``, ``S = OPT_i(v)``."""
    if not 0 <= beta <= 1:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    m = inst.m
    p = _prices(prices, m)
    costs = price_table(p, m)
    masks = np.arange(1 << m)
    utility = np.zeros(1 << m)
    for r in opt_stats(inst).records:
        for v, S in zip(r.profile.valuations, r.allocation.bundles):
            rest = S & ~masks
            utility += r.profile.probability * (v.table[rest] - costs[rest])
    return costs + beta * utility


def lemma1_bound(inst: Instance, prices: PriceVector | Sequence[float], beta: float) -> tuple[float, int]:
    """Minimum over ``T`` of :func:`lemma1_terms` and its lowest-bitmask minimiser."""
    terms = lemma1_terms(inst, prices, beta)
    T = int(np.argmax(terms <= terms.min() + TIE_TOL))
    return float(terms[T]), T

"""Closed-form (alpha, beta) pairs per valuation class and inequality checks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instances import Instance
from .lp_core import DualCertificate, Parameters
from .valuations import Valuation, evaluate, popcount

__all__ = [
    "CLASSES",
    "ClassParameters",
    "parameters_for",
    "parameters_for_instance",
    "mph_identity_residual",
    "check_claim1",
    "claim1_margins",
    "check_hyperedge_survival",
]

CLASSES = ("single_item", "xos", "mph_balanced", "mph_improved")


@dataclass(frozen=True)
class ClassParameters:
    cls: str
    alpha: float
    beta: float
    k: int = 1

    @property
    def params(self) -> Parameters:
        return Parameters(self.alpha, self.beta)


def parameters_for(cls: str, k: int | None = None) -> ClassParameters:
    """Ratio ``alpha`` and scaling ``beta`` proven for a valuation class.

    single item and XOS: (2, 1).
    MPH-k balanced: (4k - 2, 1 / (2(k - 1))).
    MPH-k improved: (2k + 2 sqrt(k(k - 1)) - 1, sqrt(k / (k - 1)) - 1).
    Both MPH-k variants need ``k >= 2``.
    """
    if cls in ("single_item", "xos"):
        return ClassParameters(cls, 2.0, 1.0)
    if cls not in ("mph_balanced", "mph_improved"):
        raise ValueError(f"unknown class {cls!r}; expected one of {CLASSES}")
    if k is None or k < 2:
        raise ValueError(f"{cls} needs k >= 2 (use 'xos' for k = 1), got k={k}")
    if cls == "mph_balanced":
        return ClassParameters(cls, 4.0 * k - 2.0, 1.0 / (2.0 * (k - 1)), k)
    return ClassParameters(cls, 2.0 * k + 2.0 * math.sqrt(k * (k - 1)) - 1.0,
                           math.sqrt(k / (k - 1)) - 1.0, k)


def parameters_for_instance(inst: Instance, variant: str = "improved") -> ClassParameters:
    """Class parameters matching ``inst``'s declared class; MPH-1 counts as XOS."""
    tag = inst.class_tag
    if tag.kind == "xos" or tag.k == 1:
        return parameters_for("xos")
    if variant not in ("balanced", "improved"):
        raise ValueError(f"variant must be 'balanced' or 'improved', got {variant!r}")
    return parameters_for(f"mph_{variant}", tag.k)


def mph_identity_residual(k: int, alpha: float, beta: float) -> float:
    """``(1 - k beta / (1 + beta)) - 1 / (alpha beta)``."""
    return (1.0 - k * beta / (1.0 + beta)) - 1.0 / (alpha * beta)


def _kept_values(cert: DualCertificate, v: Valuation, S: int) -> float:
    masks = np.arange(1 << cert.m)
    return float(cert.weights @ v.table[S & ~masks])


def check_claim1(cert: DualCertificate, v: Valuation, S: int, params: Parameters) -> float:
    """``sum_T mu_T v(S minus T) - v(S) / (alpha beta)``."""
    if v.m != cert.m:
        raise ValueError("certificate and valuation disagree on the item count")
    return _kept_values(cert, v, S) - evaluate(v, S) / (params.alpha * params.beta)


def claim1_margins(cert: DualCertificate, v: Valuation, params: Parameters) -> np.ndarray:
    """:func:`check_claim1` for every bundle ``S`` at once, indexed by bitmask."""
    if v.m != cert.m:
        raise ValueError("certificate and valuation disagree on the item count")
    masks = np.arange(1 << cert.m)
    kept = v.table[masks[:, None] & ~masks[None, :]] @ cert.weights
    return kept - v.table / (params.alpha * params.beta)


def check_hyperedge_survival(cert: DualCertificate, X: int, k: int, beta: float) -> float:
    """``Pr_mu[X and T disjoint] - (1 - k beta / (1 + beta))`` for ``|X| <= k``."""
    if popcount(X) > k:
        raise ValueError(f"hyperedge of size {popcount(X)} exceeds k={k}")
    if X >> cert.m:
        raise ValueError("hyperedge outside the certificate's universe")
    masks = np.arange(1 << cert.m)
    survive = float(cert.weights[(masks & X) == 0].sum())
    return survive - (1.0 - k * beta / (1.0 + beta))

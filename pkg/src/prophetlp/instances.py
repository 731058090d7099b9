"""Stochastic auction instances: priors, profile enumeration, sampling, I/O."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .valuations import MPHk, PHk, XOS, Additive, Valuation, bundle, items_of, rank

__all__ = [
    "InstanceFormatError",
    "EnumerationTooLarge",
    "ClassTag",
    "AgentPrior",
    "Instance",
    "ValuationProfile",
    "enumerate_profiles",
    "sample_profile",
    "generate_random_instance",
    "valuation_from_dict",
    "valuation_to_dict",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "dump_instance",
]

PROB_TOL = 1e-12
FILE_PROB_TOL = 1e-9
DEFAULT_PROFILE_CAP = 10**6


class InstanceFormatError(ValueError):
    """Instance document fails validation."""


class EnumerationTooLarge(RuntimeError):
    """Exact enumeration would exceed the configured cap; use sampling instead."""


@dataclass(frozen=True)
class ClassTag:
    """Declared valuation class: ``"xos"`` or ``"mph"`` with its rank bound."""

    kind: str
    k: int = 1

    def __post_init__(self):
        if self.kind not in ("xos", "mph"):
            raise ValueError(f"unknown valuation class {self.kind!r}")
        if self.kind == "xos" and self.k != 1:
            raise ValueError("XOS class carries k=1")
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")

    def admits(self, v: Valuation) -> bool:
        return rank(v) <= self.k


@dataclass(frozen=True)
class AgentPrior:
    support: tuple[tuple[Valuation, float], ...]

    def __post_init__(self):
        support = tuple((v, float(p)) for v, p in self.support)
        object.__setattr__(self, "support", support)
        if not support:
            raise ValueError("agent prior needs a non-empty support")
        if any(not p > 0 for _, p in support):
            raise ValueError("support probabilities must be positive")
        total = math.fsum(p for _, p in support)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"support probabilities sum to {total!r}, not 1")
        if len({v.m for v, _ in support}) != 1:
            raise ValueError("support valuations disagree on the item count")

    @classmethod
    def deterministic(cls, v: Valuation) -> "AgentPrior":
        return cls(((v, 1.0),))

    @property
    def m(self) -> int:
        return self.support[0][0].m

    @property
    def valuations(self) -> tuple[Valuation, ...]:
        return tuple(v for v, _ in self.support)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.support])


@dataclass(frozen=True)
class Instance:
    """``m`` items and agents in arrival order, each with an independent prior."""

    m: int
    agents: tuple[AgentPrior, ...]
    class_tag: ClassTag = ClassTag("xos")

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if self.m < 1:
            raise ValueError("need at least one item")
        if not self.agents:
            raise ValueError("need at least one agent")
        for i, a in enumerate(self.agents):
            if a.m != self.m:
                raise ValueError(f"agent {i} valuations use {a.m} items, instance has {self.m}")
            for v in a.valuations:
                if not self.class_tag.admits(v):
                    raise ValueError(
                        f"agent {i} has a valuation of rank {rank(v)}, "
                        f"outside declared class {self.class_tag}"
                    )

    @property
    def n(self) -> int:
        return len(self.agents)

    def profile_count(self) -> int:
        return math.prod(len(a.support) for a in self.agents)

    def max_value(self) -> float:
        """Largest value any support valuation assigns to the grand bundle."""
        full = (1 << self.m) - 1
        return max(float(v.table[full]) for a in self.agents for v in a.valuations)

    def reordered(self, order: Sequence[int]) -> "Instance":
        """Same instance with agents arriving in ``order``."""
        return Instance(self.m, tuple(self.agents[i] for i in order), self.class_tag)


@dataclass(frozen=True)
class ValuationProfile:
    valuations: tuple[Valuation, ...]
    probability: float = 1.0

    @property
    def n(self) -> int:
        return len(self.valuations)

    @property
    def m(self) -> int:
        return self.valuations[0].m


# --------------------------------------------------------------------------
# enumeration and sampling


def enumerate_profiles(inst: Instance, cap: int = DEFAULT_PROFILE_CAP) -> list[ValuationProfile]:
    """Cartesian product of supports, lexicographic in support indices."""
    count = inst.profile_count()
    if count > cap:
        raise EnumerationTooLarge(
            f"{count} profiles exceeds the enumeration cap of {cap}; use sampling instead"
        )
    out = []
    for combo in itertools.product(*(a.support for a in inst.agents)):
        prob = math.prod(p for _, p in combo)
        out.append(ValuationProfile(tuple(v for v, _ in combo), prob))
    return out


def sample_profile(inst: Instance, rng: np.random.Generator) -> ValuationProfile:
    vals = []
    prob = 1.0
    for a in inst.agents:
        idx = int(rng.choice(len(a.support), p=a.probs)) if len(a.support) > 1 else 0
        v, p = a.support[idx]
        vals.append(v)
        prob *= p
    return ValuationProfile(tuple(vals), prob)


def _random_probs(rng: np.random.Generator, size: int) -> list[float]:
    raw = 0.1 + rng.random(size)
    probs = list(raw / raw.sum())
    probs[-1] = 1.0 - math.fsum(probs[:-1])
    return probs


def _random_xos(rng: np.random.Generator, m: int) -> XOS:
    n_clauses = int(rng.integers(1, 4))
    return XOS(tuple(Additive(tuple(rng.random(m))) for _ in range(n_clauses)))


def _random_phk(rng: np.random.Generator, m: int, k: int) -> PHk:
    edges: dict[int, float] = {}
    for _ in range(int(rng.integers(1, 2 * m + 1))):
        size = int(rng.integers(1, min(k, m) + 1))
        items = rng.choice(m, size=size, replace=False)
        X = bundle(int(j) for j in items)
        # 1 - U[0,1) lies in (0, 1], keeping weights strictly positive
        w = float(1.0 - rng.random())
        edges.setdefault(X, w)
    return PHk(m, k, tuple(edges.items()))


def _random_mphk(rng: np.random.Generator, m: int, k: int) -> MPHk:
    n_clauses = int(rng.integers(1, 4))
    return MPHk(k, tuple(_random_phk(rng, m, k) for _ in range(n_clauses)))


def generate_random_instance(
    kind: str,
    m: int,
    n: int,
    support_size: int,
    k: int = 1,
    rng: np.random.Generator | int | None = None,
) -> Instance:
    """Random instance of class ``kind`` ("xos" or "mph"); deterministic per seed."""
    if min(m, n, support_size, k) < 1:
        raise ValueError("m, n, support_size and k must be positive")
    rng = np.random.default_rng(rng)
    if kind == "xos":
        tag = ClassTag("xos")
        draw = lambda: _random_xos(rng, m)  # noqa: E731
    elif kind == "mph":
        tag = ClassTag("mph", k)
        draw = lambda: _random_mphk(rng, m, k)  # noqa: E731
    else:
        raise ValueError(f"unknown valuation class {kind!r}")
    agents = []
    for _ in range(n):
        vals = [draw() for _ in range(support_size)]
        agents.append(AgentPrior(tuple(zip(vals, _random_probs(rng, support_size)))))
    return Instance(m, tuple(agents), tag)


# --------------------------------------------------------------------------
# serialisation


def _require(doc: dict, key: str, where: str) -> Any:
    if not isinstance(doc, dict) or key not in doc:
        raise InstanceFormatError(f"{where}: missing field {key!r}")
    return doc[key]


def _weights(raw: Any, m: int, where: str) -> tuple[float, ...]:
    if not isinstance(raw, list) or not all(isinstance(w, (int, float)) for w in raw):
        raise InstanceFormatError(f"{where}: weights must be a list of numbers")
    if len(raw) != m:
        raise InstanceFormatError(f"{where}: {len(raw)} weights for {m} items")
    if any(w < 0 for w in raw):
        raise InstanceFormatError(f"{where}: negative weight")
    return tuple(float(w) for w in raw)


def _phk_from_dict(doc: dict, m: int, where: str) -> PHk:
    k = _require(doc, "k", where)
    if not isinstance(k, int) or k < 1:
        raise InstanceFormatError(f"{where}: k must be a positive integer")
    edges = {}
    for e, edge in enumerate(_require(doc, "edges", where)):
        ew = f"{where}.edges[{e}]"
        items = _require(edge, "items", ew)
        weight = _require(edge, "weight", ew)
        if not isinstance(items, list) or not items or any(not isinstance(j, int) for j in items):
            raise InstanceFormatError(f"{ew}: items must be a non-empty list of indices")
        if any(j < 0 or j >= m for j in items):
            raise InstanceFormatError(f"{ew}: item index outside 0..{m - 1}")
        if len(set(items)) > k:
            raise InstanceFormatError(f"{ew}: hyperedge of size {len(set(items))} exceeds k={k}")
        if not isinstance(weight, (int, float)) or weight <= 0:
            raise InstanceFormatError(f"{ew}: weight must be positive")
        X = bundle(items)
        if X in edges:
            raise InstanceFormatError(f"{ew}: duplicate hyperedge")
        edges[X] = float(weight)
    return PHk(m, k, tuple(edges.items()))


def valuation_from_dict(doc: dict, m: int, where: str = "valuation") -> Valuation:
    kind = _require(doc, "type", where)
    try:
        if kind == "additive":
            return Additive(_weights(_require(doc, "weights", where), m, where))
        if kind == "xos":
            clauses = _require(doc, "clauses", where)
            if not isinstance(clauses, list) or not clauses:
                raise InstanceFormatError(f"{where}: clauses must be a non-empty list")
            return XOS(tuple(Additive(_weights(c, m, f"{where}.clauses[{i}]"))
                             for i, c in enumerate(clauses)))
        if kind == "phk":
            return _phk_from_dict(doc, m, where)
        if kind == "mphk":
            k = _require(doc, "k", where)
            clauses = _require(doc, "clauses", where)
            if not isinstance(clauses, list) or not clauses:
                raise InstanceFormatError(f"{where}: clauses must be a non-empty list")
            phks = tuple(_phk_from_dict(c, m, f"{where}.clauses[{i}]") for i, c in enumerate(clauses))
            if any(c.k > k for c in phks):
                raise InstanceFormatError(f"{where}: clause rank bound exceeds k={k}")
            return MPHk(k, phks)
    except InstanceFormatError:
        raise
    except (ValueError, TypeError) as exc:
        raise InstanceFormatError(f"{where}: {exc}") from exc
    raise InstanceFormatError(f"{where}: unknown valuation type {kind!r}")


def valuation_to_dict(v: Valuation) -> dict:
    if isinstance(v, Additive):
        return {"type": "additive", "weights": list(v.weights)}
    if isinstance(v, XOS):
        return {"type": "xos", "clauses": [list(c.weights) for c in v.clauses]}
    if isinstance(v, PHk):
        return {"type": "phk", "k": v.k,
                "edges": [{"items": items_of(X), "weight": w} for X, w in v.edges]}
    return {"type": "mphk", "k": v.k, "clauses": [valuation_to_dict(c) for c in v.clauses]}


def instance_from_dict(doc: Any) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be an object")
    m = _require(doc, "m", "instance")
    if not isinstance(m, int) or m < 1:
        raise InstanceFormatError("instance: m must be a positive integer")
    kind = _require(doc, "class", "instance")
    if kind == "xos":
        tag = ClassTag("xos")
    elif kind == "mph":
        k = _require(doc, "k", "instance")
        if not isinstance(k, int) or k < 1:
            raise InstanceFormatError("instance: k must be a positive integer")
        tag = ClassTag("mph", k)
    else:
        raise InstanceFormatError(f"instance: unknown class {kind!r}")
    agents_raw = _require(doc, "agents", "instance")
    if not isinstance(agents_raw, list) or not agents_raw:
        raise InstanceFormatError("instance: agents must be a non-empty list")
    agents = []
    for i, a in enumerate(agents_raw):
        where = f"agents[{i}]"
        support_raw = _require(a, "support", where)
        if not isinstance(support_raw, list) or not support_raw:
            raise InstanceFormatError(f"{where}: support must be a non-empty list")
        support = []
        for s, entry in enumerate(support_raw):
            sw = f"{where}.support[{s}]"
            prob = _require(entry, "prob", sw)
            if not isinstance(prob, (int, float)) or not prob > 0:
                raise InstanceFormatError(f"{sw}: prob must be positive")
            v = valuation_from_dict(_require(entry, "valuation", sw), m, f"{sw}.valuation")
            if not tag.admits(v):
                raise InstanceFormatError(f"{sw}: valuation of rank {rank(v)} outside class {kind}")
            support.append((v, float(prob)))
        total = math.fsum(p for _, p in support)
        if abs(total - 1.0) > FILE_PROB_TOL:
            raise InstanceFormatError(f"{where}: probabilities sum to {total!r}, not 1")
        # absorb float noise within file tolerance so the in-memory prior is exact
        support[-1] = (support[-1][0], 1.0 - math.fsum(p for _, p in support[:-1]))
        try:
            agents.append(AgentPrior(tuple(support)))
        except ValueError as exc:
            raise InstanceFormatError(f"{where}: {exc}") from exc
    return Instance(m, tuple(agents), tag)


def instance_to_dict(inst: Instance) -> dict:
    doc: dict[str, Any] = {"m": inst.m, "class": inst.class_tag.kind}
    if inst.class_tag.kind == "mph":
        doc["k"] = inst.class_tag.k
    doc["agents"] = [
        {"support": [{"prob": p, "valuation": valuation_to_dict(v)} for v, p in a.support]}
        for a in inst.agents
    ]
    return doc


def load_instance(path: str | Path) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(doc)


def dump_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2))

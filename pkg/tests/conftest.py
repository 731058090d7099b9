import numpy as np
import pytest
from hypothesis import settings

from prophetlp.instances import AgentPrior, Instance, generate_random_instance
from prophetlp.valuations import Additive

# exhaustive checks inside examples make per-example timing meaningless
settings.register_profile("default", deadline=None)
settings.load_profile("default")


def single_item_instance() -> Instance:
    """One item, one agent with value 1."""
    return Instance(1, (AgentPrior.deterministic(Additive((1.0,))),))


def tightness_instance() -> Instance:
    """Agent 1 values the item at 1; agent 2 at 10 w.p. 0.1, else 0."""
    return Instance(1, (
        AgentPrior.deterministic(Additive((1.0,))),
        AgentPrior(((Additive((10.0,)), 0.1), (Additive((0.0,)), 0.9))),
    ))


def xos_corpus(count: int = 50) -> list[Instance]:
    out = []
    for s in range(count):
        rng = np.random.default_rng(1000 + s)
        m, n, sup = int(rng.integers(1, 6)), int(rng.integers(1, 4)), int(rng.integers(1, 3))
        out.append(generate_random_instance("xos", m, n, sup, rng=rng))
    return out


def mph_corpus(k: int, count: int = 30) -> list[Instance]:
    out = []
    for s in range(count):
        rng = np.random.default_rng(5000 + 100 * k + s)
        m, n, sup = int(rng.integers(k, 6)), int(rng.integers(1, 4)), int(rng.integers(1, 3))
        out.append(generate_random_instance("mph", m, n, sup, k=k, rng=rng))
    return out


@pytest.fixture
def toy():
    return single_item_instance()


@pytest.fixture
def tight():
    return tightness_instance()


@pytest.fixture(scope="session")
def small_xos():
    return xos_corpus(12)


@pytest.fixture(scope="session")
def small_mph():
    return mph_corpus(2, 6) + mph_corpus(3, 6)

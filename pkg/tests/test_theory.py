import math

import numpy as np
import pytest

from prophetlp.instances import generate_random_instance
from prophetlp.lp_core import (
    DualCertificate,
    check_dual_feasible,
    Parameters,
    build_dual,
    certificate_from_dual,
    dual_objective,
    random_feasible_certificate,
)
from prophetlp.simplex import solve_lp
from prophetlp.theory import (
    check_claim1,
    check_hyperedge_survival,
    claim1_margins,
    mph_identity_residual,
    parameters_for,
    parameters_for_instance,
)
from prophetlp.valuations import XOS, Additive, bundle


def test_parameters_examples():
    xos = parameters_for("xos")
    assert (xos.alpha, xos.beta) == (2, 1)
    assert (parameters_for("single_item").alpha, parameters_for("single_item").beta) == (2, 1)
    bal = parameters_for("mph_balanced", 2)
    assert (bal.alpha, bal.beta) == (6, 0.5)
    imp = parameters_for("mph_improved", 2)
    assert imp.alpha == pytest.approx(5.828427, abs=1e-6)
    assert imp.alpha == pytest.approx(3 + 2 * math.sqrt(2), abs=1e-14)
    assert imp.beta == pytest.approx(0.414214, abs=1e-6)
    imp3 = parameters_for("mph_improved", 3)
    assert imp3.alpha == pytest.approx(6 + 2 * math.sqrt(6) - 1)
    assert imp3.beta == pytest.approx(math.sqrt(1.5) - 1)


@pytest.mark.parametrize("cls", ["mph_balanced", "mph_improved"])
@pytest.mark.parametrize("k", [None, 0, 1])
def test_parameters_domain(cls, k):
    with pytest.raises(ValueError):
        parameters_for(cls, k)


def test_mph1_routes_to_xos():
    inst = generate_random_instance("mph", 3, 2, 1, k=1, rng=0)
    cp = parameters_for_instance(inst)
    assert (cp.alpha, cp.beta) == (2, 1)


def test_identity_examples():
    assert mph_identity_residual(2, 6, 0.5) == pytest.approx(0, abs=1e-12)
    assert mph_identity_residual(2, 3 + 2 * math.sqrt(2), math.sqrt(2) - 1) == pytest.approx(0, abs=1e-12)
    assert abs(mph_identity_residual(2, 6, 1.0)) > 0.1


@pytest.mark.parametrize("k", range(2, 65))
def test_improved_below_balanced(k):
    assert 2 * k + 2 * math.sqrt(k * (k - 1)) - 1 < 4 * k - 2
    assert parameters_for("mph_improved", k).alpha < parameters_for("mph_balanced", k).alpha


def test_claim1_examples():
    half = DualCertificate(1, [0.5, 0.5])
    v = Additive((1.0,))
    assert check_claim1(half, v, 1, Parameters(2, 1)) == pytest.approx(0, abs=1e-15)
    rng = np.random.default_rng(0)
    for _ in range(5):
        cert = DualCertificate(1, rng.dirichlet([1, 1]))
        assert check_claim1(cert, v, 0, Parameters(2, 1)) == 0
    xos = XOS((Additive((2, 1)), Additive((0, 3))))
    assert check_claim1(DualCertificate.point_mass(2, 0), xos, 0b11, Parameters(2, 1)) == pytest.approx(1.5)


def test_claim1_vectorised_matches_scalar(small_mph):
    rng = np.random.default_rng(1)
    inst = small_mph[-1]
    params = parameters_for_instance(inst, "balanced").params
    cert = random_feasible_certificate(inst.m, params.beta, rng)
    v = inst.agents[0].valuations[0]
    margins = claim1_margins(cert, v, params)
    for S in range(1 << inst.m):
        assert margins[S] == pytest.approx(check_claim1(cert, v, S, params), abs=1e-12)


def test_hyperedge_survival_examples():
    rng = np.random.default_rng(2)
    cert = random_feasible_certificate(3, 1.0, rng)
    for j in range(3):
        # |X| = 1 at beta = 1 reduces to the per-item absence margin
        assert check_hyperedge_survival(cert, 1 << j, 1, 1.0) == pytest.approx(
            check_dual_feasible(cert, Parameters(2, 1))[j], abs=1e-15)
    assert check_hyperedge_survival(cert, 0, 2, 0.5) == pytest.approx(2 * 0.5 / 1.5)
    # independent membership with probability 1/3 per item
    w = np.array([(2 / 3) ** (2 - bin(T).count("1")) * (1 / 3) ** bin(T).count("1") for T in range(4)])
    indep = DualCertificate(2, w)
    assert check_hyperedge_survival(indep, 0b11, 2, 0.5) == pytest.approx(4 / 9 - 1 / 3)
    with pytest.raises(ValueError):
        check_hyperedge_survival(indep, 0b11, 1, 0.5)


@pytest.mark.parametrize("variant", ["balanced", "improved"])
def test_survival_under_feasible_certificates(small_mph, variant):
    rng = np.random.default_rng(3)
    for inst in small_mph:
        cp = parameters_for_instance(inst, variant)
        certs = [random_feasible_certificate(inst.m, cp.beta, rng) for _ in range(5)]
        certs.append(certificate_from_dual(solve_lp(build_dual(inst, cp.params)), inst.m))
        for cert in certs:
            for X in range(1 << inst.m):
                if bin(X).count("1") <= cp.k:
                    assert check_hyperedge_survival(cert, X, cp.k, cp.beta) >= -1e-9


def test_claim1_implies_nonnegative_dual(small_xos, small_mph):
    rng = np.random.default_rng(4)
    for inst in small_xos + small_mph:
        params = parameters_for_instance(inst).params
        for _ in range(3):
            cert = random_feasible_certificate(inst.m, params.beta, rng)
            worst = min(claim1_margins(cert, v, params).min()
                        for a in inst.agents for v in a.valuations)
            assert worst >= -1e-7
            assert dual_objective(cert, inst, params) >= -1e-7


def test_claim1_fails_for_infeasible_certificate():
    v = Additive((1.0,))
    assert check_claim1(DualCertificate.point_mass(1, 1), v, 1, Parameters(2, 1)) < 0

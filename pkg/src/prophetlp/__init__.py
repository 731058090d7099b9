"""LP-based static item prices for combinatorial-auction prophet inequalities."""

from .instances import (
    AgentPrior,
    ClassTag,
    Instance,
    ValuationProfile,
    enumerate_profiles,
    generate_random_instance,
    load_instance,
    sample_profile,
)
from .lp_core import (
    DualCertificate,
    Parameters,
    PriceVector,
    build_dual,
    build_primal,
    check_dual_feasible,
    dual_objective,
    fgl_prices,
    prices_from_primal,
    verify_feasible_point,
)
from .mechanism import expected_welfare, lemma1_bound, run_mechanism
from .offline import opt_stats, optimal_allocation
from .simplex import solve_lp
from .theory import parameters_for
from .valuations import MPHk, PHk, XOS, Additive, bundle, demand, evaluate

__version__ = "0.1.0"

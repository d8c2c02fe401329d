"""No-regret solvers and verifiers for (coarse) correlated equilibria of normal-form games."""

from ._validation import InfeasibleParametersError, InputDomainError, InternalStateError
from .games import (
    CongestionGame,
    ExplicitGame,
    HardInstance,
    NormalFormGame,
    QueryCounter,
    game_from_dict,
    load_game,
    make_counterexample_game,
    make_congestion_game,
    make_hard_instance,
    make_random_congestion_game,
    make_random_game,
)
from .gibbs import GibbsSpec, gibbs_distribution, perturb, sample_gibbs, tv_distance
from .mwu import (
    MultiplicativeWeights,
    MwuState,
    cce_params,
    ms_mwu_strategy,
    ms_params,
    ms_schedule,
    mwu_run,
    mwu_strategy,
)
from .distributions import MixtureOfProducts, ProductJoint, SparseJoint, dist_from_dict
from .verify import EquilibriumReport, external_regret, swap_regret, verify_ce, verify_cce
from .cce import CCESolver, CceResult, cce_distributions, solve_cce
from .ce import CESolver, CeCertificate, ce_mixture_gap, solve_ce, windowed_loss
from .reduction import ReductionReport, run_reduction, scaling_fit
from .cost_model import CostEstimate, compare, estimate

__version__ = "0.1.0"

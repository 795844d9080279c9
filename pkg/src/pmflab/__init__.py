"""pmflab: a verification laboratory for semi-supervised minimax pmf estimation.

Exact multinomial risk evaluation, composition estimators over labeled plus
unlabeled samples, fictitious-play minimax brackets, and the rate analysis
that ties them together.
"""

from .asymptotics import (
    RateConstant,
    RiskTable,
    bernstein,
    binomial_tail_bounds,
    exact_l2_risk_table,
    gap_bound,
    mass_risk_curve,
    mle_risk_upper,
    plugin_risk_curve,
    rate_constants,
)
from .core import (
    ConditionalPmf,
    Counts,
    JointCounts,
    JointPmf,
    LossExponent,
    Pmf,
    ShapeMismatch,
    compositions,
    composition_count,
    counts_from_samples,
    lp_loss,
    sample_datasets,
    slice_conditional,
    task_rng,
)
from .estimators import (
    AddConstantL2Estimator,
    EmptySample,
    EstimatorFamily,
    GameTableEstimator,
    MleEstimator,
    UniformEstimator,
    UnivariateEstimator,
    add_constant_family,
    add_constant_l2,
    add_constant_l2_risk,
    conditional_composition,
    game_family,
    joint_composition,
    mle,
    mle_family,
    mle_l2_risk,
    uniform_family,
    zero_sample_estimate,
)
from .game import (
    GameBracket,
    NatureStrategy,
    SolvedTable,
    bayes_response,
    fictitious_play,
    geometric_sizes,
    nature_best_response,
    solution_from_json,
    solution_to_json,
    solve_risk_table,
)
from .risk import (
    DEFAULT_OUTCOME_CAP,
    CapExceeded,
    RiskEstimate,
    WorstCaseResult,
    adversarial_marginal_objective,
    enumerate_outcomes,
    exact_risk_joint,
    exact_risk_joint_limit,
    exact_risk_univariate,
    limit_risk_bracket,
    maximize_adversarial_marginal,
    mc_risk,
    worst_case_risk,
    worst_case_risk_joint,
    worst_case_risk_joint_limit,
)
from .reports import CheckRecord, ConfigError, ExperimentConfig, Report
from .search import SearchConfig, SearchOutcome, maximize_on_simplex, simplex_grid
from .verify import SUITE_NAMES, run_suite

__version__ = "0.1.0"

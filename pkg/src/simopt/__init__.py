"""Discrete simulation-optimization toolkit.

Solvers for stochastic black-box objectives over finite Cartesian-product
spaces: fully sequential indifference-zone ranking and selection (KN), the
stochastic ruler random search (original and alpha-modified acceptance), and
the adaptive hyperbox locally convergent random search, plus a reproducible
experiment harness with a uniform random-search baseline.
"""

from .ah import AhConfig, AhResult, ah_alloc_default, hyperbox_bounds, run_ah, sample_mpa
from .errors import (
    ConfigError,
    DegenerateSplitError,
    EmptyNeighborhoodError,
    EvaluationError,
    InvalidSolutionError,
    OutOfRangeError,
    SimoptError,
    WorkerError,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    RunRecord,
    baseline_random_search,
    emit_delta_curve,
    load_config,
    parse_config,
    persist_delta_curve,
    persist_experiment,
    run_experiment,
)
from .kn import (
    KnConfig,
    KnOutcome,
    continuation_bound,
    kn_constants,
    pairwise_variance,
    run_kn,
    screen,
)
from .objective import (
    BernoulliAccuracyNoise,
    ExternalObjective,
    GaussianNoise,
    Observation,
    ObjectiveHandle,
    SeedPolicy,
    SyntheticObjective,
    derive_seed,
    derive_trial_policy,
    estimate_mean,
    holdout_split,
    permute_indices,
)
from .space import (
    Axis,
    SearchSpace,
    Solution,
    flat_index,
    iter_solutions,
    neighborhood_n1,
    neighborhood_n2,
    solution_at,
    space_from_axes,
)
from .sr import (
    BudgetStop,
    OptimalPerformanceStop,
    SrConfig,
    SrTrace,
    mk_schedule_default,
    run_sr,
    sr_accept_test,
)
from .stats import TrialSummary, TTestResult, summarize_trials, t_test_two_sample

__version__ = "0.1.0"

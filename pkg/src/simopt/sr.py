"""Stochastic ruler random search (maximization form).

Each stage draws one candidate uniformly from the neighborhood of the
current solution and subjects it to up to M_k ruler tests: a fresh replicate
of the candidate against a fresh uniform draw from the ruler range (a, b).
The original rule accepts only if every test passes; the modified rule
accepts once a fraction alpha of the tests passes. Failing early aborts the
remaining tests, which is where the method saves evaluations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

from .errors import ConfigError, EmptyNeighborhoodError
from .objective import (
    STREAM_CANDIDATE,
    STREAM_INITIAL,
    STREAM_RULER,
    ObjectiveHandle,
    Observation,
    SeedPolicy,
    derive_seed,
    derive_stream,
)
from .space import SearchSpace, Solution, flat_index, neighborhood, solution_at

OnEval = Callable[[Observation, int], None]

_LN5 = math.log(5.0)
# Guards ceil() against values like 3.0000000000000004 at exact powers of 5.
_CEIL_EPS = 1e-9


def mk_schedule_default(k: int) -> int:
    """Nondecreasing test count: ceil(ln(k + 10) / ln 5)."""
    if k < 0:
        raise ValueError("stage index must be nonnegative")
    return math.ceil(math.log(k + 10) / _LN5 - _CEIL_EPS)


@dataclass(frozen=True)
class OptimalPerformanceStop:
    """Terminate once the current solution equals a known target."""

    target: Solution


@dataclass(frozen=True)
class BudgetStop:
    """Terminate on any exhausted limit. Evaluation budgets are exact;
    wall-clock and stage limits are checked between stages."""

    max_evals: int | None = None
    max_wall_seconds: float | None = None
    max_stages: int | None = None

    def __post_init__(self):
        if self.max_evals is None and self.max_wall_seconds is None and self.max_stages is None:
            raise ConfigError("budget stop needs at least one limit")
        if self.max_evals is not None and self.max_evals < 2:
            raise ConfigError("evaluation budget below one stage (need >= 2)")


StopRule = OptimalPerformanceStop | BudgetStop


@dataclass(frozen=True)
class SrConfig:
    ruler: tuple[float, float]
    stop: StopRule
    alpha: float = 1.0
    neighborhood: str = "n2"
    mk_schedule: Callable[[int], int] = mk_schedule_default
    initial: Solution | None = None  # None: uniform random start

    def __post_init__(self):
        a, b = self.ruler
        if not a < b:
            raise ConfigError(f"ruler bounds must satisfy a < b, got ({a}, {b})")
        if not 0 < self.alpha <= 1:
            raise ConfigError("alpha must lie in (0, 1]")
        if self.neighborhood not in ("n1", "n2"):
            raise ConfigError("neighborhood must be 'n1' or 'n2'")


@dataclass
class SrStage:
    k: int
    current: Solution
    candidate: Solution
    tests_used: int
    evals_used: int
    accepted: bool


@dataclass
class SrTrace:
    """Full stage log plus the endpoints needed for improvement reporting."""

    initial: Solution
    final: Solution
    stages: list[SrStage]
    evaluations_used: int
    stopped: str  # "target_reached" | "budget"
    initial_value: float | None = None
    final_value: float | None = None
    best_observed: Solution | None = None
    best_observed_mean: float | None = None

    @property
    def stages_count(self) -> int:
        return len(self.stages)


def acceptance_threshold(m_tests: int, alpha: float) -> int:
    """Required passes: all of them for the original rule, ceil(alpha * M)
    for the modified rule."""
    if alpha >= 1.0:
        return m_tests
    return math.ceil(alpha * m_tests - _CEIL_EPS)


def accept_from_draws(
    next_value: Callable[[], float],
    next_ruler: Callable[[], float],
    m_tests: int,
    alpha: float = 1.0,
    max_draws: int | None = None,
) -> tuple[bool, int]:
    """Core acceptance rule on explicit draw streams; returns (accepted,
    tests run). A test passes when the replicate strictly beats the ruler
    draw; ties fail. Exits as soon as the verdict is decided, or rejects
    when ``max_draws`` cuts the stage short.
    """
    if m_tests < 1:
        raise ValueError("need at least one test")
    needed = acceptance_threshold(m_tests, alpha)
    allowed_failures = m_tests - needed
    successes = 0
    failures = 0
    tests = 0
    while True:
        if max_draws is not None and tests >= max_draws:
            return False, tests
        h = next_value()
        u = next_ruler()
        tests += 1
        if h > u:
            successes += 1
            if successes >= needed:
                return True, tests
        else:
            failures += 1
            if failures > allowed_failures:
                return False, tests


def sr_accept_test(
    obj: ObjectiveHandle,
    z: Solution,
    ruler: tuple[float, float],
    m_tests: int,
    alpha: float,
    seed_policy: SeedPolicy,
    ruler_stream,
    first_replication: int = 0,
    max_draws: int | None = None,
    on_eval: OnEval | None = None,
    stage: int = 0,
) -> tuple[bool, int, int]:
    """Ruler test against live evaluations; returns (accepted, tests, evals).

    Each test consumes one replicate of the candidate (fresh derived seed)
    and one ruler draw from the dedicated ruler stream.
    """
    a, b = ruler
    sid = obj.solution_id(z)
    counter = {"reps": 0}

    def next_value() -> float:
        rep = first_replication + counter["reps"]
        counter["reps"] += 1
        obs = obj.evaluate(z, derive_seed(seed_policy, sid, rep))
        if on_eval is not None:
            on_eval(obs, stage)
        return obs.value

    accepted, tests = accept_from_draws(
        next_value, lambda: ruler_stream.uniform(a, b), m_tests, alpha, max_draws
    )
    return accepted, tests, counter["reps"]


def run_sr(
    obj: ObjectiveHandle,
    space: SearchSpace,
    config: SrConfig,
    seed_policy: SeedPolicy,
    on_eval: OnEval | None = None,
) -> SrTrace:
    """Iterate candidate draw / ruler test / move-or-stay until the stop
    rule fires; returns the stage trace and the final solution.

    Candidates are drawn uniformly over the (sorted) neighborhood from a
    dedicated stream, so runs are a pure function of the seed policy. Under
    a budget stop the initial solution is evaluated once up front so the
    improvement endpoints (initial value, final value) are always defined.
    """
    if space.cardinality < 2 and config.neighborhood == "n1":
        raise ConfigError("N1 needs at least two solutions")
    if config.initial is not None:
        space.validate(config.initial)
        x = config.initial
    else:
        init_stream = derive_stream(seed_policy, STREAM_INITIAL)
        x = solution_at(space, init_stream.randint(space.cardinality))
    if isinstance(config.stop, OptimalPerformanceStop):
        space.validate(config.stop.target)

    ruler_stream = derive_stream(seed_policy, STREAM_RULER)
    cand_stream = derive_stream(seed_policy, STREAM_CANDIDATE)

    rep_counts: dict[int, int] = {}
    obs_sums: dict[int, float] = {}
    obs_counts: dict[int, int] = {}

    def track(obs: Observation, stage: int) -> None:
        sid = flat_index(space, obs.solution)
        obs_sums[sid] = obs_sums.get(sid, 0.0) + obs.value
        obs_counts[sid] = obs_counts.get(sid, 0) + 1
        if on_eval is not None:
            on_eval(obs, stage)

    evals_used = 0
    stages: list[SrStage] = []
    initial = x
    initial_value: float | None = None
    t_start = time.monotonic()
    stop = config.stop
    budget = stop if isinstance(stop, BudgetStop) else None

    if budget is not None and budget.max_evals is not None:
        # Anchor the improvement baseline with one replicate of the start.
        sid = flat_index(space, x)
        obs = obj.evaluate(x, derive_seed(seed_policy, sid, 0))
        rep_counts[sid] = 1
        initial_value = obs.value
        evals_used = 1
        track(obs, 0)

    stopped = "budget"
    k = 0
    while True:
        if isinstance(stop, OptimalPerformanceStop) and x == stop.target:
            stopped = "target_reached"
            break
        if budget is not None:
            if budget.max_stages is not None and k >= budget.max_stages:
                break
            if budget.max_evals is not None and evals_used >= budget.max_evals:
                break
            if (
                budget.max_wall_seconds is not None
                and time.monotonic() - t_start >= budget.max_wall_seconds
            ):
                break

        neigh = sorted(neighborhood(space, x, config.neighborhood))
        if not neigh:
            raise EmptyNeighborhoodError(f"{x} has no neighbors; search is stuck")
        z = neigh[cand_stream.randint(len(neigh))]
        m_tests = config.mk_schedule(k)
        if m_tests < 1:
            raise ConfigError(f"mk_schedule({k}) = {m_tests}; must be >= 1")
        zid = flat_index(space, z)
        max_draws = None
        if budget is not None and budget.max_evals is not None:
            max_draws = budget.max_evals - evals_used

        before = rep_counts.get(zid, 0)
        accepted, tests, evals = sr_accept_test(
            obj,
            z,
            config.ruler,
            m_tests,
            config.alpha,
            seed_policy,
            ruler_stream,
            first_replication=before,
            max_draws=max_draws,
            on_eval=track,
            stage=k,
        )
        rep_counts[zid] = before + evals
        evals_used += evals
        stages.append(SrStage(k, x, z, tests, evals, accepted))
        if accepted:
            x = z
        k += 1

    final_sid = flat_index(space, x)
    final_value = (
        obs_sums[final_sid] / obs_counts[final_sid] if obs_counts.get(final_sid) else None
    )
    best_observed = None
    best_mean = None
    if obs_counts:
        best_sid = min(obs_counts, key=lambda s: (-(obs_sums[s] / obs_counts[s]), s))
        best_observed = solution_at(space, best_sid)
        best_mean = obs_sums[best_sid] / obs_counts[best_sid]

    return SrTrace(
        initial=initial,
        final=x,
        stages=stages,
        evaluations_used=evals_used,
        stopped=stopped,
        initial_value=initial_value,
        final_value=final_value,
        best_observed=best_observed,
        best_observed_mean=best_mean,
    )

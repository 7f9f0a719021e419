"""Fully sequential indifference-zone ranking and selection (KN).

Screens a fully enumerated space with an initial batch of replications per
solution, then eliminates survivors one extra replication at a time until a
single solution remains. Selects the true best with probability 1 - p
whenever its mean leads the runner-up by at least the indifference-zone
width delta. A budget-constrained mode stops early and returns the
surviving shortlist instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .errors import ConfigError, EvaluationError
from .objective import ObjectiveHandle, Observation, SeedPolicy, derive_seed
from .space import SearchSpace, solution_at

OnEval = Callable[[Observation, int], None]


@dataclass(frozen=True)
class KnConfig:
    """Procedure parameters: initial replications, indifference zone, error
    probability, and an optional cap on total function evaluations."""

    r0: int
    delta: float
    p: float
    budget: int | None = None

    def __post_init__(self):
        if self.r0 < 2:
            raise ConfigError("r0 must be at least 2")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")
        if not 0 < self.p < 1:
            raise ConfigError("p must lie in (0, 1)")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("budget must be positive when given")


@dataclass
class SurvivorStat:
    mean: float
    count: int


@dataclass
class KnOutcome:
    """Result of a run: a single winner (completed) or the surviving
    shortlist with running statistics (budget_exhausted)."""

    mode: str  # "completed" | "budget_exhausted"
    winner: int | None
    survivors: dict[int, SurvivorStat]
    evaluations_used: int
    iterations: int

    def ranked_survivors(self) -> list[int]:
        """Survivor ids by running mean, best first; ties by lowest id."""
        return sorted(self.survivors, key=lambda n: (-self.survivors[n].mean, n))


@dataclass
class KnState:
    """Internal running state, exposed on abort for post-mortem."""

    survivors: set[int]
    sums: dict[int, float]
    counts: dict[int, int]
    s2: dict[int, dict[int, float]] = field(default_factory=dict)
    k: int = 0
    eta: float = 0.0
    h2: float = 0.0

    def means(self, ids: Sequence[int] | None = None) -> dict[int, float]:
        ids = list(self.survivors) if ids is None else list(ids)
        return {n: self.sums[n] / self.counts[n] for n in ids}


def kn_constants(n_solutions: int, r0: int, p: float) -> tuple[float, float]:
    """Screening constants eta and h^2.

    eta = 0.5 * ((2p / (N-1)) ** (-2 / (R0-1)) - 1), h^2 = 2 * eta * (R0-1).
    The exponent is negative, which keeps eta positive whenever
    2p < N - 1; a positive exponent would flip the sign and break the
    continuation bound.
    """
    if n_solutions < 2:
        raise ConfigError("ranking needs at least 2 solutions; a singleton is its own winner")
    if r0 < 2 or not 0 < p < 1:
        raise ConfigError("need r0 >= 2 and p in (0, 1)")
    base = 2.0 * p / (n_solutions - 1)
    eta = 0.5 * (base ** (-2.0 / (r0 - 1)) - 1.0)
    h2 = 2.0 * eta * (r0 - 1)
    return eta, h2


def pairwise_variance(samples_n: Sequence[float], samples_l: Sequence[float]) -> float:
    """Sample variance of the paired differences between two solutions'
    replicate vectors (n-1 denominator)."""
    if len(samples_n) != len(samples_l):
        raise ValueError(f"length mismatch: {len(samples_n)} vs {len(samples_l)}")
    r = len(samples_n)
    if r < 2:
        raise ValueError("need at least 2 paired replications")
    diffs = [a - b for a, b in zip(samples_n, samples_l)]
    d_bar = math.fsum(diffs) / r
    return math.fsum((d - d_bar) ** 2 for d in diffs) / (r - 1)


def continuation_bound(k: int, delta: float, h2: float, s2: float) -> float:
    """Elimination slack G(k) = max(0, (delta / 2k) * (h^2 s^2 / delta^2 - k));
    shrinks to zero once k reaches h^2 s^2 / delta^2."""
    return max(0.0, (delta / (2.0 * k)) * (h2 * s2 / (delta * delta) - k))


def screen(
    means: Mapping[int, float],
    s2: Mapping[int, Mapping[int, float]],
    k: int,
    delta: float,
    h2: float,
) -> set[int]:
    """One elimination pass: keep n iff its mean is within the continuation
    bound of every rival's mean. The current best always survives."""
    ids = sorted(means)
    if len(ids) < 2:
        return set(ids)
    keep: set[int] = set()
    for n in ids:
        mean_n = means[n]
        if all(
            mean_n >= means[l] - continuation_bound(k, delta, h2, s2[n][l])
            for l in ids
            if l != n
        ):
            keep.add(n)
    return keep


def run_kn(
    obj: ObjectiveHandle,
    space: SearchSpace,
    config: KnConfig,
    seed_policy: SeedPolicy,
    candidates: Sequence[int] | None = None,
    replication_offsets: Mapping[int, int] | None = None,
    on_eval: OnEval | None = None,
) -> KnOutcome:
    """Run the procedure over the whole space (or a candidate subset).

    Replication j of solution n uses the seed derived for (n, offset_n + j),
    so chaining after another solver never reuses seeds. ``on_eval`` receives
    every observation together with the current iteration count.
    """
    if candidates is None:
        ids = list(range(space.cardinality))
    else:
        ids = sorted(set(candidates))
        if not ids:
            raise ConfigError("empty candidate set")
    n_solutions = len(ids)
    offsets = dict(replication_offsets or {})

    if n_solutions == 1:
        only = ids[0]
        return KnOutcome("completed", only, {only: SurvivorStat(math.nan, 0)}, 0, 0)
    if config.budget is not None and config.budget < n_solutions:
        raise ConfigError(
            f"budget {config.budget} cannot cover one evaluation of each of "
            f"{n_solutions} solutions"
        )

    state = KnState(survivors=set(ids), sums={n: 0.0 for n in ids}, counts={n: 0 for n in ids})
    values0: dict[int, list[float]] = {n: [] for n in ids}
    used = 0

    def observe(n: int, stage: int) -> float:
        nonlocal used
        x = solution_at(space, n)
        rep = offsets.get(n, 0) + state.counts[n]
        try:
            obs = obj.evaluate(x, derive_seed(seed_policy, n, rep))
        except EvaluationError as exc:
            exc.partial_state = state  # type: ignore[attr-defined]
            raise
        state.sums[n] += obs.value
        state.counts[n] += 1
        used += 1
        if on_eval is not None:
            on_eval(obs, stage)
        return obs.value

    # Screening stage: r0 replications of every solution, fewer if the
    # budget cannot afford that many rounds.
    r_eff = config.r0 if config.budget is None else min(config.r0, config.budget // n_solutions)
    for n in ids:
        for _ in range(r_eff):
            values0[n].append(observe(n, r_eff))
    state.k = r_eff

    if r_eff < 2:
        # One observation each: no variance estimate, no screening possible.
        return KnOutcome(
            "budget_exhausted",
            None,
            {n: SurvivorStat(state.sums[n] / 1, 1) for n in ids},
            used,
            state.k,
        )

    state.eta, state.h2 = kn_constants(n_solutions, r_eff, config.p)
    state.s2 = {n: {} for n in ids}
    for i, n in enumerate(ids):
        state.s2[n][n] = 0.0
        for l in ids[i + 1 :]:
            v = pairwise_variance(values0[n], values0[l])
            state.s2[n][l] = v
            state.s2[l][n] = v

    state.survivors = screen(state.means(ids), state.s2, state.k, config.delta, state.h2)

    # Sequential elimination: one extra replication per survivor, then
    # re-screen, until a single survivor remains or the next full round
    # would not fit in the budget.
    while len(state.survivors) > 1:
        if config.budget is not None and used + len(state.survivors) > config.budget:
            return KnOutcome(
                "budget_exhausted",
                None,
                {
                    n: SurvivorStat(state.sums[n] / state.counts[n], state.counts[n])
                    for n in sorted(state.survivors)
                },
                used,
                state.k,
            )
        state.k += 1
        for n in sorted(state.survivors):
            observe(n, state.k)
        state.survivors = screen(
            state.means(), state.s2, state.k, config.delta, state.h2
        )

    winner = next(iter(state.survivors))
    return KnOutcome(
        "completed",
        winner,
        {winner: SurvivorStat(state.sums[winner] / state.counts[winner], state.counts[winner])},
        used,
        state.k,
    )

"""Adaptive hyperbox locally convergent random search.

Each iteration builds the most promising area: the tightest coordinate
hyperbox around the incumbent whose faces sit on previously visited
solutions, intersected with the search space. A handful of distinct
solutions sampled from that area, plus the incumbent, each receive a fresh
batch of observations; the incumbent moves to the best cumulative mean in
the batch. Orientation is argmax, matching the maximization objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import ConfigError, EvaluationError
from .objective import (
    STREAM_INITIAL,
    STREAM_SAMPLER,
    ObjectiveHandle,
    Observation,
    SeedPolicy,
    derive_seed,
    derive_stream,
)
from .rng import XorShift64Star
from .space import SearchSpace, Solution, flat_index, solution_at

OnEval = Callable[[Observation, int], None]

# Below this many box points it is cheaper (and still uniform) to enumerate
# and partially shuffle than to rejection-sample distinct draws.
_ENUMERATE_LIMIT = 64


def ah_alloc_default(k: int) -> int:
    """Observations per visited solution at iteration k:
    min(5, ceil(5 * (ln k)^1.01)), floored at 1 so iteration 1 produces data."""
    if k < 1:
        raise ValueError("iteration index must be >= 1")
    raw = 0.0 if k == 1 else 5.0 * math.log(k) ** 1.01
    return max(1, min(5, math.ceil(raw)))


@dataclass(frozen=True)
class AhConfig:
    budget: int
    m: int = 3
    alloc: Callable[[int], int] = ah_alloc_default
    initial: Solution | None = None
    cleanup_kn: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("m must be at least 1")
        if self.budget < 1:
            raise ConfigError("budget must be positive")


@dataclass
class AhIteration:
    k: int
    box: tuple[tuple[int, int], ...]
    batch: tuple[int, ...]  # flat ids observed this iteration
    alloc: int
    incumbent: int


@dataclass
class AhState:
    """Cumulative per-solution statistics over every visited solution."""

    counts: dict[int, int]
    means: dict[int, float]
    incumbent: int
    iteration: int


@dataclass
class AhResult:
    incumbent: Solution
    initial: Solution
    state: AhState
    iterations: list[AhIteration]
    evaluations_used: int


def hyperbox_bounds(
    visited: Iterable[Solution], x_opt: Solution, space: SearchSpace
) -> list[tuple[int, int]]:
    """Per-axis inclusive index interval of the box around the incumbent.

    On each axis the lower edge is the largest visited coordinate strictly
    below the incumbent's (axis minimum if none) and the upper edge the
    smallest strictly above (axis maximum if none). Visited coordinates
    equal to the incumbent's constrain nothing.
    """
    visited = list(visited)
    if x_opt not in visited:
        raise ValueError("incumbent must be among the visited solutions")
    bounds = []
    for d, axis in enumerate(space.axes):
        lo, hi = 0, axis.arity - 1
        c = x_opt[d]
        for y in visited:
            yd = y[d]
            if yd < c and yd > lo:
                lo = yd
            elif yd > c and yd < hi:
                hi = yd
        bounds.append((lo, hi))
    return bounds


def _box_size(bounds: list[tuple[int, int]]) -> int:
    n = 1
    for lo, hi in bounds:
        n *= hi - lo + 1
    return n


def _enumerate_box(bounds: list[tuple[int, int]]) -> list[Solution]:
    points: list[tuple[int, ...]] = [()]
    for lo, hi in bounds:
        points = [p + (v,) for p in points for v in range(lo, hi + 1)]
    return points


def sample_mpa(
    bounds: list[tuple[int, int]],
    space: SearchSpace,
    m: int,
    exclude: Solution,
    stream: XorShift64Star,
) -> list[Solution]:
    """Up to m distinct solutions drawn uniformly without replacement from
    the box, never returning the excluded incumbent. Returns everything
    available when fewer than m non-incumbent points exist."""
    size = _box_size(bounds)
    available = size - 1  # the incumbent always lies inside its own box
    if available <= 0:
        return []
    if available <= m or size <= max(_ENUMERATE_LIMIT, 4 * m):
        points = [p for p in _enumerate_box(bounds) if p != exclude]
        if len(points) <= m:
            return points
        stream.shuffle_prefix(points, m)
        return points[:m]
    chosen: list[Solution] = []
    seen = {exclude}
    while len(chosen) < m:
        p = tuple(lo + stream.randint(hi - lo + 1) for lo, hi in bounds)
        if p in seen:
            continue
        seen.add(p)
        chosen.append(p)
    return chosen


def run_ah(
    obj: ObjectiveHandle,
    space: SearchSpace,
    config: AhConfig,
    seed_policy: SeedPolicy,
    on_eval: OnEval | None = None,
) -> AhResult:
    """Iterate box construction / sampling / batch observation until the
    next full batch would exceed the budget.

    Replication seeds continue per solution across iterations, and batch
    members are observed in flat-index order, so the run is schedule-free
    and a pure function of the seed policy.
    """
    if config.budget < config.alloc(1) * (config.m + 1):
        raise ConfigError(
            f"budget {config.budget} below one full iteration "
            f"({config.alloc(1)} x {config.m + 1} evaluations)"
        )
    if config.initial is not None:
        space.validate(config.initial)
        x0 = config.initial
    else:
        x0 = solution_at(space, derive_stream(seed_policy, STREAM_INITIAL).randint(space.cardinality))

    sampler = derive_stream(seed_policy, STREAM_SAMPLER)
    values: dict[int, list[float]] = {}
    visited: dict[int, Solution] = {}
    used = 0

    def observe(sid: int, x: Solution, n_obs: int, k: int) -> None:
        nonlocal used
        vals = values.setdefault(sid, [])
        visited[sid] = x
        for _ in range(n_obs):
            try:
                obs = obj.evaluate(x, derive_seed(seed_policy, sid, len(vals)))
            except EvaluationError as exc:
                exc.partial_state = _snapshot(values, incumbent_id, k)  # type: ignore[attr-defined]
                raise
            vals.append(obs.value)
            used += 1
            if on_eval is not None:
                on_eval(obs, k)

    def mean_of(sid: int) -> float:
        vals = values[sid]
        return math.fsum(vals) / len(vals)

    incumbent_id = flat_index(space, x0)
    observe(incumbent_id, x0, config.alloc(1), 0)

    iterations: list[AhIteration] = []
    k = 1
    while True:
        bounds = hyperbox_bounds(visited.values(), visited[incumbent_id], space)
        sampled = sample_mpa(bounds, space, config.m, visited[incumbent_id], sampler)
        batch = {flat_index(space, p): p for p in sampled}
        batch[incumbent_id] = visited[incumbent_id]
        batch_ids = sorted(batch)
        n_obs = config.alloc(k)
        if used + n_obs * len(batch_ids) > config.budget:
            break
        for sid in batch_ids:
            observe(sid, batch[sid], n_obs, k)
        # Best cumulative mean within this iteration's batch; ties go to the
        # lowest flat index.
        incumbent_id = min(batch_ids, key=lambda s: (-mean_of(s), s))
        iterations.append(
            AhIteration(k, tuple(bounds), tuple(batch_ids), n_obs, incumbent_id)
        )
        k += 1

    state = _snapshot(values, incumbent_id, k - 1)
    return AhResult(
        incumbent=visited[incumbent_id],
        initial=x0,
        state=state,
        iterations=iterations,
        evaluations_used=used,
    )


def _snapshot(values: dict[int, list[float]], incumbent: int, iteration: int) -> AhState:
    return AhState(
        counts={sid: len(v) for sid, v in values.items()},
        means={sid: math.fsum(v) / len(v) for sid, v in values.items()},
        incumbent=incumbent,
        iteration=iteration,
    )

"""Objective evaluation: one replication in, one performance value out.

Houses the seed-derivation policy (each replication is governed by its own
derived seed, so replication order never matters), the permute/split
replication harness, synthetic stochastic objectives with known optima, and
the client for external worker processes speaking newline-delimited JSON.
"""

from __future__ import annotations

import json
import math
import os
import queue
import subprocess
import threading
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .errors import (
    ConfigError,
    DegenerateSplitError,
    EvaluationError,
    OutOfRangeError,
    WorkerError,
)
from .rng import XorShift64Star, derive_u64
from .space import SearchSpace, Solution, flat_index

DEFAULT_SEED_RANGE = 1 << 63
DEFAULT_WORKER_TIMEOUT_MS = 60_000

# Reserved stream tags for randomness that is not tied to one solution
# (ruler draws, candidate picks, ...). Solution ids are flat indices, far
# below this range for any enumerable space.
STREAM_RULER = (1 << 40) + 1
STREAM_CANDIDATE = (1 << 40) + 2
STREAM_INITIAL = (1 << 40) + 3
STREAM_SAMPLER = (1 << 40) + 4
STREAM_REPORT = (1 << 40) + 5
STREAM_TRIAL = (1 << 40) + 6


@dataclass(frozen=True)
class SeedPolicy:
    """Deterministic source of per-replication seeds.

    Seeds behave like integers drawn with replacement from [1, seed_range]
    with a fixed master: collisions are birthday-bound negligible for any
    realistic evaluation count, and the derivation is reproducible.
    """

    master_seed: int
    seed_range: int = DEFAULT_SEED_RANGE

    def __post_init__(self):
        if self.seed_range < 2:
            raise ConfigError("seed_range must be at least 2")


def derive_seed(policy: SeedPolicy, solution_id: int, replication_index: int) -> int:
    """Seed for one replication: a pure function of (master, solution, index)."""
    return derive_u64(policy.master_seed, solution_id, replication_index) % policy.seed_range + 1


def derive_stream(policy: SeedPolicy, tag: int, index: int = 0) -> XorShift64Star:
    """Auxiliary uniform stream for a reserved purpose tag."""
    return XorShift64Star(derive_seed(policy, tag, index))


def derive_trial_policy(policy: SeedPolicy, trial: int) -> SeedPolicy:
    """Independent seed namespace for one trial of a repeated experiment."""
    return SeedPolicy(derive_u64(policy.master_seed, STREAM_TRIAL, trial), policy.seed_range)


@dataclass(frozen=True)
class Observation:
    """One replicate performance value and its audit fields."""

    solution: Solution
    value: float
    seed: int
    eval_index: int
    wall_nanos: int


class ObjectiveHandle:
    """Evaluation contract: deterministic value for (solution, seed).

    Subclasses implement ``sample`` as a pure function; ``evaluate`` wraps it
    with bounds checking, timing, and the shared evaluation counter (the only
    mutable state, guarded by a lock). Orientation is maximize throughout.
    """

    kind = "abstract"
    direction = "maximize"

    def __init__(self, space: SearchSpace, bounds: tuple[float, float], name: str):
        a, b = bounds
        if not a < b:
            raise ConfigError(f"objective bounds must satisfy a < b, got ({a}, {b})")
        self.space = space
        self.bounds = (float(a), float(b))
        self.name = name
        self._count = 0
        self._lock = threading.Lock()

    def sample(self, x: Solution, seed: int) -> float:
        raise NotImplementedError

    def solution_id(self, x: Solution) -> int:
        return flat_index(self.space, x)

    def evaluate(self, x: Solution, seed: int) -> Observation:
        self.space.validate(x)
        t0 = time.perf_counter_ns()
        value = self.sample(x, seed)
        wall = time.perf_counter_ns() - t0
        if not math.isfinite(value):
            raise EvaluationError(f"non-finite observation {value!r} at {x}")
        a, b = self.bounds
        if not a <= value <= b:
            raise OutOfRangeError(f"observation {value} outside bounds [{a}, {b}] at {x}")
        with self._lock:
            self._count += 1
            idx = self._count
        return Observation(solution=x, value=value, seed=seed, eval_index=idx, wall_nanos=wall)

    @property
    def evaluations_used(self) -> int:
        with self._lock:
            return self._count

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


@dataclass(frozen=True)
class GaussianNoise:
    """Additive N(0, sigma^2) noise, clamped into the objective bounds."""

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")


@dataclass(frozen=True)
class BernoulliAccuracyNoise:
    """Accuracy of a simulated n_val-sample validation set: the value is
    successes/n_val with successes ~ Binomial(n_val, mean). Matches the
    discreteness of classification accuracy."""

    n_val: int

    def __post_init__(self):
        if self.n_val < 1:
            raise ConfigError("n_val must be at least 1")


Noise = GaussianNoise | BernoulliAccuracyNoise


class SyntheticObjective(ObjectiveHandle):
    """Oracle objective with a known mean table, for verifying solvers.

    The true optimum is carried as metadata so harness checks can score
    correctness against it.
    """

    kind = "synthetic"

    def __init__(
        self,
        space: SearchSpace,
        means: Sequence[float] | Mapping[int, float],
        noise: Noise = GaussianNoise(0.0),
        bounds: tuple[float, float] = (0.0, 1.0),
        name: str = "synthetic",
    ):
        super().__init__(space, bounds, name)
        n = space.cardinality
        if isinstance(means, Mapping):
            table = [means[i] for i in range(n)]
        else:
            table = list(means)
        if len(table) != n:
            raise ConfigError(f"mean table has {len(table)} entries, space has {n} solutions")
        a, b = self.bounds
        for i, mu in enumerate(table):
            if not a <= mu <= b:
                raise ConfigError(f"mean {mu} at flat index {i} outside bounds [{a}, {b}]")
        self.means = tuple(float(m) for m in table)
        self.noise = noise

    @property
    def true_best(self) -> int:
        """Flat index of the solution with the highest true mean."""
        return max(range(len(self.means)), key=lambda i: (self.means[i], -i))

    def true_mean(self, x: Solution) -> float:
        return self.means[flat_index(self.space, x)]

    def sample(self, x: Solution, seed: int) -> float:
        mu = self.means[flat_index(self.space, x)]
        stream = XorShift64Star(seed)
        a, b = self.bounds
        if isinstance(self.noise, GaussianNoise):
            if self.noise.sigma == 0.0:
                return mu
            return min(max(mu + self.noise.sigma * stream.normal(), a), b)
        n_val = self.noise.n_val
        successes = sum(1 for _ in range(n_val) if stream.next_float() < mu)
        return successes / n_val


class ExternalObjective(ObjectiveHandle):
    """Client for an external worker speaking the line-JSON wire protocol.

    The worker announces itself with one handshake line
    ``{"type":"ready","name":...,"bounds":[a,b]}``; each eval request gets
    exactly one id-matched reply, in order. Requests are serialized per
    connection; pool several workers for parallelism.
    """

    kind = "external"

    def __init__(
        self,
        space: SearchSpace,
        command: Sequence[str],
        timeout_ms: int | None = None,
        cwd: str | None = None,
    ):
        if timeout_ms is None:
            timeout_ms = int(os.environ.get("SIMOPT_WORKER_TIMEOUT_MS", DEFAULT_WORKER_TIMEOUT_MS))
        self._timeout = timeout_ms / 1000.0
        self._command = list(command)
        try:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                cwd=cwd,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise WorkerError(f"failed to spawn worker {self._command}: {exc}") from exc
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._io_lock = threading.Lock()
        self._next_id = 0
        hello = self._read_message()
        if hello.get("type") != "ready":
            raise WorkerError(f"expected ready handshake, got {hello!r}")
        bounds = hello.get("bounds")
        if not (isinstance(bounds, list) and len(bounds) == 2):
            raise WorkerError(f"handshake missing bounds: {hello!r}")
        super().__init__(space, (float(bounds[0]), float(bounds[1])), str(hello.get("name", "worker")))

    def _pump(self):
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _read_message(self) -> dict:
        try:
            line = self._lines.get(timeout=self._timeout)
        except queue.Empty:
            self._kill()
            raise WorkerError(f"worker timed out after {self._timeout:.1f}s") from None
        if line is None:
            raise WorkerError("worker closed its output stream")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise WorkerError(f"worker sent invalid JSON: {line!r}") from exc
        if not isinstance(msg, dict):
            raise WorkerError(f"worker sent a non-object message: {line!r}")
        return msg

    def _send(self, payload: dict) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(payload, separators=(",", ":")) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise WorkerError(f"worker pipe broken: {exc}") from exc

    def sample(self, x: Solution, seed: int) -> float:
        assignment = self.space.assignment(x)
        with self._io_lock:
            req_id = self._next_id
            self._next_id += 1
            self._send({"type": "eval", "id": req_id, "assignment": assignment, "seed": seed})
            reply = self._read_message()
        if reply.get("id") != req_id:
            raise WorkerError(f"reply id {reply.get('id')} does not match request {req_id}")
        if reply.get("type") == "result":
            return float(reply["value"])
        if reply.get("type") == "error":
            raise EvaluationError(f"worker error: {reply.get('message')}")
        raise WorkerError(f"unexpected reply {reply!r}")

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send({"type": "shutdown"})
            except WorkerError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._kill()

    def _kill(self) -> None:
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()


def permute_from_uniforms(m: int, next_uniform: Callable[[], float]) -> list[int]:
    """Sample-without-replacement permutation driven by a uniform stream.

    Each step draws u, picks the ceil(u * pool)-th element (1-based) of the
    shrinking pool, and removes it.
    """
    pool = list(range(m))
    out: list[int] = []
    while pool:
        u = next_uniform()
        pos = math.ceil(u * len(pool))
        pos = min(max(pos, 1), len(pool))
        out.append(pool.pop(pos - 1))
    return out


def permute_indices(m: int, seed: int) -> list[int]:
    """Seeded permutation of {0..m-1}; deterministic given the seed."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    stream = XorShift64Star(seed)
    return permute_from_uniforms(m, stream.next_float)


def holdout_split(permutation: Sequence[int], train_fraction: float) -> tuple[list[int], list[int]]:
    """First floor(fraction*m) indices train, the rest validate; no extra
    randomness once the permutation is fixed."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train_fraction must be in (0, 1)")
    m = len(permutation)
    n_train = math.floor(train_fraction * m)
    if n_train == 0 or n_train == m:
        raise DegenerateSplitError(
            f"fraction {train_fraction} on {m} samples leaves an empty side"
        )
    return list(permutation[:n_train]), list(permutation[n_train:])


def estimate_mean(
    obj: ObjectiveHandle,
    x: Solution,
    replications: int,
    policy: SeedPolicy,
    first_replication: int = 0,
) -> tuple[float, float]:
    """Sample mean and SD of ``replications`` evaluations of one solution,
    using seeds for replication indices first_replication..+replications-1."""
    if replications < 1:
        raise ConfigError("replications must be at least 1")
    sid = obj.solution_id(x)
    values = [
        obj.evaluate(x, derive_seed(policy, sid, first_replication + r)).value
        for r in range(replications)
    ]
    return mean_sd(values)


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and sample SD (n-1 denominator; 0.0 for n=1)."""
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)

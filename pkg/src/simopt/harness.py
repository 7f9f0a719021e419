"""Experiment orchestration: config ingestion, repeated trials, the uniform
random-search baseline, t-test verdicts, and persistence.

Artifacts are diff-able and language-neutral: JSON config in, JSONL run
records and CSV tables out. Run records capture every evaluation's
(solution, seed, value) so any observation can be replayed bit-identically;
wall-clock timings go to a separate sidecar so the record stream is
byte-stable across reruns of the same config and master seed.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from .ah import AhConfig, run_ah
from .errors import ConfigError
from .kn import KnConfig, run_kn
from .objective import (
    STREAM_REPORT,
    STREAM_SAMPLER,
    ExternalObjective,
    BernoulliAccuracyNoise,
    GaussianNoise,
    Observation,
    ObjectiveHandle,
    SeedPolicy,
    SyntheticObjective,
    derive_seed,
    derive_trial_policy,
    derive_stream,
    mean_sd,
)
from .rng import derive_u64
from .space import SearchSpace, Solution, flat_index, solution_at, space_from_axes
from .sr import BudgetStop, OptimalPerformanceStop, SrConfig, run_sr
from .stats import TrialStats, TrialSummary, TTestResult, summarize_trials, t_test_two_sample

SOLVER_NAMES = ("kn", "sr", "ah", "baseline_rs")


@dataclass
class RunRecord:
    """One line per evaluation; the audit trail behind the determinism and
    replay guarantees."""

    trial: int
    solver: str
    phase: str  # "solve" | "report"
    eval_index: int
    solution: int
    seed: int
    value: float
    stage: int | None
    wall_nanos: int

    def record_line(self) -> str:
        return json.dumps(
            {
                "trial": self.trial,
                "solver": self.solver,
                "phase": self.phase,
                "eval_index": self.eval_index,
                "solution": self.solution,
                "seed": self.seed,
                "value": self.value,
                "stage": self.stage,
            },
            separators=(",", ":"),
        )

    def timing_line(self) -> str:
        return json.dumps(
            {
                "trial": self.trial,
                "solver": self.solver,
                "eval_index": self.eval_index,
                "wall_nanos": self.wall_nanos,
            },
            separators=(",", ":"),
        )


@dataclass
class VerdictRow:
    """One t-test between a reported solution of each of two solvers."""

    trial: int
    solver_a: str
    solution_a: int
    mean_a: float
    solver_b: str
    solution_b: int
    mean_b: float
    t_stat: float
    df: float
    p_value: float
    verdict: str  # "<solver_a> better" | "comparable" | "<solver_b> better"


@dataclass
class ExperimentConfig:
    space: SearchSpace
    objective_spec: dict
    solver_specs: list[dict]
    trials: int
    master_seed: int
    report_replicates: int
    out_dir: str | None
    default_budget: int | None = None

    def labels(self) -> list[str]:
        names = [spec["solver"] for spec in self.solver_specs]
        if len(names) == 2 and names[0] == names[1]:
            return [names[0] + "_a", names[1] + "_b"]
        return names


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[RunRecord]
    summaries: list[TrialSummary]
    stats: dict[str, TrialStats]
    verdicts: list[VerdictRow]
    verdict_counts: dict[str, int] = field(default_factory=dict)

    @property
    def proportion_rejected(self) -> float | None:
        if not self.verdicts:
            return None
        return sum(1 for v in self.verdicts if v.p_value < 0.05) / len(self.verdicts)


# ---------------------------------------------------------------- config --


def parse_space(doc: Any) -> SearchSpace:
    if not isinstance(doc, dict) or "axes" not in doc:
        raise ConfigError("space must be an object with an 'axes' list")
    axes = doc["axes"]
    if not isinstance(axes, list) or not axes:
        raise ConfigError("space.axes must be a nonempty list")
    pairs = []
    for i, axis in enumerate(axes):
        if not isinstance(axis, dict) or "name" not in axis or "levels" not in axis:
            raise ConfigError(f"axis {i} must have 'name' and 'levels'")
        pairs.append((axis["name"], axis["levels"]))
    try:
        return space_from_axes(pairs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_objective(spec: dict, space: SearchSpace) -> ObjectiveHandle:
    kind = spec.get("kind")
    if kind == "synthetic":
        noise_doc = spec.get("noise", {"type": "none"})
        ntype = noise_doc.get("type", "none")
        if ntype == "gaussian":
            noise = GaussianNoise(float(noise_doc.get("sigma", 0.0)))
        elif ntype == "bernoulli_accuracy":
            noise = BernoulliAccuracyNoise(int(noise_doc["n_val"]))
        elif ntype == "none":
            noise = GaussianNoise(0.0)
        else:
            raise ConfigError(f"unknown noise type {ntype!r}")
        bounds = tuple(spec.get("bounds", (0.0, 1.0)))
        means = spec.get("means")
        if means is None:
            raise ConfigError("synthetic objective needs a 'means' table")
        return SyntheticObjective(space, means, noise, bounds)  # type: ignore[arg-type]
    if kind == "external":
        command = spec.get("command")
        if not isinstance(command, list) or not command:
            raise ConfigError("external objective needs a 'command' list")
        return ExternalObjective(
            space,
            [str(c) for c in command],
            timeout_ms=spec.get("timeout_ms"),
            cwd=spec.get("cwd"),
        )
    raise ConfigError(f"objective kind must be 'synthetic' or 'external', got {kind!r}")


def _parse_solution(doc: Any, space: SearchSpace, what: str) -> Solution:
    if not isinstance(doc, list) or not all(isinstance(v, int) for v in doc):
        raise ConfigError(f"{what} must be a list of axis-level indices")
    x = tuple(doc)
    space.validate(x)
    return x


def _parse_solver(spec: dict, space: SearchSpace, default_budget: int | None):
    name = spec.get("solver")
    if name == "kn":
        return KnConfig(
            r0=int(spec.get("r0", 10)),
            delta=float(spec["delta"]),
            p=float(spec.get("p", 0.05)),
            budget=spec.get("budget", default_budget),
        )
    if name == "sr":
        ruler = spec.get("ruler")
        if not isinstance(ruler, list) or len(ruler) != 2:
            raise ConfigError("sr solver needs 'ruler': [a, b]")
        stop_doc = spec.get("stop")
        if stop_doc is None:
            if default_budget is None:
                raise ConfigError("sr solver needs a 'stop' rule or a top-level budget")
            stop: BudgetStop | OptimalPerformanceStop = BudgetStop(max_evals=default_budget)
        elif "optimal_performance" in stop_doc:
            stop = OptimalPerformanceStop(
                _parse_solution(stop_doc["optimal_performance"]["target"], space, "stop target")
            )
        elif "budget" in stop_doc:
            b = stop_doc["budget"]
            stop = BudgetStop(
                max_evals=b.get("max_evals"),
                max_wall_seconds=b.get("max_wall_seconds"),
                max_stages=b.get("max_stages"),
            )
        else:
            raise ConfigError("sr stop must contain 'optimal_performance' or 'budget'")
        initial = spec.get("initial", "random")
        return SrConfig(
            ruler=(float(ruler[0]), float(ruler[1])),
            stop=stop,
            alpha=float(spec.get("alpha", 1.0)),
            neighborhood=spec.get("neighborhood", "n2"),
            initial=None if initial == "random" else _parse_solution(initial, space, "initial"),
        )
    if name == "ah":
        budget = spec.get("budget", default_budget)
        if budget is None:
            raise ConfigError("ah solver needs a budget")
        initial = spec.get("initial", "random")
        return AhConfig(
            budget=int(budget),
            m=int(spec.get("m", 3)),
            initial=None if initial == "random" else _parse_solution(initial, space, "initial"),
            cleanup_kn=bool(spec.get("cleanup_kn", False)),
        )
    if name == "baseline_rs":
        budget = spec.get("budget", default_budget)
        if budget is None:
            raise ConfigError("baseline_rs needs a budget")
        return int(budget)
    raise ConfigError(f"solver must be one of {SOLVER_NAMES}, got {name!r}")


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    space = parse_space(doc.get("space"))
    objective_spec = doc.get("objective")
    if not isinstance(objective_spec, dict):
        raise ConfigError("config needs an 'objective' object")
    if "solvers" in doc:
        solver_specs = doc["solvers"]
        if not isinstance(solver_specs, list) or not 1 <= len(solver_specs) <= 2:
            raise ConfigError("'solvers' must list one or two solver specs")
    elif "solver" in doc:
        solver_specs = [doc["solver"]]
    else:
        raise ConfigError("config needs 'solver' or 'solvers'")
    trials = int(doc.get("trials", 1))
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    default_budget = doc.get("budget")
    if default_budget is not None:
        default_budget = int(default_budget)
        if default_budget < 1:
            raise ConfigError("budget must be positive")
    # Validate solver specs now so config errors surface before any work.
    for spec in solver_specs:
        if not isinstance(spec, dict):
            raise ConfigError("each solver spec must be an object")
        _parse_solver(spec, space, default_budget)
    return ExperimentConfig(
        space=space,
        objective_spec=objective_spec,
        solver_specs=[dict(s) for s in solver_specs],
        trials=trials,
        master_seed=int(doc.get("master_seed", 1)),
        report_replicates=int(doc.get("report_replicates", 25)),
        out_dir=doc.get("out_dir"),
        default_budget=default_budget,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)


# -------------------------------------------------------------- baseline --


@dataclass
class RsResult:
    best: Solution
    best_value: float
    first: Solution
    evaluations_used: int


def baseline_random_search(
    obj: ObjectiveHandle,
    space: SearchSpace,
    budget: int,
    seed_policy: SeedPolicy,
    on_eval: Callable[[Observation, int], None] | None = None,
) -> RsResult:
    """Uniform independent sampling with one replicate per draw; returns the
    argmax of the single observed values (first occurrence wins ties)."""
    if budget < 1:
        raise ConfigError("baseline budget must be at least 1")
    stream = derive_stream(seed_policy, STREAM_SAMPLER)
    reps: dict[int, int] = {}
    best: Solution | None = None
    best_value = -math.inf
    first: Solution | None = None
    for draw in range(budget):
        sid = stream.randint(space.cardinality)
        x = solution_at(space, sid)
        rep = reps.get(sid, 0)
        reps[sid] = rep + 1
        obs = obj.evaluate(x, derive_seed(seed_policy, sid, rep))
        if on_eval is not None:
            on_eval(obs, draw)
        if first is None:
            first = x
        if obs.value > best_value:
            best, best_value = x, obs.value
    assert best is not None and first is not None
    return RsResult(best=best, best_value=best_value, first=first, evaluations_used=budget)


# ------------------------------------------------------------ experiment --


@dataclass
class _SolverOutcome:
    primary: int
    reported: list[int]
    initial: int | None
    stages: int
    evaluations: int


def _execute_solver(
    spec: dict,
    parsed,
    obj: ObjectiveHandle,
    space: SearchSpace,
    policy: SeedPolicy,
    on_eval,
) -> _SolverOutcome:
    name = spec["solver"]
    if name == "kn":
        outcome = run_kn(obj, space, parsed, policy, on_eval=on_eval)
        ranked = outcome.ranked_survivors()
        return _SolverOutcome(
            primary=outcome.winner if outcome.winner is not None else ranked[0],
            reported=ranked,
            initial=None,
            stages=outcome.iterations,
            evaluations=outcome.evaluations_used,
        )
    if name == "sr":
        trace = run_sr(obj, space, parsed, policy, on_eval=on_eval)
        return _SolverOutcome(
            primary=flat_index(space, trace.final),
            reported=[flat_index(space, trace.final)],
            initial=flat_index(space, trace.initial),
            stages=trace.stages_count,
            evaluations=trace.evaluations_used,
        )
    if name == "ah":
        result = run_ah(obj, space, parsed, policy, on_eval=on_eval)
        evals = result.evaluations_used
        primary = flat_index(space, result.incumbent)
        if parsed.cleanup_kn and len(result.state.counts) > 1:
            cleanup = spec.get("cleanup", {})
            kn_cfg = KnConfig(
                r0=int(cleanup.get("r0", 10)),
                delta=float(cleanup.get("delta", 0.05)),
                p=float(cleanup.get("p", 0.05)),
                budget=cleanup.get("budget"),
            )
            final_batch = sorted(result.iterations[-1].batch) if result.iterations else sorted(
                result.state.counts
            )
            outcome = run_kn(
                obj,
                space,
                kn_cfg,
                policy,
                candidates=final_batch,
                replication_offsets=result.state.counts,
                on_eval=on_eval,
            )
            evals += outcome.evaluations_used
            if outcome.winner is not None:
                primary = outcome.winner
        return _SolverOutcome(
            primary=primary,
            reported=[primary],
            initial=flat_index(space, result.initial),
            stages=len(result.iterations),
            evaluations=evals,
        )
    if name == "baseline_rs":
        rs = baseline_random_search(obj, space, parsed, policy, on_eval=on_eval)
        return _SolverOutcome(
            primary=flat_index(space, rs.best),
            reported=[flat_index(space, rs.best)],
            initial=flat_index(space, rs.first),
            stages=rs.evaluations_used,
            evaluations=rs.evaluations_used,
        )
    raise ConfigError(f"unknown solver {name!r}")


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute all trials; per trial run each configured solver, then measure
    every reported solution with fresh independent replicates and, when two
    solvers are configured, t-test their reported solutions."""
    base_policy = SeedPolicy(config.master_seed)
    default_budget = config.default_budget
    labels = config.labels()
    records: list[RunRecord] = []
    summaries: list[TrialSummary] = []
    verdicts: list[VerdictRow] = []

    obj = build_objective(config.objective_spec, config.space)
    try:
        for trial in range(config.trials):
            trial_policy = derive_trial_policy(base_policy, trial)
            trial_base = obj.evaluations_used
            trial_outcomes: list[tuple[str, _SolverOutcome, dict[int, list[float]]]] = []
            for si, spec in enumerate(config.solver_specs):
                label = labels[si]
                parsed = _parse_solver(spec, config.space, default_budget)

                def on_eval(obs: Observation, stage: int, _label=label) -> None:
                    records.append(
                        RunRecord(
                            trial=trial,
                            solver=_label,
                            phase="solve",
                            eval_index=obs.eval_index - trial_base,
                            solution=flat_index(config.space, obs.solution),
                            seed=obs.seed,
                            value=obs.value,
                            stage=stage,
                            wall_nanos=obs.wall_nanos,
                        )
                    )

                t0 = time.perf_counter()
                outcome = _execute_solver(
                    spec, parsed, obj, config.space, trial_policy, on_eval
                )
                wall = time.perf_counter() - t0

                # Fresh-seed re-measurement of every reported solution plus
                # the initial solution, for improvement and t-tests.
                report_policy = SeedPolicy(
                    derive_u64(trial_policy.master_seed, STREAM_REPORT, si)
                )
                samples: dict[int, list[float]] = {}
                to_measure = list(dict.fromkeys(outcome.reported))
                if outcome.initial is not None and outcome.initial not in to_measure:
                    to_measure.append(outcome.initial)
                for sid in to_measure:
                    x = solution_at(config.space, sid)
                    vals = []
                    for r in range(config.report_replicates):
                        obs = obj.evaluate(x, derive_seed(report_policy, sid, r))
                        vals.append(obs.value)
                        records.append(
                            RunRecord(
                                trial=trial,
                                solver=label,
                                phase="report",
                                eval_index=obs.eval_index - trial_base,
                                solution=sid,
                                seed=obs.seed,
                                value=obs.value,
                                stage=None,
                                wall_nanos=obs.wall_nanos,
                            )
                        )
                    samples[sid] = vals

                initial_value = (
                    mean_sd(samples[outcome.initial])[0] if outcome.initial is not None else None
                )
                summaries.append(
                    TrialSummary(
                        trial=trial,
                        solver=label,
                        initial_solution=outcome.initial,
                        final_solution=outcome.primary,
                        initial_value=initial_value,
                        final_value=mean_sd(samples[outcome.primary])[0],
                        stages=outcome.stages,
                        evaluations=outcome.evaluations,
                        wall_seconds=wall,
                    )
                )
                trial_outcomes.append((label, outcome, samples))

            if len(trial_outcomes) == 2:
                verdicts.extend(_trial_verdicts(trial, trial_outcomes))
    finally:
        obj.close()

    stats = {
        label: summarize_trials([s for s in summaries if s.solver == label])
        for label in labels
    }
    result = ExperimentResult(
        config=config,
        records=records,
        summaries=summaries,
        stats=stats,
        verdicts=verdicts,
    )
    result.verdict_counts = _count_verdicts(verdicts)
    return result


def _trial_verdicts(trial: int, outcomes) -> list[VerdictRow]:
    (label_a, out_a, samples_a), (label_b, out_b, samples_b) = outcomes
    rows = []
    # Every shortlisted solution of A against B's single primary; when both
    # sides are multi-solution shortlists, compare primaries only.
    a_solutions = out_a.reported if len(out_b.reported) == 1 else [out_a.primary]
    for sid_a in a_solutions:
        res: TTestResult = t_test_two_sample(samples_a[sid_a], samples_b[out_b.primary])
        if res.verdict() == "comparable":
            verdict = "comparable"
        elif res.verdict() == "a_better":
            verdict = f"{label_a} better"
        else:
            verdict = f"{label_b} better"
        rows.append(
            VerdictRow(
                trial=trial,
                solver_a=label_a,
                solution_a=sid_a,
                mean_a=mean_sd(samples_a[sid_a])[0],
                solver_b=label_b,
                solution_b=out_b.primary,
                mean_b=mean_sd(samples_b[out_b.primary])[0],
                t_stat=res.t_stat,
                df=res.df,
                p_value=res.p_value,
                verdict=verdict,
            )
        )
    return rows


def _count_verdicts(verdicts: list[VerdictRow]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for row in verdicts:
        counts[row.verdict] = counts.get(row.verdict, 0) + 1
    return counts


# ------------------------------------------------------------ delta sweep --


@dataclass
class DeltaRow:
    delta: float
    mean_evaluations: float
    sd_evaluations: float
    trials: int


def emit_delta_curve(config: ExperimentConfig, deltas: Sequence[float]) -> list[DeltaRow]:
    """Mean evaluations-to-completion of the ranking procedure per
    indifference-zone width, averaged over the configured trials; rows
    sorted by delta descending."""
    if len(config.solver_specs) != 1 or config.solver_specs[0].get("solver") != "kn":
        raise ConfigError("delta sweep requires a single 'kn' solver")
    if not deltas:
        raise ConfigError("need at least one delta")
    spec = dict(config.solver_specs[0])
    if spec.get("budget") is not None:
        raise ConfigError("delta sweep requires run-to-completion (no budget)")
    base_policy = SeedPolicy(config.master_seed)
    rows = []
    for delta in sorted(deltas, reverse=True):
        spec["delta"] = delta
        parsed = _parse_solver(spec, config.space, None)
        evals = []
        for trial in range(config.trials):
            obj = build_objective(config.objective_spec, config.space)
            try:
                outcome = run_kn(
                    obj, config.space, parsed, derive_trial_policy(base_policy, trial)
                )
            finally:
                obj.close()
            evals.append(float(outcome.evaluations_used))
        mean, sd = mean_sd(evals)
        rows.append(DeltaRow(delta=delta, mean_evaluations=mean, sd_evaluations=sd, trials=len(evals)))
    return rows


# ------------------------------------------------------------ persistence --


def write_records(records: Sequence[RunRecord], out_dir: Path) -> tuple[Path, Path]:
    records_path = out_dir / "records.jsonl"
    timings_path = out_dir / "timings.jsonl"
    with open(records_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.record_line() + "\n")
    with open(timings_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.timing_line() + "\n")
    return records_path, timings_path


def write_trials_csv(summaries: Sequence[TrialSummary], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "trial",
                "solver",
                "initial_solution",
                "final_solution",
                "initial_value",
                "final_value",
                "improvement",
                "stages",
                "evaluations",
                "wall_seconds",
            ]
        )
        for s in summaries:
            writer.writerow(
                [
                    s.trial,
                    s.solver,
                    "" if s.initial_solution is None else s.initial_solution,
                    s.final_solution,
                    "" if s.initial_value is None else s.initial_value,
                    s.final_value,
                    "" if s.improvement is None else s.improvement,
                    s.stages,
                    s.evaluations,
                    f"{s.wall_seconds:.6f}",
                ]
            )


def write_verdicts_csv(verdicts: Sequence[VerdictRow], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "trial",
                "solver_a",
                "solution_a",
                "mean_a",
                "solver_b",
                "solution_b",
                "mean_b",
                "t_stat",
                "df",
                "p_value",
                "verdict",
            ]
        )
        for v in verdicts:
            writer.writerow(
                [
                    v.trial,
                    v.solver_a,
                    v.solution_a,
                    v.mean_a,
                    v.solver_b,
                    v.solution_b,
                    v.mean_b,
                    v.t_stat,
                    v.df,
                    v.p_value,
                    v.verdict,
                ]
            )


def write_delta_csv(rows: Sequence[DeltaRow], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "mean_evaluations", "sd_evaluations", "trials"])
        for r in rows:
            writer.writerow([r.delta, r.mean_evaluations, r.sd_evaluations, r.trials])


def write_summary_json(result: ExperimentResult, path: Path) -> None:
    doc: dict[str, Any] = {
        "master_seed": result.config.master_seed,
        "trials": result.config.trials,
        "solvers": result.config.labels(),
        "per_solver": {
            label: {
                "mean_improvement": st.mean_improvement,
                "sd_improvement": st.sd_improvement,
                "mean_stages": st.mean_stages,
                "mean_evaluations": st.mean_evaluations,
                "mean_final_value": st.mean_final_value,
                "trials": st.trials,
            }
            for label, st in result.stats.items()
        },
    }
    if result.verdicts:
        doc["comparison"] = {
            "tests": len(result.verdicts),
            "proportion_p_below_0.05": result.proportion_rejected,
            "verdict_counts": result.verdict_counts,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def persist_experiment(
    result: ExperimentResult, out_dir: str | Path, plot: bool = True
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(result.records, out)
    write_trials_csv(result.summaries, out / "trials.csv")
    write_summary_json(result, out / "summary.json")
    if result.verdicts:
        write_verdicts_csv(result.verdicts, out / "verdicts.csv")
    if plot:
        from . import figures

        figures.save_trials_figure(result.summaries, out / "trials.png")
        if result.verdicts:
            figures.save_verdicts_figure(result.verdict_counts, out / "verdicts.png")
    return out


def persist_delta_curve(
    rows: Sequence[DeltaRow], out_dir: str | Path, plot: bool = True
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_delta_csv(rows, out / "delta_curve.csv")
    if plot:
        from . import figures

        figures.save_delta_curve_figure(rows, out / "delta_curve.png")
    return out

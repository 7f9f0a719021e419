"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 external worker failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, WorkerError
from .harness import (
    ExperimentConfig,
    emit_delta_curve,
    load_config,
    persist_delta_curve,
    persist_experiment,
    run_experiment,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simopt",
        description="Discrete simulation-optimization experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the experiment described by a config file")
    run_p.add_argument("--config", required=True, help="path to the JSON experiment config")
    run_p.add_argument("--out", default=None, help="output directory (default: config out_dir or ./simopt_out)")
    run_p.add_argument("--seed", type=int, default=None, help="override the master seed")
    run_p.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    sweep_p = sub.add_parser("sweep-delta", help="evaluations-to-completion curve over deltas")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument(
        "--deltas", required=True, help="comma-separated indifference-zone widths, e.g. 0.10,0.05,0.02"
    )
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--no-plot", action="store_true")

    cmp_p = sub.add_parser("compare", help="paired solver comparison with t-test verdicts")
    cmp_p.add_argument("--config-a", required=True)
    cmp_p.add_argument("--config-b", required=True)
    cmp_p.add_argument("--tests", type=int, default=10, help="number of paired tests (default 10)")
    cmp_p.add_argument("--out", default=None)
    cmp_p.add_argument("--seed", type=int, default=None)
    cmp_p.add_argument("--no-plot", action="store_true")
    return parser


def _resolve_out(arg_out: str | None, config: ExperimentConfig) -> Path:
    if arg_out is not None:
        return Path(arg_out)
    if config.out_dir is not None:
        return Path(config.out_dir)
    return Path("simopt_out")


def _apply_seed(config: ExperimentConfig, seed: int | None) -> None:
    if seed is not None:
        config.master_seed = seed


def _cmd_run(args) -> int:
    config = load_config(args.config)
    _apply_seed(config, args.seed)
    result = run_experiment(config)
    out = persist_experiment(result, _resolve_out(args.out, config), plot=not args.no_plot)
    for label, st in result.stats.items():
        imp = "n/a" if st.mean_improvement is None else f"{st.mean_improvement:.4f}"
        print(
            f"{label}: trials={st.trials} mean_final={st.mean_final_value:.4f} "
            f"mean_improvement={imp} mean_evals={st.mean_evaluations:.1f}"
        )
    if result.proportion_rejected is not None:
        print(f"proportion of tests with p < 0.05: {result.proportion_rejected:.2f}")
    print(f"artifacts written to {out}")
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    _apply_seed(config, args.seed)
    try:
        deltas = [float(tok) for tok in args.deltas.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --deltas value: {exc}") from exc
    rows = emit_delta_curve(config, deltas)
    out = persist_delta_curve(rows, _resolve_out(args.out, config), plot=not args.no_plot)
    for row in rows:
        print(
            f"delta={row.delta:g}: mean_evaluations={row.mean_evaluations:.1f} "
            f"sd={row.sd_evaluations:.1f} over {row.trials} trials"
        )
    print(f"artifacts written to {out}")
    return 0


def _cmd_compare(args) -> int:
    config_a = load_config(args.config_a)
    config_b = load_config(args.config_b)
    if config_a.space != config_b.space:
        raise ConfigError("compare requires both configs to define the same space")
    if config_a.objective_spec != config_b.objective_spec:
        raise ConfigError("compare requires both configs to define the same objective")
    if len(config_a.solver_specs) != 1 or len(config_b.solver_specs) != 1:
        raise ConfigError("compare takes two single-solver configs")
    if args.tests < 1:
        raise ConfigError("--tests must be at least 1")
    merged = ExperimentConfig(
        space=config_a.space,
        objective_spec=config_a.objective_spec,
        solver_specs=[config_a.solver_specs[0], config_b.solver_specs[0]],
        trials=args.tests,
        master_seed=config_a.master_seed,
        report_replicates=config_a.report_replicates,
        out_dir=config_a.out_dir,
        default_budget=config_a.default_budget,
    )
    _apply_seed(merged, args.seed)
    result = run_experiment(merged)
    out = persist_experiment(result, _resolve_out(args.out, merged), plot=not args.no_plot)
    total = len(result.verdicts)
    print(f"tests run: {total}")
    if total:
        print(f"proportion with p < 0.05: {result.proportion_rejected:.2f}")
        for verdict, count in sorted(result.verdict_counts.items()):
            print(f"  {verdict}: {count}")
    print(f"artifacts written to {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep-delta":
            return _cmd_sweep(args)
        if args.command == "compare":
            return _cmd_compare(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except WorkerError as exc:
        print(f"worker failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

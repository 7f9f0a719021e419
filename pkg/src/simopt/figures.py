"""Figure rendering for the report path; every plot lands next to its CSV."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_delta_curve_figure(rows: Sequence, path: Path) -> None:
    """Evaluations-to-completion versus the indifference-zone width."""
    ordered = sorted(rows, key=lambda r: r.delta)
    deltas = [r.delta for r in ordered]
    means = [r.mean_evaluations for r in ordered]
    sds = [r.sd_evaluations for r in ordered]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(deltas, means, yerr=sds, marker="o", capsize=3)
    ax.set_xlabel("indifference zone width $\\delta$")
    ax.set_ylabel("function evaluations to completion")
    ax.set_title("Selection effort versus $\\delta$")
    ax.invert_xaxis()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trials_figure(summaries: Sequence, path: Path) -> None:
    """Per-trial final (and initial, when defined) re-measured values."""
    solvers = sorted({s.solver for s in summaries})
    fig, ax = plt.subplots(figsize=(7, 4))
    for solver in solvers:
        rows = sorted((s for s in summaries if s.solver == solver), key=lambda s: s.trial)
        trials = [s.trial for s in rows]
        ax.plot(trials, [s.final_value for s in rows], marker="o", label=f"{solver} final")
        initials = [(s.trial, s.initial_value) for s in rows if s.initial_value is not None]
        if initials:
            ax.plot(
                [t for t, _ in initials],
                [v for _, v in initials],
                marker="x",
                linestyle="--",
                alpha=0.6,
                label=f"{solver} initial",
            )
    ax.set_xlabel("trial")
    ax.set_ylabel("mean re-measured value")
    ax.set_title("Per-trial outcomes")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_verdicts_figure(verdict_counts: dict[str, int], path: Path) -> None:
    """Counts of t-test verdicts between the two configured solvers."""
    labels = sorted(verdict_counts)
    counts = [verdict_counts[l] for l in labels]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(labels, counts, color=["#4878d0", "#ee854a", "#6acc64"][: len(labels)])
    ax.set_ylabel("tests")
    ax.set_title("Pairwise comparison verdicts")
    for i, c in enumerate(counts):
        ax.text(i, c, str(c), ha="center", va="bottom")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

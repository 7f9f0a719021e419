"""Two-sample t-tests and trial summaries for solver comparisons.

The t CDF is computed from scratch via the regularized incomplete beta
function (modified Lentz continued fraction, precision target 1e-10), so the
core library carries no statistics dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .objective import mean_sd

_CF_EPS = 1e-14
_CF_TINY = 1e-300
_CF_MAX_ITER = 500


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, evaluated by the modified
    Lentz method."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction failed for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the fraction on whichever side converges fast, mirror for the other.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    """CDF of Student's t with df degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.5
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) under the t distribution."""
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t)) if t != 0.0 else 1.0


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    df: float
    p_value: float
    higher_mean: str  # "a" | "b" | "tie"
    significant_at_5pct: bool
    degenerate: bool = False

    def verdict(self) -> str:
        """'comparable' when the null stands, else which sample won."""
        if not self.significant_at_5pct:
            return "comparable"
        return "a_better" if self.higher_mean == "a" else "b_better"


def t_test_two_sample(
    a: Sequence[float], b: Sequence[float], pooled: bool = True
) -> TTestResult:
    """Two-sided test for equality of means.

    Pooled-variance Student's t by default; pass pooled=False for Welch.
    Two zero-variance samples yield the degenerate conventions t=0, p=1
    (equal means) or p=0 (unequal means).
    """
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise ValueError("each sample needs at least 2 values")
    m1, s1 = mean_sd(a)
    m2, s2 = mean_sd(b)
    v1, v2 = s1 * s1, s2 * s2
    higher = "a" if m1 > m2 else "b" if m2 > m1 else "tie"

    if v1 == 0.0 and v2 == 0.0:
        if m1 == m2:
            return TTestResult(0.0, float(n1 + n2 - 2), 1.0, "tie", False, degenerate=True)
        t = math.inf if m1 > m2 else -math.inf
        return TTestResult(t, float(n1 + n2 - 2), 0.0, higher, True, degenerate=True)

    if pooled:
        df = float(n1 + n2 - 2)
        sp2 = ((n1 - 1) * v1 + (n2 - 1) * v2) / df
        se = math.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))
    else:
        se2_1, se2_2 = v1 / n1, v2 / n2
        se = math.sqrt(se2_1 + se2_2)
        df = (se2_1 + se2_2) ** 2 / (
            se2_1**2 / (n1 - 1) + se2_2**2 / (n2 - 1)
        )
    t = (m1 - m2) / se
    p = t_two_sided_p(t, df)
    return TTestResult(t, df, p, higher, p < 0.05)


@dataclass
class TrialSummary:
    """Outcome of one optimizer trial, as persisted to the trial table."""

    trial: int
    solver: str
    initial_solution: int | None
    final_solution: int
    initial_value: float | None
    final_value: float
    stages: int
    evaluations: int
    wall_seconds: float

    @property
    def improvement(self) -> float | None:
        if self.initial_value is None:
            return None
        return self.final_value - self.initial_value


@dataclass(frozen=True)
class TrialStats:
    mean_improvement: float | None
    sd_improvement: float | None
    mean_stages: float
    mean_evaluations: float
    mean_final_value: float
    trials: int
    degenerate: bool  # single trial: SD is 0 by convention


def summarize_trials(trials: Sequence[TrialSummary]) -> TrialStats:
    """Mean and sample SD (n-1) of the improvement, plus effort averages."""
    if not trials:
        raise ValueError("need at least one trial")
    improvements = [t.improvement for t in trials if t.improvement is not None]
    if improvements:
        mean_imp, sd_imp = mean_sd(improvements)
    else:
        mean_imp, sd_imp = None, None
    mean_stages = math.fsum(t.stages for t in trials) / len(trials)
    mean_evals = math.fsum(t.evaluations for t in trials) / len(trials)
    mean_final = math.fsum(t.final_value for t in trials) / len(trials)
    return TrialStats(
        mean_improvement=mean_imp,
        sd_improvement=sd_imp,
        mean_stages=mean_stages,
        mean_evaluations=mean_evals,
        mean_final_value=mean_final,
        trials=len(trials),
        degenerate=len(trials) == 1,
    )

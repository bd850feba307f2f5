"""Estimators, interim test statistics and the alternative-hypothesis drift."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ModelKind, ResponseModel, TrialState

VARIANCE_FLOOR = 1e-12


class DegenerateLookError(ArithmeticError):
    """The test statistic cannot be formed at this look."""


def modified_mean(total: float, count: int, prior_center: float = 0.5) -> float:
    """Smoothed per-arm mean ``(total + prior_center) / (count + 1)``."""
    if count < 0:
        raise ValueError("count must be >= 0")
    return (total + prior_center) / (count + 1)


@dataclass(frozen=True)
class ArmEstimate:
    modified: float
    variance: float
    count: int


@dataclass(frozen=True)
class LookStatistic:
    k: int
    t: float
    z_value: float
    n1: int
    n2: int
    floored: bool = False

    @property
    def b_value(self) -> float:
        return math.sqrt(self.t) * self.z_value


def arm_estimates(state: TrialState, kind: ModelKind, prior_center=(0.5, 0.5)) -> tuple[ArmEstimate, ArmEstimate]:
    out = []
    for j in range(2):
        n, s = state.counts[j], state.sums[j]
        mod = modified_mean(s, n, prior_center[j])
        if kind is ModelKind.BINARY:
            var = mod * (1.0 - mod)
        elif n >= 2:
            var = max((state.sumsq[j] - s * s / n) / (n - 1), 0.0)
        else:
            var = 0.0
        out.append(ArmEstimate(mod, var, n))
    return out[0], out[1]


def z_from_summaries(kind: ModelKind, n1: int, s1: float, ss1: float, n2: int, s2: float, ss2: float,
                     *, modified: bool = False, prior_center=(0.5, 0.5)) -> tuple[float, bool]:
    """Two-sample Z from per-arm count, sum and sum of squares.

    Returns ``(z, floored)`` where ``floored`` flags that an arm's variance
    estimate was zero and the floor was substituted.
    """
    if n1 < 1 or n2 < 1:
        raise DegenerateLookError(f"degenerate variance at look: arm counts ({n1}, {n2})")
    if modified:
        m1 = (s1 + prior_center[0]) / (n1 + 1)
        m2 = (s2 + prior_center[1]) / (n2 + 1)
    else:
        m1, m2 = s1 / n1, s2 / n2
    if kind is ModelKind.BINARY:
        v1, v2 = m1 * (1.0 - m1), m2 * (1.0 - m2)
    else:
        v1 = max((ss1 - s1 * s1 / n1) / (n1 - 1), 0.0) if n1 >= 2 else 0.0
        v2 = max((ss2 - s2 * s2 / n2) / (n2 - 1), 0.0) if n2 >= 2 else 0.0
    floored = False
    if v1 <= 0.0:
        v1, floored = VARIANCE_FLOOR, True
    if v2 <= 0.0:
        v2, floored = VARIANCE_FLOOR, True
    return (m1 - m2) / math.sqrt(v1 / n1 + v2 / n2), floored


def z_statistic(state: TrialState, kind: ModelKind, *, k: int = 1, n_max: int | None = None,
                modified: bool = False, prior_center=(0.5, 0.5)) -> LookStatistic:
    """Interim statistic on the current state.

    By default the raw per-arm means (or proportions) and the unbiased
    variance are used; ``modified=True`` swaps in the smoothed means.
    """
    n1, n2 = state.counts
    z, floored = z_from_summaries(
        kind, n1, state.sums[0], state.sumsq[0], n2, state.sums[1], state.sumsq[1],
        modified=modified, prior_center=prior_center,
    )
    t = state.m / (n_max or state.m)
    return LookStatistic(k, t, z, n1, n2, floored)


def drift_mu(model: ResponseModel, rho1: float) -> float:
    """Standardised effect; ``B_t - sqrt(n)*mu*t`` is Brownian under the alternative."""
    if not 0.0 < rho1 < 1.0:
        raise ValueError("rho1 must lie in (0,1)")
    a1, a2 = model.arm1, model.arm2
    if model.kind is ModelKind.NORMAL:
        diff = a1.mean - a2.mean
        v1, v2 = a1.sd ** 2 / rho1, a2.sd ** 2 / (1.0 - rho1)
    else:
        diff = a1.p - a2.p
        v1, v2 = a1.p * a1.q / rho1, a2.p * a2.q / (1.0 - rho1)
    return diff / math.sqrt(v1 + v2)

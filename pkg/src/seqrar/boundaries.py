"""Alpha-spending functions and two-sided group-sequential boundaries.

Boundaries are found by recursive numerical integration of the sub-density
of the not-yet-stopped B-process (``B_t = sqrt(t) Z_t``, a Brownian motion
with drift ``theta`` per unit information time). Each look's critical value
is solved so that the probability of first crossing there equals the
increment of the spending function.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .core import BoundarySet, LookSchedule, SpendingKind, SpendingSpec

SpendingFunction = SpendingSpec

N_SD = 7.5
MIN_POINTS = 513


class BoundaryError(ArithmeticError):
    pass


def norm_cdf(x):
    return ndtr(x)


def norm_ppf(p):
    return ndtri(p)


def spend(fn: SpendingFunction, t: float) -> float:
    """Cumulative type I error spent by information time ``t``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"information time out of [0,1]: {t}")
    alpha = fn.total_alpha
    if t == 0.0:
        return 0.0
    if fn.kind is SpendingKind.OBF_LIKE:
        z = -ndtri(alpha / 2.0)
        return float(2.0 * ndtr(-z / math.sqrt(t)))
    if fn.kind is SpendingKind.LINEAR:
        return alpha * t
    if fn.kind is SpendingKind.POCOCK_LIKE:
        return alpha * math.log(1.0 + (math.e - 1.0) * t)
    raise ValueError(f"{fn.kind.value} boundaries have no spending function")


def _times(schedule) -> np.ndarray:
    if isinstance(schedule, LookSchedule):
        if schedule.violations():
            raise BoundaryError("; ".join(schedule.violations()))
        return np.asarray(schedule.times, dtype=float)
    t = np.asarray(schedule, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise BoundaryError("need at least one look")
    if np.any(np.diff(t) <= 0):
        raise BoundaryError("looks not increasing")
    if t[0] <= 0 or t[-1] > 1:
        raise BoundaryError("information times must lie in (0,1]")
    return t


def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


class _Recursion:
    """Sub-density of the continuing B-process, carried from look to look."""

    def __init__(self, drift: float, points: int, times: np.ndarray):
        self.drift = drift
        self.points = points
        self.step = float(np.sqrt(np.diff(np.concatenate(([0.0], times))).min())) / 10.0
        self.t_prev = 0.0
        self.x = None  # grid
        self.wf = None  # weight * density on the grid

    def _grid(self, t: float, c: float, step: float) -> np.ndarray:
        centre, sd = self.drift * t, math.sqrt(t)
        lo = max(-c, centre - N_SD * sd)
        hi = min(c, centre + N_SD * sd)
        if hi <= lo:
            return np.array([lo, lo])
        n = max(self.points, int(math.ceil((hi - lo) / step)) + 1)
        n += (n + 1) % 2  # odd for Simpson
        return np.linspace(lo, hi, n)

    def cross(self, t: float, c: float) -> float:
        """P(continue to ``t`` and then |B_t| >= c)."""
        dt = t - self.t_prev
        mean_shift = self.drift * dt
        s = math.sqrt(dt)
        if self.x is None:
            return float(ndtr((-c - mean_shift) / s) + ndtr((mean_shift - c) / s))
        x = self.x + mean_shift
        tails = ndtr((-c - x) / s) + ndtr((x - c) / s)
        return float(np.dot(self.wf, tails))

    def advance(self, t: float, c: float) -> float:
        """Move to look ``t`` with continuation region ``(-c, c)``; return continuing mass."""
        dt = t - self.t_prev
        s = math.sqrt(dt)
        y = self._grid(t, c, self.step)
        h = y[1] - y[0]
        w = _simpson_weights(len(y), h) if h > 0 else np.zeros(len(y))
        if self.x is None:
            f = np.exp(-0.5 * ((y - self.drift * dt) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        else:
            d = (y[:, None] - self.x[None, :] - self.drift * dt) / s
            f = (np.exp(-0.5 * d * d) / (s * math.sqrt(2 * math.pi))) @ self.wf
        self.x, self.wf, self.t_prev = y, w * f, t
        return float(self.wf.sum())


def solve_boundaries(schedule, fn: SpendingFunction, *, points: int = MIN_POINTS) -> BoundarySet:
    """Two-sided Z-scale critical values spending ``fn`` at each look.

    ``schedule`` is a :class:`LookSchedule` or a sequence of information
    times. Fixed boundaries are passed through unchanged.
    """
    t = _times(schedule)
    if fn.kind is SpendingKind.FIXED:
        if fn.values is None or len(fn.values) != len(t):
            raise BoundaryError("fixed boundaries do not match the number of looks")
        return BoundarySet(tuple(float(v) for v in fn.values), fn.total_alpha)
    if not 0.0 < fn.total_alpha < 1.0:
        raise BoundaryError("total_alpha must lie in (0,1)")

    cum = [spend(fn, float(tk)) for tk in t]
    rec = _Recursion(0.0, points, t)
    bounds, prev = [], 0.0
    for tk, ak in zip(t, cum):
        inc = ak - prev
        if inc < -1e-12:
            raise BoundaryError(f"spending decreases at t={tk}")
        sqt = math.sqrt(tk)
        if inc <= 0.0:
            b = math.inf
        else:
            if rec.x is None:
                b = float(-ndtri(inc / 2.0))
            else:
                cap = rec.cross(tk, 0.0)
                if inc >= cap:
                    raise BoundaryError(f"cannot spend {inc:.3g} at t={tk}: only {cap:.3g} mass left")

                def excess(b, tk=tk, sqt=sqt, inc=inc):
                    return rec.cross(tk, b * sqt) - inc

                hi = 2.0
                while excess(hi) > 0:
                    hi *= 2.0
                    if hi > 1e3:
                        raise BoundaryError("boundary search did not bracket")
                b = brentq(excess, 0.0, hi, xtol=1e-13, rtol=1e-14)
                if abs(excess(b)) > 1e-6:
                    raise BoundaryError(f"boundary at t={tk} not converged")
        rec.advance(tk, b * sqt)
        bounds.append(b)
        prev = ak
    return BoundarySet(tuple(bounds), fn.total_alpha, tuple(cum))


def crossing_probability(boundaries, schedule, drift: float = 0.0, *,
                         points: int = MIN_POINTS) -> tuple[float, list[float]]:
    """First-crossing probabilities of the canonical process.

    ``drift`` is the B-scale drift per unit information time, i.e.
    ``mu * sqrt(n)``. Returns the overall rejection probability and the
    per-look probabilities.
    """
    t = _times(schedule)
    b = boundaries.critical_values if isinstance(boundaries, BoundarySet) else tuple(boundaries)
    if len(b) != len(t):
        raise BoundaryError("boundaries and schedule differ in length")
    rec = _Recursion(float(drift), points, t)
    per_look = []
    for tk, bk in zip(t, b):
        c = bk * math.sqrt(tk)
        per_look.append(0.0 if math.isinf(c) else rec.cross(tk, c))
        rec.advance(tk, c)
    return float(sum(per_look)), per_look


def lan_demets_boundary(prior_times: Sequence[float], t_now: float, fn: SpendingFunction) -> BoundarySet:
    """Boundaries for the looks taken so far plus the current one."""
    return solve_boundaries(list(prior_times) + [t_now], fn)

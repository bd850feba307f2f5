"""Compiled batch version of the trial loop.

Mirrors :func:`seqrar.engine.trial.run_trial` operation for operation so the
two routes agree on identical inputs. Codes below are plain ints because
numba does not take enums.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..core import AllocationKind

ALLOC_CODES = {
    AllocationKind.NEYMAN_NORMAL: 0,
    AllocationKind.NEYMAN_BINARY: 1,
    AllocationKind.RSIHR_OPTIMAL: 2,
    AllocationKind.URN: 3,
    AllocationKind.FIXED_EQUAL: 4,
}

SD_FLOOR = 1e-8
VARIANCE_FLOOR = 1e-12
LOG_BRANCH = 30.0


@njit(cache=True)
def _g(s, r, gamma):
    if s <= 0.0:
        return 1.0
    if s >= 1.0:
        return 0.0
    lr1 = math.log(r / s)
    lr2 = math.log((1.0 - r) / (1.0 - s))
    if gamma * max(abs(lr1), abs(lr2)) > LOG_BRANCH:
        d = math.log(1.0 - r) + gamma * lr2 - math.log(r) - gamma * lr1
        if d > 0:
            e = math.exp(-d)
            return e / (1.0 + e)
        return 1.0 / (1.0 + math.exp(d))
    a = r * (r / s) ** gamma
    b = (1.0 - r) * ((1.0 - r) / (1.0 - s)) ** gamma
    return a / (a + b)


@njit(cache=True)
def _rho(alloc, binary, cnt, sums, sumsq, prior):
    if alloc == 4:
        return 0.5
    m1 = (sums[0] + prior[0]) / (cnt[0] + 1)
    m2 = (sums[1] + prior[1]) / (cnt[1] + 1)
    if alloc == 0:
        sd = np.empty(2)
        for j in range(2):
            n = cnt[j]
            if n >= 2:
                var = (sumsq[j] - sums[j] * sums[j] / n) / (n - 1)
                sd[j] = max(math.sqrt(max(var, 0.0)), SD_FLOOR)
            else:
                sd[j] = SD_FLOOR
        return sd[0] / (sd[0] + sd[1])
    if alloc == 1:
        s1 = math.sqrt(m1 * (1.0 - m1))
        s2 = math.sqrt(m2 * (1.0 - m2))
        return s1 / (s1 + s2)
    if alloc == 2:
        return math.sqrt(m1) / (math.sqrt(m1) + math.sqrt(m2))
    q1, q2 = 1.0 - m1, 1.0 - m2
    return q2 / (q1 + q2)


@njit(cache=True)
def _z(binary, modified, cnt, sums, sumsq, prior):
    n1, n2 = cnt[0], cnt[1]
    if modified:
        m1 = (sums[0] + prior[0]) / (n1 + 1)
        m2 = (sums[1] + prior[1]) / (n2 + 1)
    else:
        m1, m2 = sums[0] / n1, sums[1] / n2
    if binary:
        v1, v2 = m1 * (1.0 - m1), m2 * (1.0 - m2)
    else:
        v1 = max((sumsq[0] - sums[0] * sums[0] / n1) / (n1 - 1), 0.0) if n1 >= 2 else 0.0
        v2 = max((sumsq[1] - sums[1] * sums[1] / n2) / (n2 - 1), 0.0) if n2 >= 2 else 0.0
    floored = False
    if v1 <= 0.0:
        v1, floored = VARIANCE_FLOOR, True
    if v2 <= 0.0:
        v2, floored = VARIANCE_FLOOR, True
    return (m1 - m2) / math.sqrt(v1 / n1 + v2 / n2), floored


@njit(cache=True)
def simulate_batch(binary, adaptive, alloc, gamma, prior, modified, policy, stop_early,
                   looks, bounds, burn, u, x1, x2):
    """Run ``R`` trials; row ``r`` of ``burn``, ``u``, ``x1``, ``x2`` feeds trial ``r``.

    Returns (reject_look [0 = none], enrolled, n1, failures, z [R, K],
    floored count, error flag). ``error`` is set when an arm is empty at a
    look, in which case the remaining outputs for that row are undefined.
    """
    R, n = x1.shape
    K = looks.shape[0]
    nb = burn.shape[1]
    reject = np.zeros(R, dtype=np.int64)
    enrolled = np.zeros(R, dtype=np.int64)
    arm1 = np.zeros(R, dtype=np.int64)
    failures = np.zeros(R, dtype=np.int64)
    zs = np.full((R, K), np.nan)
    floored_n = np.zeros(R, dtype=np.int64)
    error = np.zeros(R, dtype=np.bool_)
    cnt = np.zeros(2, dtype=np.int64)
    sums = np.zeros(2)
    sumsq = np.zeros(2)
    for r in range(R):
        cnt[:] = 0
        sums[:] = 0.0
        sumsq[:] = 0.0
        k = 0
        m = 0
        for i in range(n):
            if adaptive and i < nb:
                arm = burn[r, i]
            else:
                if adaptive:
                    rho = _rho(alloc, binary, cnt, sums, sumsq, prior)
                    p = _g(cnt[0] / m, rho, gamma)
                else:
                    p = 0.5
                arm = 1 if u[r, i - nb if adaptive else i] < p else 2
            x = x1[r, i] if arm == 1 else x2[r, i]
            j = arm - 1
            cnt[j] += 1
            sums[j] += x
            sumsq[j] += x * x
            m += 1
            if m == looks[k]:
                if cnt[0] < 1 or cnt[1] < 1:
                    error[r] = True
                    break
                z, fl = _z(binary, modified, cnt, sums, sumsq, prior)
                zs[r, k] = z
                if fl:
                    floored_n[r] += 1
                if reject[r] == 0 and abs(z) >= bounds[k]:
                    reject[r] = k + 1
                k += 1
                if reject[r] != 0 and stop_early:
                    break
        enrolled[r] = m
        arm1[r] = cnt[0]
        if binary:
            f = m - int(round(sums[0] + sums[1]))
            if policy and m < n:
                p1 = sums[0] / cnt[0] if cnt[0] > 0 else 0.0
                p2 = sums[1] / cnt[1] if cnt[1] > 0 else 0.0
                for i in range(m, n):
                    x = x1[r, i] if p1 >= p2 else x2[r, i]
                    if x < 0.5:
                        f += 1
            failures[r] = f
    return reject, enrolled, arm1, failures, zs, floored_n, error

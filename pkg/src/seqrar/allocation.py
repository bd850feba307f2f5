"""Target allocations, the DBCD allocation function and patient assignment."""

from __future__ import annotations

import math

import numpy as np

from .core import AllocationKind, Design, ModelKind, ResponseModel, TargetAllocation, TrialState
from .inference import modified_mean

SD_FLOOR = 1e-8
LOG_BRANCH = 30.0

# Purpose indices used in per-replication seed derivation.
STREAM_ASSIGN, STREAM_ARM1, STREAM_ARM2 = 0, 1, 2


def derive_seed(master_seed: int, replication: int, purpose: int = STREAM_ASSIGN) -> np.random.SeedSequence:
    """Stable seed for one (replication, purpose) stream.

    The derivation is ``SeedSequence(master_seed, spawn_key=(replication, purpose))``
    and is part of the reproducibility contract; changing it changes every
    previously saved report.
    """
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(replication), int(purpose)))


class AssignmentRng:
    """Deterministic uniform/permutation stream backed by PCG64."""

    def __init__(self, seed):
        if not isinstance(seed, np.random.SeedSequence):
            seed = np.random.SeedSequence(int(seed))
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, size: int) -> np.ndarray:
        return self._gen.random(size)

    def permutation(self, x):
        return self._gen.permutation(x)


def target_rho(allocation: TargetAllocation, theta: ResponseModel) -> float:
    """Arm-1 target proportion evaluated at ``theta`` (true values or estimates)."""
    kind = allocation.kind
    a1, a2 = theta.arm1, theta.arm2
    if kind is AllocationKind.FIXED_EQUAL:
        return 0.5
    if kind is AllocationKind.NEYMAN_NORMAL:
        num, den = a1.sd, a1.sd + a2.sd
    elif kind is AllocationKind.NEYMAN_BINARY:
        s1 = math.sqrt(a1.p * (1.0 - a1.p))
        s2 = math.sqrt(a2.p * (1.0 - a2.p))
        num, den = s1, s1 + s2
    elif kind is AllocationKind.RSIHR_OPTIMAL:
        num, den = math.sqrt(a1.p), math.sqrt(a1.p) + math.sqrt(a2.p)
    elif kind is AllocationKind.URN:
        num, den = a2.q, a1.q + a2.q
    else:
        raise ValueError(f"unknown allocation {kind}")
    if not den > 0.0:
        raise ValueError("allocation undefined: both arm dispersions are zero")
    return num / den


def dbcd_g(s: float, r: float, gamma: float) -> float:
    """Probability of assigning the next patient to arm 1.

    ``s`` is the current arm-1 proportion, ``r`` the estimated target.
    """
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


def permuted_block_burn_in(n0: int, rng: AssignmentRng) -> list[int]:
    """One permuted block of size ``2*n0`` holding ``n0`` patients per arm."""
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    block = np.repeat(np.array([1, 2], dtype=np.int64), n0)
    return [int(a) for a in rng.permutation(block)]


def estimate_theta(state: TrialState, kind: ModelKind, prior_center=(0.5, 0.5)) -> ResponseModel:
    """Parameter estimates that drive the adaptive target.

    Binary arms use the smoothed mean ``(successes + prior)/(N + 1)``. Normal
    arms use the smoothed mean together with the usual unbiased sample sd
    (floored, since the Neyman target needs a positive sd).
    """
    if kind is ModelKind.BINARY:
        return ResponseModel.binary(
            modified_mean(state.sums[0], state.counts[0], prior_center[0]),
            modified_mean(state.sums[1], state.counts[1], prior_center[1]),
        )
    means, sds = [], []
    for j in range(2):
        n = state.counts[j]
        means.append(modified_mean(state.sums[j], n, prior_center[j]))
        if n >= 2:
            var = (state.sumsq[j] - state.sums[j] ** 2 / n) / (n - 1)
            sds.append(max(math.sqrt(max(var, 0.0)), SD_FLOOR))
        else:
            sds.append(SD_FLOOR)
    return ResponseModel.normal(means[0], sds[0], means[1], sds[1])


def assignment_probability(state: TrialState, design: Design, allocation: TargetAllocation,
                           kind: ModelKind) -> float:
    if not design.is_adaptive:
        return 0.5
    if state.m < 2 * design.burn_in_per_arm:
        raise RuntimeError(
            f"adaptive assignment requested at m={state.m} before burn-in of {2 * design.burn_in_per_arm} completed"
        )
    rho = target_rho(allocation, estimate_theta(state, kind, design.prior_center))
    return dbcd_g(state.proportion(1), rho, design.gamma)


def next_assignment(state: TrialState, design: Design, allocation: TargetAllocation,
                    rng: AssignmentRng, kind: ModelKind) -> int:
    """Draw the arm (1 or 2) for patient ``state.m + 1``."""
    p = assignment_probability(state, design, allocation, kind)
    return 1 if rng.uniform() < p else 2

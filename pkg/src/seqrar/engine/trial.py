"""Single-trial simulation: random inputs and the patient-by-patient reference loop.

Each replication owns three streams derived from ``(master_seed, replication)``:
one for assignment (burn-in permutation, then one uniform per adaptive
patient) and one per arm holding that arm's potential outcome for every
patient index. Only the outcome of the arm a patient actually receives is
observed. Because outcomes are tied to patient index rather than to the
order of draws, rows run with the same master seed share responses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..allocation import (
    STREAM_ARM1, STREAM_ARM2, STREAM_ASSIGN, AssignmentRng, derive_seed, next_assignment,
    permuted_block_burn_in,
)
from ..core import BoundarySet, ModelKind, ResponseModel, Scenario, TrialState
from ..inference import LookStatistic, z_statistic


@dataclass
class TrialResult:
    rejected: bool
    rejection_look: int | None
    allocation_prop: float
    n_enrolled: int
    total_failures: int | None = None
    looks: list[LookStatistic] = field(default_factory=list)

    @property
    def floored_looks(self) -> int:
        return sum(1 for s in self.looks if s.floored)


def potential_outcomes(model: ResponseModel, n: int, master_seed: int, replication: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-patient outcomes for both arms, shape ``(n,)`` each."""
    out = []
    for purpose, arm in ((STREAM_ARM1, model.arm1), (STREAM_ARM2, model.arm2)):
        gen = np.random.Generator(np.random.PCG64(derive_seed(master_seed, replication, purpose)))
        if model.kind is ModelKind.BINARY:
            out.append((gen.random(n) < arm.p).astype(np.float64))
        else:
            out.append(arm.mean + arm.sd * gen.standard_normal(n))
    return out[0], out[1]


def assignment_inputs(scenario: Scenario, master_seed: int, replication: int) -> tuple[np.ndarray, np.ndarray]:
    """Burn-in block (empty for CR) and the uniforms for every later patient."""
    rng = AssignmentRng(derive_seed(master_seed, replication, STREAM_ASSIGN))
    n = scenario.schedule.n
    if scenario.design.is_adaptive:
        burn = np.asarray(permuted_block_burn_in(scenario.design.burn_in_per_arm, rng), dtype=np.int64)
    else:
        burn = np.zeros(0, dtype=np.int64)
    return burn, rng.uniforms(n - len(burn))


def run_trial(scenario: Scenario, boundaries: BoundarySet, seed: int, replication: int = 0,
              *, stop_early: bool = True) -> TrialResult:
    """Simulate one trial patient by patient.

    This is the readable reference path; :func:`seqrar.engine.monte_carlo`
    runs the same arithmetic in a compiled kernel on identical inputs.
    """
    design, model, sched = scenario.design, scenario.model, scenario.schedule
    n = sched.n
    if len(boundaries) != sched.K:
        raise ValueError("boundaries and schedule differ in length")
    x1, x2 = potential_outcomes(model, n, seed, replication)
    rng = AssignmentRng(derive_seed(seed, replication, STREAM_ASSIGN))
    burn = permuted_block_burn_in(design.burn_in_per_arm, rng) if design.is_adaptive else []

    state = TrialState()
    modified = scenario.test_estimator == "modified"
    looks: list[LookStatistic] = []
    rejection_look = None
    k = 0
    for i in range(n):
        if i < len(burn):
            arm = burn[i]
        else:
            arm = next_assignment(state, design, scenario.allocation, rng, model.kind)
        state.record(arm, float(x1[i] if arm == 1 else x2[i]))
        if state.m == sched.look_sizes[k]:
            stat = z_statistic(state, model.kind, k=k + 1, n_max=n, modified=modified,
                               prior_center=design.prior_center)
            looks.append(stat)
            if rejection_look is None and abs(stat.z_value) >= boundaries.critical_values[k]:
                rejection_look = k + 1
            k += 1
            if rejection_look is not None and stop_early:
                break

    m = state.m
    failures = None
    if model.kind is ModelKind.BINARY:
        failures = int(m - round(sum(state.sums)))
        if scenario.remaining_patient_policy and m < n:
            # Ties go to arm 1.
            p1 = state.sums[0] / state.counts[0] if state.counts[0] else 0.0
            p2 = state.sums[1] / state.counts[1] if state.counts[1] else 0.0
            better = 1 if p1 >= p2 else 2
            rest = (x1 if better == 1 else x2)[m:]
            failures += int(len(rest) - round(rest.sum()))
    return TrialResult(
        rejected=rejection_look is not None,
        rejection_look=rejection_look,
        allocation_prop=state.counts[0] / m,
        n_enrolled=m,
        total_failures=failures,
        looks=looks,
    )

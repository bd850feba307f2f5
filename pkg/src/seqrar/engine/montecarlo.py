"""Monte Carlo replication, aggregation and canonical-distribution diagnostics."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..allocation import target_rho
from ..boundaries import solve_boundaries
from ..core import AggregateReport, BoundarySet, ModelKind, Scenario, ScenarioError, check_scenario
from ..inference import DegenerateLookError, drift_mu
from .kernel import ALLOC_CODES, simulate_batch
from .trial import assignment_inputs, potential_outcomes

CHUNK = 500


@dataclass
class BatchResult:
    reject_look: np.ndarray
    enrolled: np.ndarray
    arm1: np.ndarray
    failures: np.ndarray
    z: np.ndarray
    floored: np.ndarray


def _run_chunk(scenario: Scenario, bounds: tuple[float, ...], master_seed: int, start: int, stop: int,
               stop_early: bool) -> BatchResult:
    sched, design = scenario.schedule, scenario.design
    n, R = sched.n, stop - start
    nb = 2 * design.burn_in_per_arm if design.is_adaptive else 0
    burn = np.zeros((R, nb), dtype=np.int64)
    u = np.empty((R, n - nb))
    x1 = np.empty((R, n))
    x2 = np.empty((R, n))
    for row, rep in enumerate(range(start, stop)):
        burn[row], u[row] = assignment_inputs(scenario, master_seed, rep)
        x1[row], x2[row] = potential_outcomes(scenario.model, n, master_seed, rep)
    out = simulate_batch(
        scenario.model.kind is ModelKind.BINARY,
        design.is_adaptive,
        ALLOC_CODES[scenario.allocation.kind],
        float(design.gamma),
        np.asarray(design.prior_center, dtype=np.float64),
        scenario.test_estimator == "modified",
        bool(scenario.remaining_patient_policy),
        stop_early,
        np.asarray(sched.look_sizes, dtype=np.int64),
        np.asarray(bounds, dtype=np.float64),
        burn, u, x1, x2,
    )
    reject, enrolled, arm1, failures, z, floored, error = out
    if error.any():
        rep = start + int(np.argmax(error))
        raise DegenerateLookError(f"degenerate variance at look: an arm is empty (replication {rep})")
    return BatchResult(reject, enrolled, arm1, failures, z, floored)


def _run_chunk_star(args):
    return _run_chunk(*args)


def simulate_replications(scenario: Scenario, boundaries: BoundarySet, replications: int, master_seed: int,
                          *, parallel: int | None = 1, stop_early: bool = True) -> BatchResult:
    """Raw per-replication outputs in replication order.

    Replication ``i`` depends only on ``(master_seed, i)``, so the chunking and
    worker count never change the result.
    """
    spans = [(s, min(s + CHUNK, replications)) for s in range(0, replications, CHUNK)]
    jobs = [(scenario, tuple(boundaries.critical_values), master_seed, a, b, stop_early) for a, b in spans]
    workers = (os.cpu_count() or 1) if parallel is None else parallel
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            parts = list(pool.map(_run_chunk_star, jobs))
    else:
        parts = [_run_chunk(*job) for job in jobs]
    return BatchResult(*(np.concatenate([getattr(p, f) for p in parts])
                         for f in ("reject_look", "enrolled", "arm1", "failures", "z", "floored")))


def boundaries_for(scenario: Scenario) -> BoundarySet:
    return solve_boundaries(scenario.schedule, scenario.spending)


def _sd(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if x.size > 1 else 0.0


def monte_carlo(scenario: Scenario, boundaries: BoundarySet | None = None, replications: int | None = None,
                master_seed: int | None = None, *, parallel: int | None = 1) -> AggregateReport:
    """Operating characteristics of ``scenario`` over ``replications`` trials."""
    check_scenario(scenario)
    boundaries = boundaries or boundaries_for(scenario)
    replications = scenario.replications if replications is None else int(replications)
    master_seed = scenario.master_seed if master_seed is None else int(master_seed)
    if replications < 1:
        raise ScenarioError(["replications must be >= 1"])
    res = simulate_replications(scenario, boundaries, replications, master_seed, parallel=parallel)
    K = scenario.schedule.K
    by_look = tuple(int(np.sum(res.reject_look == k)) for k in range(1, K + 1))
    rho = res.arm1 / res.enrolled
    binary = scenario.model.kind is ModelKind.BINARY
    return AggregateReport(
        scenario_id=scenario.scenario_id,
        design=scenario.design.kind.value,
        allocation=scenario.allocation.kind.value if scenario.design.is_adaptive else "fixed_equal",
        spending=scenario.spending.name,
        replications=replications,
        master_seed=master_seed,
        rejection_rate=sum(by_look) / replications,
        rejections_by_look=by_look,
        rho1_mean=float(np.mean(rho)),
        rho1_sd=_sd(rho),
        failures_mean=float(np.mean(res.failures)) if binary else None,
        failures_sd=_sd(res.failures.astype(float)) if binary else None,
        mean_sample_size=float(np.mean(res.enrolled)),
        floored_looks=int(res.floored.sum()),
    )


@dataclass
class Diagnostics:
    look_sizes: tuple[int, ...]
    mu: float
    theory_mean: np.ndarray
    empirical_mean: np.ndarray
    theory_corr: np.ndarray
    empirical_corr: np.ndarray
    replications: int

    @property
    def mean_deviation(self) -> np.ndarray:
        return np.abs(self.empirical_mean - self.theory_mean)

    @property
    def corr_deviation(self) -> np.ndarray:
        return np.abs(self.empirical_corr - self.theory_corr)

    def rows(self) -> list[dict]:
        out = []
        K = len(self.look_sizes)
        for i in range(K):
            out.append({
                "quantity": f"mean_z{i + 1}", "theory": float(self.theory_mean[i]),
                "empirical": float(self.empirical_mean[i]), "abs_dev": float(self.mean_deviation[i]),
            })
        for i in range(K):
            for j in range(i + 1, K):
                out.append({
                    "quantity": f"corr_z{i + 1}_z{j + 1}", "theory": float(self.theory_corr[i, j]),
                    "empirical": float(self.empirical_corr[i, j]), "abs_dev": float(self.corr_deviation[i, j]),
                })
        return out


def canonical_diagnostics(scenario: Scenario, replications: int | None = None, master_seed: int | None = None,
                          *, parallel: int | None = 1) -> Diagnostics:
    """Empirical mean and correlation of the interim Z's against their canonical law.

    Every replication runs to the final look with no stopping. The drift uses
    the true-parameter target for DBCD and 1/2 for complete randomization.
    """
    check_scenario(scenario)
    sched = scenario.schedule
    if sched.K < 2:
        raise ScenarioError(["diagnostics need >= 2 looks"])
    replications = scenario.replications if replications is None else int(replications)
    master_seed = scenario.master_seed if master_seed is None else int(master_seed)
    never = BoundarySet(tuple([math.inf] * sched.K))
    res = simulate_replications(scenario, never, replications, master_seed, parallel=parallel, stop_early=False)
    rho = target_rho(scenario.allocation, scenario.model) if scenario.design.is_adaptive else 0.5
    mu = drift_mu(scenario.model, rho)
    sizes = np.asarray(sched.look_sizes, dtype=float)
    theory_corr = np.sqrt(np.minimum.outer(sizes, sizes) / np.maximum.outer(sizes, sizes))
    return Diagnostics(
        look_sizes=sched.look_sizes,
        mu=mu,
        theory_mean=mu * np.sqrt(sizes),
        empirical_mean=res.z.mean(axis=0),
        theory_corr=theory_corr,
        empirical_corr=np.corrcoef(res.z, rowvar=False),
        replications=replications,
    )

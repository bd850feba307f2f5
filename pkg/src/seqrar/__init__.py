"""Response-adaptive randomization with group-sequential monitoring."""

from .allocation import dbcd_g, target_rho
from .boundaries import crossing_probability, solve_boundaries, spend
from .core import (
    AllocationKind, BoundarySet, Design, DesignKind, LookSchedule, ModelKind, ResponseModel, Scenario,
    ScenarioError, SpendingKind, SpendingSpec, TargetAllocation, validate_scenario,
)
from .engine import canonical_diagnostics, monte_carlo, run_trial
from .inference import drift_mu, z_statistic

__version__ = "0.1.0"

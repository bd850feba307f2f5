from .montecarlo import (
    BatchResult, Diagnostics, boundaries_for, canonical_diagnostics, monte_carlo, simulate_replications,
)
from .trial import TrialResult, assignment_inputs, potential_outcomes, run_trial

__all__ = [
    "BatchResult", "Diagnostics", "TrialResult", "assignment_inputs", "boundaries_for",
    "canonical_diagnostics", "monte_carlo", "potential_outcomes", "run_trial", "simulate_replications",
]

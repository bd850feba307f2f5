"""Domain types shared by the allocation, inference, boundary and engine layers.

Everything here is a frozen value type except :class:`TrialState`, which is
mutated by a single writer (the trial loop). Scenarios round-trip through
plain dicts so the CLI can read and write them as JSON.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence


class ScenarioError(ValueError):
    """Raised when a scenario violates one or more type invariants.

    ``violations`` holds every problem found, not just the first.
    """

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ModelKind(str, Enum):
    NORMAL = "normal"
    BINARY = "binary"


class AllocationKind(str, Enum):
    NEYMAN_NORMAL = "neyman_normal"
    NEYMAN_BINARY = "neyman_binary"
    RSIHR_OPTIMAL = "rsihr_optimal"
    URN = "urn"
    FIXED_EQUAL = "fixed_equal"


class DesignKind(str, Enum):
    DBCD = "dbcd"
    CR = "cr"


class SpendingKind(str, Enum):
    OBF_LIKE = "obf_like"
    LINEAR = "linear"
    POCOCK_LIKE = "pocock_like"
    FIXED = "fixed"


@dataclass(frozen=True)
class ArmParams:
    """Outcome distribution of one arm.

    Normal arms use ``mean`` and ``sd``; binary arms use ``p`` only.
    """

    mean: float | None = None
    sd: float | None = None
    p: float | None = None

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def to_dict(self) -> dict:
        return {k: v for k, v in (("mean", self.mean), ("sd", self.sd), ("p", self.p)) if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "ArmParams":
        unknown = set(d) - {"mean", "sd", "p"}
        if unknown:
            raise ScenarioError([f"arm: unknown field(s) {sorted(unknown)}"])
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class ResponseModel:
    kind: ModelKind
    arm1: ArmParams
    arm2: ArmParams

    @classmethod
    def normal(cls, mean1, sd1, mean2, sd2) -> "ResponseModel":
        return cls(ModelKind.NORMAL, ArmParams(mean=mean1, sd=sd1), ArmParams(mean=mean2, sd=sd2))

    @classmethod
    def binary(cls, p1, p2) -> "ResponseModel":
        return cls(ModelKind.BINARY, ArmParams(p=p1), ArmParams(p=p2))

    @property
    def arms(self) -> tuple[ArmParams, ArmParams]:
        return self.arm1, self.arm2

    def violations(self) -> list[str]:
        out = []
        for j, arm in enumerate(self.arms, start=1):
            if self.kind is ModelKind.BINARY:
                if arm.p is None or not math.isfinite(arm.p):
                    out.append(f"model.arm{j}.p missing")
                elif not 0.0 < arm.p < 1.0:
                    out.append(f"p{j} out of (0,1): {arm.p}")
            else:
                if arm.mean is None or not math.isfinite(arm.mean):
                    out.append(f"model.arm{j}.mean missing")
                if arm.sd is None or not math.isfinite(arm.sd):
                    out.append(f"model.arm{j}.sd missing")
                elif arm.sd <= 0.0:
                    out.append(f"sd{j} must be > 0: {arm.sd}")
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "arm1": self.arm1.to_dict(), "arm2": self.arm2.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ResponseModel":
        return cls(ModelKind(d["kind"]), ArmParams.from_dict(d["arm1"]), ArmParams.from_dict(d["arm2"]))


@dataclass(frozen=True)
class TargetAllocation:
    kind: AllocationKind

    def to_dict(self) -> dict:
        return {"kind": self.kind.value}

    @classmethod
    def from_dict(cls, d: dict) -> "TargetAllocation":
        return cls(AllocationKind(d["kind"]))


_BINARY_ALLOCATIONS = {AllocationKind.NEYMAN_BINARY, AllocationKind.RSIHR_OPTIMAL, AllocationKind.URN}


@dataclass(frozen=True)
class Design:
    kind: DesignKind
    gamma: float = 2.0
    burn_in_per_arm: int = 25
    prior_center: tuple[float, float] = (0.5, 0.5)

    @classmethod
    def dbcd(cls, gamma=2.0, burn_in_per_arm=25, prior_center=(0.5, 0.5)) -> "Design":
        return cls(DesignKind.DBCD, float(gamma), int(burn_in_per_arm), tuple(map(float, prior_center)))

    @classmethod
    def cr(cls) -> "Design":
        return cls(DesignKind.CR)

    @property
    def is_adaptive(self) -> bool:
        return self.kind is DesignKind.DBCD

    def to_dict(self) -> dict:
        if not self.is_adaptive:
            return {"kind": self.kind.value}
        return {
            "kind": self.kind.value,
            "gamma": self.gamma,
            "burn_in_per_arm": self.burn_in_per_arm,
            "prior_center": list(self.prior_center),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Design":
        kind = DesignKind(d["kind"])
        if kind is DesignKind.CR:
            return cls.cr()
        prior = d.get("prior_center", (0.5, 0.5))
        if isinstance(prior, (int, float)):
            prior = (prior, prior)
        return cls.dbcd(d.get("gamma", 2.0), d.get("burn_in_per_arm", 25), prior)


@dataclass(frozen=True)
class LookSchedule:
    """Interim analysis points given as cumulative patient counts."""

    look_sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "look_sizes", tuple(int(n) for n in self.look_sizes))

    @property
    def n(self) -> int:
        return self.look_sizes[-1]

    @property
    def K(self) -> int:
        return len(self.look_sizes)

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(nk / self.n for nk in self.look_sizes)

    def violations(self) -> list[str]:
        if not self.look_sizes:
            return ["schedule.look_sizes empty"]
        out = []
        if self.look_sizes[0] <= 0:
            out.append("schedule.look_sizes must be positive")
        if any(b <= a for a, b in zip(self.look_sizes, self.look_sizes[1:])):
            out.append("looks not increasing")
        return out

    def to_dict(self) -> dict:
        return {"look_sizes": list(self.look_sizes)}

    @classmethod
    def from_dict(cls, d: dict) -> "LookSchedule":
        return cls(tuple(d["look_sizes"]))


@dataclass(frozen=True)
class SpendingSpec:
    """Which boundaries to monitor with.

    ``FIXED`` carries externally chosen critical values in ``values``; the other
    kinds are solved from their spending function. ``label`` is what shows
    up in reports (e.g. a fixed triple labelled ``obf_like``).
    """

    kind: SpendingKind
    total_alpha: float = 0.05
    values: tuple[float, ...] | None = None
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label or self.kind.value

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind.value, "total_alpha": self.total_alpha}
        if self.values is not None:
            d["values"] = list(self.values)
        if self.label is not None:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SpendingSpec":
        values = d.get("values")
        return cls(
            SpendingKind(d["kind"]),
            float(d.get("total_alpha", 0.05)),
            None if values is None else tuple(float(v) for v in values),
            d.get("label"),
        )


@dataclass(frozen=True)
class BoundarySet:
    """Two-sided Z-scale critical values; ``inf`` marks a skipped look."""

    critical_values: tuple[float, ...]
    total_alpha: float = 0.05
    cumulative_spend: tuple[float, ...] | None = None

    def __len__(self):
        return len(self.critical_values)


@dataclass(frozen=True)
class Scenario:
    model: ResponseModel
    design: Design
    allocation: TargetAllocation
    schedule: LookSchedule
    spending: SpendingSpec = field(default_factory=lambda: SpendingSpec(SpendingKind.LINEAR))
    replications: int = 5000
    master_seed: int = 0
    remaining_patient_policy: bool = False
    test_estimator: str = "raw"
    scenario_id: str = "scenario"

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "model": self.model.to_dict(),
            "design": self.design.to_dict(),
            "allocation": self.allocation.to_dict(),
            "schedule": self.schedule.to_dict(),
            "spending": self.spending.to_dict(),
            "replications": self.replications,
            "master_seed": self.master_seed,
            "remaining_patient_policy": "on" if self.remaining_patient_policy else "off",
            "test_estimator": self.test_estimator,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        required = ("model", "design", "allocation", "schedule")
        missing = [k for k in required if k not in d]
        if missing:
            raise ScenarioError([f"missing field: {k}" for k in missing])
        policy = d.get("remaining_patient_policy", "off")
        if isinstance(policy, str):
            if policy not in ("on", "off"):
                raise ScenarioError([f"remaining_patient_policy must be 'on' or 'off', got {policy!r}"])
            policy = policy == "on"
        try:
            return cls(
                model=ResponseModel.from_dict(d["model"]),
                design=Design.from_dict(d["design"]),
                allocation=TargetAllocation.from_dict(d["allocation"]),
                schedule=LookSchedule.from_dict(d["schedule"]),
                spending=SpendingSpec.from_dict(d.get("spending", {"kind": "linear"})),
                replications=int(d.get("replications", 5000)),
                master_seed=int(d.get("master_seed", 0)),
                remaining_patient_policy=bool(policy),
                test_estimator=d.get("test_estimator", "raw"),
                scenario_id=str(d.get("scenario_id", "scenario")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError([f"malformed scenario: {exc}"]) from exc


def validate_scenario(model: ResponseModel, design: Design, schedule: LookSchedule,
                      allocation: TargetAllocation, *, spending: SpendingSpec | None = None,
                      remaining_patient_policy: bool = False) -> list[str]:
    """Return every invariant violation found; an empty list means valid."""
    out = model.violations() + schedule.violations()

    if design.is_adaptive:
        if not design.gamma >= 0.0:
            out.append(f"gamma must be >= 0: {design.gamma}")
        if design.burn_in_per_arm < 1:
            out.append(f"burn_in_per_arm must be >= 1: {design.burn_in_per_arm}")
        elif schedule.look_sizes and 2 * design.burn_in_per_arm >= schedule.look_sizes[0]:
            out.append(f"burn-in {2 * design.burn_in_per_arm} >= first look {schedule.look_sizes[0]}")
        if len(design.prior_center) != 2:
            out.append("prior_center must have one value per arm")

    if model.kind is ModelKind.NORMAL and allocation.kind in _BINARY_ALLOCATIONS:
        out.append(f"allocation {allocation.kind.value} needs a binary model")
    if model.kind is ModelKind.BINARY and allocation.kind is AllocationKind.NEYMAN_NORMAL:
        out.append("allocation neyman_normal needs a normal model")
    if remaining_patient_policy and model.kind is ModelKind.NORMAL:
        out.append("remaining_patient_policy needs a binary model (failures undefined for normal)")

    if spending is not None:
        if not 0.0 < spending.total_alpha < 1.0:
            out.append(f"spending.total_alpha out of (0,1): {spending.total_alpha}")
        if spending.kind is SpendingKind.FIXED:
            if spending.values is None:
                out.append("fixed spending needs values")
            elif len(spending.values) != len(schedule.look_sizes):
                out.append(f"fixed boundaries: {len(spending.values)} values for {len(schedule.look_sizes)} looks")
            elif any(not v > 0 for v in spending.values):
                out.append("fixed boundaries must be positive")
    return out


def check_scenario(scenario: Scenario) -> Scenario:
    """Return ``scenario`` unchanged, or raise :class:`ScenarioError`."""
    problems = validate_scenario(
        scenario.model, scenario.design, scenario.schedule, scenario.allocation,
        spending=scenario.spending, remaining_patient_policy=scenario.remaining_patient_policy,
    )
    if scenario.replications < 1:
        problems.append(f"replications must be >= 1: {scenario.replications}")
    if scenario.test_estimator not in ("raw", "modified"):
        problems.append(f"test_estimator must be 'raw' or 'modified': {scenario.test_estimator!r}")
    if problems:
        raise ScenarioError(problems)
    return scenario


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


class TrialState:
    """Running record of one trial: assignments, responses and per-arm sums.

    Arms are labelled 1 and 2. Sums of squares are kept so the normal test
    statistic and the Neyman target can be formed without rescanning.
    """

    def __init__(self):
        self.assignments: list[int] = []
        self.responses: list[float] = []
        self.counts = [0, 0]
        self.sums = [0.0, 0.0]
        self.sumsq = [0.0, 0.0]

    @property
    def m(self) -> int:
        return len(self.assignments)

    def record(self, arm: int, response: float) -> None:
        j = arm - 1
        self.assignments.append(arm)
        self.responses.append(response)
        self.counts[j] += 1
        self.sums[j] += response
        self.sumsq[j] += response * response

    def proportion(self, arm: int = 1) -> float:
        return self.counts[arm - 1] / self.m

    def copy(self) -> "TrialState":
        return copy.deepcopy(self)


@dataclass(frozen=True)
class AggregateReport:
    """Monte Carlo summary for one (design, allocation, spending) configuration.

    ``rho1_*`` describe the arm-1 proportion among patients enrolled when
    the trial stopped. Failure fields are ``None`` for normal models.
    """

    scenario_id: str
    design: str
    allocation: str
    spending: str
    replications: int
    master_seed: int
    rejection_rate: float
    rejections_by_look: tuple[int, ...]
    rho1_mean: float
    rho1_sd: float
    failures_mean: float | None = None
    failures_sd: float | None = None
    mean_sample_size: float | None = None
    floored_looks: int = 0

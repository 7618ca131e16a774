"""
This module contains the Scenario class and the pieces a scenario is made of.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from classes.failure_status import classify_failure


class TrajectoryType(Enum):
    HOVER = "hover"
    ATTITUDE_SINUSOID = "attitude-sinusoid"
    SIX_DOF = "six-dof"


class AllocationMethod(Enum):
    FD = "FD"
    NULLSPACE = "Nullspace"


class LowLevelVariant(Enum):
    REDUCED_28 = "Reduced28"
    FULL_RANK_27 = "FullRank27"


def _triple(data: dict[str, Any], key: str) -> tuple[float, float, float]:
    value = data.get(key, [0.0, 0.0, 0.0])
    values = tuple(float(v) for v in value)
    if len(values) != 3:
        raise ValueError(f"{key} needs three values")
    return values  # type: ignore[return-value]


@dataclass(frozen=True)
class TrajectorySpec(object):
    """
    Smooth ramp from hover to the target attitude (and position, for
    six-dof) over ``ramp_time`` seconds, held afterwards. With a ``period``
    the reference instead swings between hover and the targets, one full
    swing per period, starting at ``ramp_start``.
    """

    type: TrajectoryType = TrajectoryType.HOVER
    attitude: tuple[float, float, float] = (0.0, 0.0, 0.0)
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ramp_start: float = 0.0
    ramp_time: float = 1.0
    period: float | None = None

    def __post_init__(self) -> None:
        if self.ramp_time <= 0.0 or self.ramp_start < 0.0:
            raise ValueError("ramp_time must be positive and ramp_start non-negative")
        if self.period is not None and not self.period > 0.0:
            raise ValueError(f"period must be positive, got {self.period}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TrajectorySpec":
        return cls(
            type=TrajectoryType(data.get("type", "hover")),
            attitude=_triple(data, "attitude"),
            position=_triple(data, "position"),
            ramp_start=float(data.get("ramp_start", 0.0)),
            ramp_time=float(data.get("ramp_time", 1.0)),
            period=float(data["period"]) if data.get("period") is not None else None,
        )


@dataclass(frozen=True)
class FailureEvent(object):
    time: float
    quad: int
    propellers: frozenset[int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "propellers", frozenset(self.propellers))
        if self.quad not in range(4):
            raise ValueError(f"Failure quad must be 0..3, got {self.quad}")
        if not self.propellers:
            raise ValueError("A failure event needs at least one propeller")
        classify_failure(self.propellers)
        if self.time < 0.0:
            raise ValueError("Failure time must be non-negative")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FailureEvent":
        return cls(float(data["time"]), int(data["quad"]), frozenset(int(j) for j in data["propellers"]))


@dataclass(frozen=True)
class ControllerVariant(object):
    allocation: AllocationMethod = AllocationMethod.FD
    lowlevel: LowLevelVariant = LowLevelVariant.REDUCED_28
    compensation: bool = False

    @property
    def label(self) -> str:
        parts = [self.allocation.value, self.lowlevel.value]
        if self.compensation:
            parts.append("comp")
        return "+".join(parts)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ControllerVariant":
        return cls(
            allocation=AllocationMethod(data.get("allocation", "FD")),
            lowlevel=LowLevelVariant(data.get("lowlevel", "Reduced28")),
            compensation=bool(data.get("compensation", False)),
        )


@dataclass(frozen=True)
class Scenario(object):
    """
    A reproducible run: trajectory, failures, controller variant and seed.
    ``params`` overrides platform constants for this run only.
    ``expect_stable`` is what the scenario is meant to show, if anything.
    """

    name: str
    duration: float
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    failures: tuple[FailureEvent, ...] = ()
    variant: ControllerVariant = field(default_factory=ControllerVariant)
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    description: str = ""
    expect_stable: bool | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("Scenario needs a name")
        if self.duration <= 0.0:
            raise ValueError(f"Scenario {self.name}: duration must be positive")
        object.__setattr__(self, "failures", tuple(sorted(self.failures, key=lambda e: e.time)))

    @classmethod
    def from_dict(cls, name: str, data: dict[str, Any]) -> "Scenario":
        try:
            return cls(
                name=name,
                duration=float(data["duration"]),
                trajectory=TrajectorySpec.from_dict(data.get("trajectory", {})),
                failures=tuple(FailureEvent.from_dict(f) for f in data.get("failures", [])),
                variant=ControllerVariant.from_dict(data.get("variant", {})),
                seed=int(data.get("seed", 0)),
                params=dict(data.get("params", {})),
                description=str(data.get("description", "")),
                expect_stable=data.get("expect_stable"),
            )
        except KeyError as e:
            raise ValueError(f"Scenario {name}: missing key {e}") from e

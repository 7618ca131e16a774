"""
This module holds the tuning of the controllers, the allocator and the compensator.
"""
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray


def _triple(value: Any, name: str) -> tuple[float, float, float]:
    if isinstance(value, (int, float)):
        value = [value] * 3
    values = tuple(float(v) for v in value)
    if len(values) != 3:
        raise ValueError(f"{name} needs one value or three, got {len(values)}")
    return values  # type: ignore[return-value]


@dataclass(frozen=True)
class LqiWeights(object):
    """
    Diagonal LQI weights, one value per axis.

    The defaults place the closed-loop poles of every axis chain: roll and
    pitch at -2.5 and -4 +/- 4j, position and yaw at -2 and -3 +/- 3j. Axes
    that act through the hinges are kept slower than the hinge loop.
    """

    q_pos: tuple[float, float, float] = (324.0, 324.0, 324.0)
    q_att: tuple[float, float, float] = (1024.0, 1024.0, 324.0)
    q_vel: tuple[float, float, float] = (4.0, 4.0, 4.0)
    q_rate: tuple[float, float, float] = (6.25, 6.25, 4.0)
    q_int_pos: tuple[float, float, float] = (1296.0, 1296.0, 1296.0)
    q_int_att: tuple[float, float, float] = (6400.0, 6400.0, 1296.0)
    r_force: tuple[float, float, float] = (1.0, 1.0, 1.0)
    r_torque: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        for name in ("q_pos", "q_att", "q_vel", "q_rate", "q_int_pos", "q_int_att", "r_force", "r_torque"):
            values = _triple(getattr(self, name), name)
            if any(v < 0.0 or not math.isfinite(v) for v in values):
                raise ValueError(f"{name} must be non-negative")
            if name.startswith("r_") and any(v == 0.0 for v in values):
                raise ValueError(f"{name} must be strictly positive")
            object.__setattr__(self, name, values)

    @property
    def has_integral(self) -> bool:
        return any(v > 0.0 for v in self.q_int_pos + self.q_int_att)

    def Q(self) -> NDArray[np.float64]:
        """18x18 state weight in the order [e_xi, e_eta, de_xi, de_eta, int e_xi, int e_eta]."""
        return np.diag(self.q_pos + self.q_att + self.q_vel + self.q_rate + self.q_int_pos + self.q_int_att)

    def R(self) -> NDArray[np.float64]:
        return np.diag(self.r_force + self.r_torque)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LqiWeights":
        return cls(**{key: _triple(value, key) for key, value in data.items()})


@dataclass(frozen=True)
class PidGains(object):
    """
    Hinge PID gains. The defaults give the hinge loop a natural frequency
    of 50 rad/s with damping 0.9 on a 1.6e-5 kg*m^2 quadcopter.
    """

    k_P: float = 0.04
    k_I: float = 0.2
    k_D: float = 1.44e-3

    def __post_init__(self) -> None:
        for name in ("k_P", "k_I", "k_D"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be non-negative, got {value}")


@dataclass(frozen=True)
class AllocationSettings(object):
    """
    Weights and limits of the nullspace allocator. ``Z_weight`` pulls the
    nullspace coordinates toward the least-norm forces; zero disables it.
    """

    P_weight: float = 1.0
    Q_weight: float = 1e3
    Z_weight: float = 1.0
    alpha_limit: float = math.pi / 2
    d_alpha_max: float = 0.1
    d_T_max: float = 0.2

    def __post_init__(self) -> None:
        if self.P_weight <= 0.0 or self.Q_weight <= 0.0:
            raise ValueError("Allocation weights must be strictly positive")
        if not (math.isfinite(self.Z_weight) and self.Z_weight >= 0.0):
            raise ValueError(f"Z_weight must be non-negative, got {self.Z_weight}")
        if not 0.0 < self.alpha_limit <= math.pi / 2:
            raise ValueError("alpha_limit must lie in (0, pi/2]")
        if self.d_alpha_max <= 0.0 or self.d_T_max <= 0.0:
            raise ValueError("Rate limits must be strictly positive")

    @property
    def P(self) -> NDArray[np.float64]:
        return self.P_weight * np.eye(8)

    @property
    def Q(self) -> NDArray[np.float64]:
        return self.Q_weight * np.eye(8)


@dataclass(frozen=True)
class CompensationSettings(object):
    """Weights of the compensation QP: A on auxiliary torques, B on the residual."""

    A_weight: float = 1.0
    B_weight: float = 1e4

    def __post_init__(self) -> None:
        if self.A_weight <= 0.0 or self.B_weight <= 0.0:
            raise ValueError("Compensation weights must be strictly positive")

    @property
    def A(self) -> NDArray[np.float64]:
        return self.A_weight * np.eye(6)

    @property
    def B(self) -> NDArray[np.float64]:
        return self.B_weight * np.eye(3)

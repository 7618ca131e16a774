"""
This module contains the PlatformState class, the full simulated state of the vehicle.
"""
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.transform import Rotation

from classes.platform_params import PlatformParams


def _vector(value: NDArray[np.float64] | list[float], size: int, name: str) -> NDArray[np.float64]:
    array = np.asarray(value, dtype=float).reshape(-1)
    if array.shape != (size,):
        raise ValueError(f"{name} must have {size} entries, got {array.shape}")
    return array


@dataclass(eq=False)
class PlatformState(object):
    """
    State of the platform and its four hinged quadcopters.

    ``attitude_q`` is a unit quaternion in scipy's scalar-last order
    (x, y, z, w). ``eta`` is the ZYX (roll, pitch, yaw) view of it.
    ``prop_thrust`` holds the thrust each propeller currently delivers,
    row i for quadcopter i; the simulator only evolves it with motor lag.
    """

    xi: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    attitude_q: NDArray[np.float64] = field(default_factory=lambda: np.array([0.0, 0.0, 0.0, 1.0]))
    xi_dot: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    nu: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    alpha: NDArray[np.float64] = field(default_factory=lambda: np.zeros(4))
    alpha_dot: NDArray[np.float64] = field(default_factory=lambda: np.zeros(4))
    prop_thrust: NDArray[np.float64] = field(default_factory=lambda: np.zeros((4, 4)))

    def __post_init__(self) -> None:
        self.xi = _vector(self.xi, 3, "xi")
        self.xi_dot = _vector(self.xi_dot, 3, "xi_dot")
        self.nu = _vector(self.nu, 3, "nu")
        self.alpha = _vector(self.alpha, 4, "alpha")
        self.alpha_dot = _vector(self.alpha_dot, 4, "alpha_dot")
        q = _vector(self.attitude_q, 4, "attitude_q")
        norm = np.linalg.norm(q)
        if norm == 0.0:
            raise ValueError("attitude_q must be non-zero")
        self.attitude_q = q / norm
        self.prop_thrust = np.asarray(self.prop_thrust, dtype=float).reshape(4, 4)

    @property
    def rotation(self) -> Rotation:
        return Rotation.from_quat(self.attitude_q)

    @property
    def eta(self) -> NDArray[np.float64]:
        """Roll, pitch, yaw (ZYX convention)."""
        return self.rotation.as_euler("xyz")

    def is_finite(self) -> bool:
        return all(
            bool(np.all(np.isfinite(v)))
            for v in (self.xi, self.attitude_q, self.xi_dot, self.nu, self.alpha, self.alpha_dot)
        )

    def copy(self, **changes: object) -> "PlatformState":
        return replace(self, **changes)

    @classmethod
    def from_euler(cls, eta: NDArray[np.float64] | list[float], **kwargs: object) -> "PlatformState":
        return cls(attitude_q=Rotation.from_euler("xyz", eta).as_quat(), **kwargs)  # type: ignore[arg-type]

    @classmethod
    def hover(cls, params: PlatformParams) -> "PlatformState":
        """Level platform at the origin, every propeller at its hover share."""
        return cls(prop_thrust=np.full((4, 4), params.hover_thrust / 4))

"""
This module stores the physical constants of the hinged-quadcopter platform.
"""
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

# Quadcopter centres in the body frame, in units of the arm length l.
# Quads 0 and 2 sit on the y axis (they roll the frame), 1 and 3 on the x axis.
QUAD_DIRECTIONS = np.array(
    [
        [0.0, -1.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0],
    ]
)


def _inertia(value: Any, name: str) -> NDArray[np.float64]:
    """Accept a 3x3 matrix or the diagonal of one."""
    matrix = np.asarray(value, dtype=float)
    if matrix.shape == (3,):
        matrix = np.diag(matrix)
    if matrix.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3 or a 3-vector diagonal, got {matrix.shape}")
    if not np.allclose(matrix, matrix.T, atol=1e-15):
        raise ValueError(f"{name} must be symmetric")
    if np.any(np.linalg.eigvalsh(matrix) <= 0.0):
        raise ValueError(f"{name} must be positive definite")
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class PlatformParams(object):
    """
    Physical and software constants of the platform.

    Masses, inertias, arm length, thrust limit and delay default to the
    vehicle's simulation table. The quadcopter arm length ``a`` and the
    drag-to-thrust ratio ``c_tau`` are not published; the defaults are
    Crazyflie-class values.

    All values are SI. The derived ``m_total``, ``I_total`` and ``b`` are
    computed, never passed in.
    """

    m_frame: float = 0.036
    m_quad: float = 0.027
    I_frame: NDArray[np.float64] = field(
        default_factory=lambda: np.diag([3.0, 3.0, 4.5]) * 1e-4
    )
    I_quad: NDArray[np.float64] = field(
        default_factory=lambda: np.diag([0.16, 0.16, 0.29]) * 1e-4
    )
    l: float = 0.14
    a: float = 0.046
    c_tau: float = 0.006
    t_max: float = 0.167
    g: float = 9.81
    comm_delay: float = 0.02
    hl_rate: float = 100.0
    ll_rate: float = 500.0

    m_total: float = field(init=False)
    I_total: NDArray[np.float64] = field(init=False)
    b: float = field(init=False)

    def __post_init__(self) -> None:
        for name in ("m_frame", "m_quad", "l", "a", "c_tau", "t_max", "g", "hl_rate", "ll_rate"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if not (math.isfinite(self.comm_delay) and self.comm_delay >= 0.0):
            raise ValueError(f"comm_delay must be non-negative, got {self.comm_delay}")

        object.__setattr__(self, "I_frame", _inertia(self.I_frame, "I_frame"))
        object.__setattr__(self, "I_quad", _inertia(self.I_quad, "I_quad"))
        object.__setattr__(self, "m_total", self.m_frame + 4 * self.m_quad)
        object.__setattr__(self, "b", self.a / math.sqrt(2.0))

        # Parallel-axis contribution of the four quadcopters.
        inertia = self.I_frame + 4 * self.I_quad
        for direction in QUAD_DIRECTIONS:
            d = self.l * direction
            inertia = inertia + self.m_quad * (np.dot(d, d) * np.eye(3) - np.outer(d, d))
        inertia.setflags(write=False)
        object.__setattr__(self, "I_total", inertia)

    @property
    def I_hinge(self) -> float:
        """Quadcopter inertia about its hinge axis (y of the quad frame)."""
        return float(self.I_quad[1, 1])

    @property
    def gravity(self) -> NDArray[np.float64]:
        """World-frame gravitational acceleration G."""
        return np.array([0.0, 0.0, -self.g])

    @property
    def hover_thrust(self) -> float:
        """Per-quadcopter thrust that holds the level platform in hover."""
        return self.m_total * self.g / 4

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PlatformParams":
        """
        Build the parameters from a config section. Keys are the field names;
        derived fields are rejected.
        """
        allowed = {"m_frame", "m_quad", "I_frame", "I_quad", "l", "a", "c_tau",
                   "t_max", "g", "comm_delay", "hl_rate", "ll_rate"}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"Unknown parameter keys: {sorted(unknown)}")
        values = {key: (value if key.startswith("I_") else float(value)) for key, value in data.items()}
        return cls(**values)

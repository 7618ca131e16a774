"""
This module contains the WrenchCommand class, the body-frame force and torque demand.
"""
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


@dataclass(eq=False)
class WrenchCommand(object):
    """Body-frame force (N) and torque (N*m) requested from the allocator."""

    force: NDArray[np.float64]
    torque: NDArray[np.float64]

    def __post_init__(self) -> None:
        self.force = np.asarray(self.force, dtype=float).reshape(3)
        self.torque = np.asarray(self.torque, dtype=float).reshape(3)

    def as_vector(self) -> NDArray[np.float64]:
        return np.concatenate([self.force, self.torque])

    @classmethod
    def from_vector(cls, u: NDArray[np.float64] | list[float]) -> "WrenchCommand":
        u = np.asarray(u, dtype=float).reshape(6)
        return cls(force=u[:3], torque=u[3:])

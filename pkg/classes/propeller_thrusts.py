"""
This module contains the PropellerThrusts class.
"""
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


@dataclass(eq=False)
class PropellerThrusts(object):
    """
    The four propeller thrusts of one quadcopter, already clamped to
    [0, t_max]. ``saturated`` tells whether the clamp changed anything.
    """

    t: NDArray[np.float64]
    saturated: bool = False

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=float).reshape(4)

    @classmethod
    def clamped(cls, raw: NDArray[np.float64], t_max: float, tol: float = 1e-12) -> "PropellerThrusts":
        raw = np.asarray(raw, dtype=float).reshape(4)
        saturated = bool(np.any(raw < -tol) or np.any(raw > t_max + tol))
        return cls(np.clip(raw, 0.0, t_max), saturated)

    @classmethod
    def zeros(cls) -> "PropellerThrusts":
        return cls(np.zeros(4))

"""
This module contains the AllocationLimits class, the box and rate limits on the
allocator's inputs X = [alpha; T].
"""
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from classes.platform_params import PlatformParams


@dataclass(eq=False)
class AllocationLimits(object):
    T_min: NDArray[np.float64]
    T_max: NDArray[np.float64]
    alpha_min: NDArray[np.float64]
    alpha_max: NDArray[np.float64]
    dX_max: NDArray[np.float64]

    def __post_init__(self) -> None:
        self.T_min = np.asarray(self.T_min, dtype=float).reshape(4)
        self.T_max = np.asarray(self.T_max, dtype=float).reshape(4)
        self.alpha_min = np.asarray(self.alpha_min, dtype=float).reshape(4)
        self.alpha_max = np.asarray(self.alpha_max, dtype=float).reshape(4)
        self.dX_max = np.asarray(self.dX_max, dtype=float).reshape(8)
        if np.any(self.T_min > self.T_max) or np.any(self.alpha_min > self.alpha_max):
            raise ValueError("Allocation limits have min above max")
        if np.any(self.dX_max <= 0.0):
            raise ValueError("Rate limits must be positive")

    @property
    def X_min(self) -> NDArray[np.float64]:
        return np.concatenate([self.alpha_min, self.T_min])

    @property
    def X_max(self) -> NDArray[np.float64]:
        return np.concatenate([self.alpha_max, self.T_max])

    def with_T_max(self, T_max: NDArray[np.float64]) -> "AllocationLimits":
        return AllocationLimits(self.T_min.copy(), np.asarray(T_max, dtype=float),
                                self.alpha_min.copy(), self.alpha_max.copy(), self.dX_max.copy())

    @classmethod
    def default(
        cls,
        params: PlatformParams,
        alpha_limit: float = math.pi / 2,
        d_alpha_max: float = 0.1,
        d_T_max: float = 0.2,
    ) -> "AllocationLimits":
        return cls(
            T_min=np.zeros(4),
            T_max=np.full(4, 4 * params.t_max),
            alpha_min=np.full(4, -alpha_limit),
            alpha_max=np.full(4, alpha_limit),
            dX_max=np.concatenate([np.full(4, d_alpha_max), np.full(4, d_T_max)]),
        )


@dataclass(eq=False)
class ThrustLimitsOutcome(object):
    """Thrust limits after a failure update, and whether the vehicle is lost."""

    limits: AllocationLimits
    platform_failed: bool = False
    disabled: frozenset[int] = frozenset()

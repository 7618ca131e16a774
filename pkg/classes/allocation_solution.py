"""
This module contains the AllocationSolution class.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from classes.qp_problem import QpStatus
from classes.wrench_command import WrenchCommand


@dataclass(eq=False)
class AllocationSolution(object):
    """
    Hinge angles and thrusts chosen by an allocator, the propeller-force
    vector behind them and the wrench that vector produces.
    """

    alpha: NDArray[np.float64]
    T: NDArray[np.float64]
    F: NDArray[np.float64]
    u_achieved: WrenchCommand
    slack_norm: float = 0.0
    constrained: bool = False
    qp_status: QpStatus | None = None
    delta_X: NDArray[np.float64] = field(default_factory=lambda: np.zeros(8))
    active_set: list[int] = field(default_factory=list)

    @property
    def X(self) -> NDArray[np.float64]:
        return np.concatenate([self.alpha, self.T])

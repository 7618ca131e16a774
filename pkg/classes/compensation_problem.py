"""
This module contains the inputs and outputs of the torque-compensation problem.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from classes.qp_problem import QpStatus


@dataclass(eq=False)
class CompensationProblem(object):
    """
    One Bad quadcopter ``bad`` leaks ``disturbance`` = (Mx, Mz); the three
    other quadcopters (in increasing index order) get auxiliary torques.
    ``T`` and ``My_good`` are the Good quadcopters' current commands.
    """

    alpha: NDArray[np.float64]
    bad: int
    disturbance: tuple[float, float]
    T: NDArray[np.float64]
    My_good: NDArray[np.float64]
    t_max: float
    b: float
    c_tau: float
    A: NDArray[np.float64] = field(default_factory=lambda: np.eye(6))
    B: NDArray[np.float64] = field(default_factory=lambda: 1e4 * np.eye(3))

    def __post_init__(self) -> None:
        if self.bad not in range(4):
            raise ValueError(f"bad must be a quadcopter index, got {self.bad}")
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(4)
        self.T = np.asarray(self.T, dtype=float).reshape(3)
        self.My_good = np.asarray(self.My_good, dtype=float).reshape(3)
        self.A = np.asarray(self.A, dtype=float).reshape(6, 6)
        self.B = np.asarray(self.B, dtype=float).reshape(3, 3)

    @property
    def good(self) -> list[int]:
        return [i for i in range(4) if i != self.bad]


@dataclass(eq=False)
class CompensationResult(object):
    Mx_aux: NDArray[np.float64]
    Mz_aux: NDArray[np.float64]
    residual: NDArray[np.float64]
    status: QpStatus

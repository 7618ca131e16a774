"""
This module contains the containers exchanged with the quadratic-program solver.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import NDArray


class QpStatus(Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"


@dataclass(eq=False)
class QpProblem(object):
    """
    min 1/2 x'Hx + g'x  s.t.  A_eq x = b_eq,  A_in x <= b_in,  lb <= x <= ub.

    Missing constraint blocks are empty; infinite bounds are ignored.
    """

    H: NDArray[np.float64]
    g: NDArray[np.float64]
    A_eq: NDArray[np.float64] | None = None
    b_eq: NDArray[np.float64] | None = None
    A_in: NDArray[np.float64] | None = None
    b_in: NDArray[np.float64] | None = None
    lb: NDArray[np.float64] | None = None
    ub: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        n = self.H.shape[0]
        if self.H.shape != (n, n):
            raise ValueError(f"H must be square, got {self.H.shape}")
        self.g = np.asarray(self.g, dtype=float).reshape(n)
        if self.A_eq is None:
            self.A_eq, self.b_eq = np.zeros((0, n)), np.zeros(0)
        if self.A_in is None:
            self.A_in, self.b_in = np.zeros((0, n)), np.zeros(0)
        self.A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        self.A_in = np.asarray(self.A_in, dtype=float).reshape(-1, n)
        self.b_in = np.asarray(self.b_in, dtype=float).reshape(-1)
        if self.A_eq.shape[0] != self.b_eq.shape[0] or self.A_in.shape[0] != self.b_in.shape[0]:
            raise ValueError("Constraint matrices and right-hand sides disagree in size")
        self.lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float).reshape(n)
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).reshape(n)
        if np.any(self.lb > self.ub):
            raise ValueError("Lower bounds exceed upper bounds")

    @property
    def n(self) -> int:
        return int(self.H.shape[0])


@dataclass(eq=False)
class QpSolution(object):
    x: NDArray[np.float64]
    status: QpStatus
    iterations: int = 0
    kkt_residual: float = float("inf")
    active_set: list[int] = field(default_factory=list)
    multipliers: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    @property
    def ok(self) -> bool:
        return self.status is QpStatus.OPTIMAL

"""
This module contains the LqiState class, the memory of the high-level controller.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray


@dataclass(eq=False)
class LqiState(object):
    """
    Gain matrix and error integrals of the LQI controller. The integrals use
    the trapezoidal rule, so the previous errors are kept as well.
    """

    K: NDArray[np.float64]
    integral_e_xi: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    integral_e_eta: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    prev_e_xi: NDArray[np.float64] | None = None
    prev_e_eta: NDArray[np.float64] | None = None

    def reset(self) -> None:
        self.integral_e_xi = np.zeros(3)
        self.integral_e_eta = np.zeros(3)
        self.prev_e_xi = None
        self.prev_e_eta = None

"""
This module contains the LowLevelState class, the memory of the four on-board controllers.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from classes.controller_settings import PidGains
from classes.failure_status import FailureStatus


@dataclass(eq=False)
class LowLevelState(object):
    """
    Hinge PID gains, per-quadcopter integrator memory and the failure
    status each quadcopter currently flies with.
    """

    gains: PidGains
    integral_e_alpha: NDArray[np.float64] = field(default_factory=lambda: np.zeros(4))
    failures: list[FailureStatus] = field(default_factory=lambda: [FailureStatus() for _ in range(4)])
    saturated: NDArray[np.bool_] = field(default_factory=lambda: np.zeros(4, dtype=bool))

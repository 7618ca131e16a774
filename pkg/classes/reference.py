"""
This module contains the Reference class, one sample of the desired trajectory.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray


def _zeros() -> NDArray[np.float64]:
    return np.zeros(3)


@dataclass(eq=False)
class Reference(object):
    """Position, attitude and their derivatives at time ``t``. Rates are body-frame."""

    t: float = 0.0
    xi_r: NDArray[np.float64] = field(default_factory=_zeros)
    xi_dot_r: NDArray[np.float64] = field(default_factory=_zeros)
    xi_ddot_r: NDArray[np.float64] = field(default_factory=_zeros)
    eta_r: NDArray[np.float64] = field(default_factory=_zeros)
    nu_r: NDArray[np.float64] = field(default_factory=_zeros)
    nu_dot_r: NDArray[np.float64] = field(default_factory=_zeros)

    def __post_init__(self) -> None:
        for name in ("xi_r", "xi_dot_r", "xi_ddot_r", "eta_r", "nu_r", "nu_dot_r"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))

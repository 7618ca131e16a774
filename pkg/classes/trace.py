"""
This module contains the Trace class, the time series recorded during a run.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray


def _zeros(n: int):  # type: ignore[no-untyped-def]
    return field(default_factory=lambda: np.zeros(n))


@dataclass(eq=False)
class TraceSample(object):
    """
    One high-level tick. Disturbance and auxiliary torques are those of the
    most recent low-level tick; ``sat_flags`` has bit i set when quadcopter
    i saturated at least once since the previous sample.
    """

    t: float
    xi: NDArray[np.float64] = _zeros(3)
    eta: NDArray[np.float64] = _zeros(3)
    xi_r: NDArray[np.float64] = _zeros(3)
    eta_r: NDArray[np.float64] = _zeros(3)
    alpha: NDArray[np.float64] = _zeros(4)
    T: NDArray[np.float64] = _zeros(4)
    t_prop: NDArray[np.float64] = field(default_factory=lambda: np.zeros((4, 4)))
    Mx_dist: float = 0.0
    Mz_dist: float = 0.0
    Mx_aux: NDArray[np.float64] = _zeros(3)
    Mz_aux: NDArray[np.float64] = _zeros(3)
    sat_flags: int = 0
    u_d: NDArray[np.float64] = _zeros(6)
    finite: bool = True


@dataclass(eq=False)
class Trace(object):
    samples: list[TraceSample] = field(default_factory=list)
    physics_ticks: int = 0
    ll_ticks: int = 0
    hl_ticks: int = 0
    ll_saturated_ticks: int = 0
    failure_times: list[float] = field(default_factory=list)
    diverged: bool = False
    divergence_time: float | None = None
    divergence_reason: str = ""

    def append(self, sample: TraceSample) -> None:
        self.samples.append(sample)

    def mark_diverged(self, t: float, reason: str) -> None:
        if not self.diverged:
            self.diverged = True
            self.divergence_time = t
            self.divergence_reason = reason

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> NDArray[np.float64]:
        return np.array([s.t for s in self.samples])

    def stack(self, name: str) -> NDArray[np.float64]:
        """All samples of one field stacked along the first axis."""
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    @property
    def first_failure_time(self) -> float | None:
        return min(self.failure_times) if self.failure_times else None

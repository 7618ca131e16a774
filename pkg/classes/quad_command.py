"""
This module contains the QuadCommand class, the message sent from the high-level
controller to one quadcopter.
"""
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class QuadCommand(object):
    """
    Collective thrust and hinge-angle reference for one quadcopter, plus the
    auxiliary torques a Good quadcopter adds to compensate a damaged one.

    ``T_max`` is the thrust the sender guarantees, normally 4 t_max or the
    reduced capacity after a failure. The nominal force decomposition sends
    its demand unbounded (``T_max`` left infinite): an over-range demand then
    reaches the mixer, which saturates per propeller and reports it.
    """

    T: float
    alpha_ref: float
    Mx_aux: float = 0.0
    Mz_aux: float = 0.0
    T_max: float = math.inf

    def __post_init__(self) -> None:
        for name in ("T", "alpha_ref", "Mx_aux", "Mz_aux"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"QuadCommand.{name} must be finite")
        if self.T < 0.0:
            raise ValueError(f"QuadCommand.T must be non-negative, got {self.T}")
        if self.T_max < 0.0 or math.isnan(self.T_max):
            raise ValueError(f"QuadCommand.T_max must be non-negative, got {self.T_max}")
        if self.T > self.T_max:
            raise ValueError(f"QuadCommand.T = {self.T} exceeds its limit {self.T_max}")

    def with_aux(self, Mx_aux: float, Mz_aux: float) -> "QuadCommand":
        return QuadCommand(self.T, self.alpha_ref, Mx_aux, Mz_aux, self.T_max)

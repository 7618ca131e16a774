"""
This module contains the SimConfig class, the settings of the simulation loop.
"""
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SimConfig(object):
    """
    Integration step, sensor noise (standard deviations), link delay and
    divergence policy of a simulation run.
    """

    dt_physics: float = 1e-3
    noise_position: float = 1e-3
    noise_attitude: float = math.radians(0.2)
    noise_rate: float = 0.01
    comm_delay: float = 0.02
    seed: int = 0
    include_gyroscopic: bool = True
    motor_tau: float = 0.0
    stop_on_divergence: bool = True
    pos_threshold: float = 1.0
    att_threshold: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt_physics) and self.dt_physics > 0.0):
            raise ValueError(f"dt_physics must be positive, got {self.dt_physics}")
        for name in ("noise_position", "noise_attitude", "noise_rate", "comm_delay", "motor_tau"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        if self.pos_threshold <= 0.0 or self.att_threshold <= 0.0:
            raise ValueError("Divergence thresholds must be positive")

    @property
    def delay_steps(self) -> int:
        return int(round(self.comm_delay / self.dt_physics))

    @property
    def noiseless(self) -> bool:
        return self.noise_position == 0.0 and self.noise_attitude == 0.0 and self.noise_rate == 0.0

"""
This module contains the Metrics class, the summary of one run.
"""
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Metrics(object):
    rmse_pos: float
    rmse_att: float
    max_pos_err: float
    stable: bool
    divergence_time: float | None
    saturation_fraction: float
    window_start: float = 1.0

    def to_dict(self) -> dict[str, float | bool | None]:
        return asdict(self)

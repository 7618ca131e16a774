"""
This module describes propeller failures and the low-level strategy each one selects.
"""
from dataclasses import dataclass, field
from enum import Enum

# Propellers sharing a sign in the My row of the mixing matrix.
MY_SIGNS = (1, -1, -1, 1)


class Strategy(Enum):
    NOMINAL = "Nominal"
    ONE_FAIL = "OneFail"
    TWO_FAIL = "TwoFail"
    QUAD_LOST = "QuadLost"


def classify_failure(failed: frozenset[int] | set[int]) -> Strategy:
    """
    Map a set of failed propeller indices to the control strategy.

    Two failures are survivable only when they hit propellers of opposite My
    sign; {0, 3} and {1, 2} leave no pitch authority and lose the quadcopter.
    """
    failed = frozenset(failed)
    if any(j not in range(4) for j in failed):
        raise ValueError(f"Propeller indices must be in 0..3, got {sorted(failed)}")
    if not failed:
        return Strategy.NOMINAL
    if len(failed) == 1:
        return Strategy.ONE_FAIL
    if len(failed) == 2:
        j, k = sorted(failed)
        if MY_SIGNS[j] == MY_SIGNS[k]:
            return Strategy.QUAD_LOST
        return Strategy.TWO_FAIL
    return Strategy.QUAD_LOST


@dataclass(frozen=True)
class FailureStatus(object):
    """Failed propellers of one quadcopter; the strategy is derived from them."""

    failed: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "failed", frozenset(self.failed))
        classify_failure(self.failed)

    @property
    def strategy(self) -> Strategy:
        return classify_failure(self.failed)

    @property
    def is_bad(self) -> bool:
        """A Bad quadcopter still flies but cannot control all of its torques."""
        return self.strategy in (Strategy.ONE_FAIL, Strategy.TWO_FAIL)

    def with_failure(self, propellers: set[int] | frozenset[int]) -> "FailureStatus":
        return FailureStatus(self.failed | frozenset(propellers))

    def __str__(self) -> str:
        if not self.failed:
            return "Nominal"
        return f"{self.strategy.value}{sorted(self.failed)}"

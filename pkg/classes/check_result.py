"""
This module contains the CheckResult class, one line of the verify report.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class CheckResult(object):
    number: int
    name: str
    passed: bool
    detail: str = ""
    runtime: float = 0.0

"""Deterministic simulator and history checker for tunable causal consistency."""

from .core import BOTTOM, Certificate, Event, History, Level, Operation, VectorClock, eval_register

__version__ = "0.1.0"

__all__ = [
    "BOTTOM",
    "Certificate",
    "Event",
    "History",
    "Level",
    "Operation",
    "VectorClock",
    "eval_register",
]

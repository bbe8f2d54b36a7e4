"""Dynamics, stability and steering control of a rolling wheel and a point-mass unicycle."""

from .dynamics import TABLE_I, PhysicalParams, unicycle_rhs, wheel_rhs
from .errors import SolverError, UnidynError, ValidationError

__all__ = ["TABLE_I", "PhysicalParams", "SolverError", "UnidynError", "ValidationError", "unicycle_rhs", "wheel_rhs"]
__version__ = "0.1.0"

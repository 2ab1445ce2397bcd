"""Passive compass-gait walking and continuation of optimal gait families.

The package computes passive (zero-torque) periodic gaits of a planar
two-link walker with impulsive foot-ground impacts, then traces continuous
families of energetically optimal actuated gaits by pseudo-arclength
continuation of the first-order optimality system, seeded at the passive
gaits.
"""

from .dynamics import ModelParams, TrajectoryPoint

__version__ = "0.1.0"

__all__ = ["ModelParams", "TrajectoryPoint", "__version__"]

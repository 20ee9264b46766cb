"""Boundary velocity of two annihilating one-dimensional particle flows.

Closed-form theory (``analytic``, ``faces``), the piecewise-linear fluid
dynamics of the gap process (``flow``), event-driven Monte Carlo (``sim``)
and the estimators that compare the two (``stats``).
"""

from .analytic import Group, Regime, balance_root, boundary_velocity, build_chain, group_velocity
from .faces import Face, final_face, induced_vector, minimal_outgoing_face
from .flow import FlowStatus, integrate_flow
from .params import Spacing, SystemParams, validate_params
from .sim import scaled_distance_path, simulate
from .stats import compare_to_theory, estimate_boundary_speed, estimate_collision_rates

__all__ = [
    "Face",
    "FlowStatus",
    "Group",
    "Regime",
    "Spacing",
    "SystemParams",
    "balance_root",
    "boundary_velocity",
    "build_chain",
    "compare_to_theory",
    "estimate_boundary_speed",
    "estimate_collision_rates",
    "final_face",
    "group_velocity",
    "induced_vector",
    "integrate_flow",
    "minimal_outgoing_face",
    "scaled_distance_path",
    "simulate",
    "validate_params",
]

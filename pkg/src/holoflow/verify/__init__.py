"""Evolution-equation residuals, commutator checks, inequality monitors and scenario experiments."""
from .system import SystemState, build_system_state
from .residuals import (
    EQUATIONS,
    ResidualReport,
    check_commutators,
    commutator_refinement,
    refinement_study,
    residual_evolution,
)

__all__ = [
    "EQUATIONS",
    "ResidualReport",
    "SystemState",
    "build_system_state",
    "check_commutators",
    "commutator_refinement",
    "refinement_study",
    "residual_evolution",
]

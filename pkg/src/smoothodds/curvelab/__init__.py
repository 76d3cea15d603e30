from .curves import (
    QUARTIC_P_RANGE,
    CurveParams,
    area,
    construct,
    derivative,
    eval_phi,
    lipschitz,
    normalized_area,
    normalized_coefficients,
    normalized_lipschitz,
    quartic_inflection,
    tau,
)
from .systems import ConstraintSystem, CurveFamily, Solution, build_system, solve_exact, solve_system
from .verify import Check, VerificationReport, verify_constraints

__all__ = [
    "QUARTIC_P_RANGE",
    "Check",
    "ConstraintSystem",
    "CurveFamily",
    "CurveParams",
    "Solution",
    "VerificationReport",
    "area",
    "build_system",
    "construct",
    "derivative",
    "eval_phi",
    "lipschitz",
    "normalized_area",
    "normalized_coefficients",
    "normalized_lipschitz",
    "quartic_inflection",
    "solve_exact",
    "solve_system",
    "tau",
    "verify_constraints",
]

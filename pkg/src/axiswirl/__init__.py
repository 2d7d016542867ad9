"""Self-similar swirling solutions of the 2-D compressible Euler equations.

Typical use::

    from axiswirl import GasModel, FarFieldDatum, solve, evaluate
    sol = solve(GasModel(1.4), FarFieldDatum(1.0, 0.0, 1.0))
    sol.case, evaluate(sol, 1.0)
"""

__version__ = "0.1.0"

from .errors import (
    AssemblyError,
    AxiswirlError,
    ClassificationError,
    DomainError,
    InvariantBreach,
    SingularityError,
    ValidationError,
)
from .gas import FarFieldDatum, GasModel, PrimitiveState, sound_speed
from .pipeline import (
    CaseLabel,
    CriticalMach,
    PiecewiseSolution,
    critical_mach,
    evaluate,
    evaluate_many,
    predict_case,
    profile_table,
    sample_field,
    solve,
    solve_transitional,
)
from .verify import residual_check

__all__ = [
    "__version__",
    "AssemblyError",
    "AxiswirlError",
    "ClassificationError",
    "DomainError",
    "InvariantBreach",
    "SingularityError",
    "ValidationError",
    "FarFieldDatum",
    "GasModel",
    "PrimitiveState",
    "sound_speed",
    "CaseLabel",
    "CriticalMach",
    "PiecewiseSolution",
    "critical_mach",
    "evaluate",
    "evaluate_many",
    "predict_case",
    "profile_table",
    "sample_field",
    "solve",
    "solve_transitional",
    "residual_check",
]

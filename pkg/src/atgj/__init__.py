"""Adaptive-weight Gauss-Jacobi velocity quadrature with a DUGKS solver for
the reduced Shakhov model."""

__version__ = "0.1.0"

from .quadrature import (  # noqa: E402
    ParameterError,
    WeightParams,
    VelocitySet,
    build_velocity_set,
    newton_cotes_set,
    total_weight,
    weight_function,
)
from .kinetic import GasModel, Macroscopics  # noqa: E402
from .solver import BoundaryCondition, Mesh2D, Solver, SolverConfig  # noqa: E402

__all__ = [
    "ParameterError",
    "WeightParams",
    "VelocitySet",
    "build_velocity_set",
    "newton_cotes_set",
    "total_weight",
    "weight_function",
    "GasModel",
    "Macroscopics",
    "BoundaryCondition",
    "Mesh2D",
    "Solver",
    "SolverConfig",
]

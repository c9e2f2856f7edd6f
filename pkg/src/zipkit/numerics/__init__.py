"""Dense linear algebra and ODE integrators used throughout zipkit."""
from .integrate import IntegratorConfig, Solution, dopri_step, integrate, rosenbrock_step
from .linalg import (det, eigenvalues, hermitian_inner, inf_norm, lu_factor, lu_solve,
                     lu_substitute, sort_spectrum)

__all__ = [
    "IntegratorConfig", "Solution", "integrate", "rosenbrock_step", "dopri_step",
    "det", "eigenvalues", "hermitian_inner", "inf_norm", "lu_factor", "lu_solve",
    "lu_substitute", "sort_spectrum",
]

from .assembly import Assembler, write_coo
from .p1 import (FeFunction, P1Space, assemble_p1, eval_p1, grad_p1, gradients,
                 harmonic_potential, prolong, restrict_dirichlet, values_at_quadrature)
from .quadrature import DEFAULT_DEGREE, QuadratureRule, physical_points, physical_weights, quadrature
from .rt import (RTSpace, assemble_rt_rhs, assemble_rt_system, div_rt, eval_rt, green_pairings,
                 rt_div_load)

__all__ = [
    "Assembler", "write_coo", "FeFunction", "P1Space", "assemble_p1", "eval_p1", "grad_p1",
    "gradients", "harmonic_potential", "prolong", "restrict_dirichlet", "values_at_quadrature",
    "DEFAULT_DEGREE", "QuadratureRule", "physical_points", "physical_weights", "quadrature",
    "RTSpace", "assemble_rt_rhs", "assemble_rt_system", "div_rt", "eval_rt", "green_pairings",
    "rt_div_load",
]

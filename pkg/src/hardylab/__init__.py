"""Numerical laboratory for weighted multilinear Hardy-Cesaro operators.

The package evaluates dilation-average operators of the form

    T(f_1,...,f_m)(x) = int_D prod_k f_k(s_k(t) x) psi(t) dt,

over D = [0,1]^n (Hardy-Cesaro type) or D = R_+^n (Hausdorff type), computes
the sharp constants governing their boundedness between weighted Lebesgue
and central Morrey spaces built from homogeneous weights, and reproduces the
extremal-family arguments that show those constants cannot be improved.
"""

__version__ = "0.1.0"

from .constants import SharpConstant, compute_constant
from .expr import Expr, classify, evaluate, parse
from .harness import (commutator_witness_check, morrey_extremal_check,
                      sharpness_sweep, upper_bound_fuzz)
from .kernels import (KernelSpec, Scenario, check_beta_condition,
                      check_morrey_balance, check_walpha_condition)
from .operators import OperatorInstance, apply, apply_radial_closed_form
from .quad import (QuadResult, SingularityHints, integrate_positive_orthant,
                   integrate_unit_cube)
from .spaces import (NormResult, RadialFunction, central_morrey_norm, cmo_norm,
                     log_bmo_check, lp_norm, make_witness_lp)
from .weights import Weight, isotropic

__all__ = [
    "__version__",
    "Expr", "parse", "evaluate", "classify",
    "Weight", "isotropic",
    "KernelSpec", "Scenario",
    "check_beta_condition", "check_walpha_condition", "check_morrey_balance",
    "QuadResult", "SingularityHints",
    "integrate_unit_cube", "integrate_positive_orthant",
    "RadialFunction", "NormResult",
    "lp_norm", "central_morrey_norm", "cmo_norm", "log_bmo_check",
    "make_witness_lp",
    "OperatorInstance", "apply", "apply_radial_closed_form",
    "SharpConstant", "compute_constant",
    "sharpness_sweep", "upper_bound_fuzz",
    "morrey_extremal_check", "commutator_witness_check",
]

"""Certified fixed points for gauge-weighted Suzuki-type contractions on
finite metric spaces, and a dynamic-programming application."""

__version__ = "0.1.0"

from .contraction import (
    CLASSES,
    ContractionCertificate,
    MultiMap,
    PreconditionError,
    certify,
    min_r,
    phi,
    t_int,
    t_m,
    t_psi,
    verify_lemma21,
    verify_lemma22,
)
from .dp import (
    Coupling,
    DPProblem,
    a_int,
    bellman_apply,
    check_condition_ii,
    lemma32_selection,
    solve_functional_equation,
    sup_norm,
    verify_lemma31,
)
from .gauge import Gauge, validate_gauge
from .metric import FiniteMetricSpace, hausdorff, point_to_set_distance
from .solver import (
    IterationTrace,
    UniquenessViolated,
    error_bound,
    fixed_point_residual,
    iterate_multivalued,
    iterate_single,
)

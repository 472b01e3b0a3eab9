"""Matrix-valued controlled dynamics driven by representations of quadratic algebras."""

from .dynamics import ControlPair, FitPairs, FixedPair, Scenario, ScheduledPairs, integrate, rk4_step
from .inverse import ScalarSystem, admissible_control, quantize, verify_round_trip
from .quadalgebra import QuadraticAlgebra, pbw_check, reduce_word, relation_polynomials
from .repcheck import (
    Family,
    equivalence_invariants,
    fit_algebra,
    project_onto_constraint,
    representation_residual,
    same_class,
)
from .symcalc import NCPolynomial, WeylSymbol, eval_nc, quantize_symbol, scalar_restrict, weyl_order

__version__ = "0.1.0"

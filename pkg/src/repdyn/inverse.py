"""Quantizing a scalar controlled system dx/dt = phi(x, u) into matrix dynamics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dynamics import ControlPair, FitPairs, PairMode, Scenario, Tolerances
from .matrixcore import as_matrix, as_matrix_tuple
from .repcheck import AdmissibilityReport, Family, fit_algebra
from .symcalc import WeylSymbol, commutative_collapse, eval_nc, quantize_symbol, scalar_restrict


class TemplateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ScalarSystem:
    m: int
    p: int
    phi: tuple
    constants: Mapping[str, complex] = field(default_factory=dict)

    def __post_init__(self):
        phi = tuple(self.phi)
        if len(phi) != self.m:
            raise TemplateError(f"{len(phi)} components for m={self.m}")
        for f in phi:
            if f.m != self.m or f.p != self.p:
                raise TemplateError(f"component {f} does not match m={self.m}, p={self.p}")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "constants", {k: complex(v) for k, v in dict(self.constants).items()})
        missing = set().union(*(f.labels() for f in phi)) - set(self.constants)
        if missing:
            raise TemplateError(f"no values for constants {sorted(missing)}")

    def __call__(self, x: Sequence, u: Sequence = ()) -> np.ndarray:
        return np.array([scalar_restrict(f, x, u, self.constants) for f in self.phi])


@dataclass(frozen=True, eq=False)
class DynamicsTemplate:
    """A representative dynamics still missing initial data and a time grid."""

    m: int
    n: int
    p: int
    symbols: tuple
    constants: Mapping[str, np.ndarray]
    const_mode: str = "scalar"

    def scenario(
        self,
        X0,
        t0: float,
        t1: float,
        h: float,
        pair_mode: PairMode | None = None,
        control: Sequence = (),
        **kwargs,
    ) -> Scenario:
        return Scenario(
            m=self.m,
            n=self.n,
            p=self.p,
            symbols=self.symbols,
            constants=self.constants,
            X0=X0,
            t0=t0,
            t1=t1,
            h=h,
            control=tuple(control),
            pair_mode=pair_mode or FitPairs(Family()),
            **kwargs,
        )


def quantize(
    sys: ScalarSystem,
    n: int,
    const_mode: str = "scalar",
    const_matrices: Mapping[str, object] | None = None,
) -> DynamicsTemplate:
    """The operator right-hand side is the Weyl ordering of phi itself.

    Constants become c * I in scalar mode; in matrix mode the supplied C
    matrices are used, defaulting to c * I for labels not given.
    """
    if n < 1:
        raise TemplateError("n must be >= 1")
    if const_mode not in ("scalar", "matrix"):
        raise TemplateError(f"unknown const_mode {const_mode!r}")
    eye = np.eye(n, dtype=complex)
    consts = {k: v * eye for k, v in sys.constants.items()}
    if const_mode == "matrix":
        for k, M in dict(const_matrices or {}).items():
            if k not in consts:
                raise TemplateError(f"matrix given for unknown constant {k!r}")
            M = as_matrix(M)
            if M.shape != (n, n):
                raise TemplateError(f"constant {k!r} has shape {M.shape}, expected {(n, n)}")
            consts[k] = M
    elif const_matrices:
        raise TemplateError("constant matrices are only used in matrix mode")
    return DynamicsTemplate(sys.m, n, sys.p, sys.phi, consts, const_mode)


@dataclass(frozen=True)
class RoundTripReport:
    trials: int
    max_deviation: float
    per_component: tuple[float, ...]
    coefficients_exact: bool

    @property
    def passed(self) -> bool:
        return self.coefficients_exact and self.max_deviation <= 1e-12


def symbol_of_quantization(f: WeylSymbol) -> WeylSymbol:
    """Recover a symbol from its Weyl quantization, control slice by slice."""
    terms = []
    for (ctrl, label), sl in f.control_slices().items():
        collapsed = commutative_collapse(quantize_symbol(sl, (), "auto"), f.m)
        for (s, _, lab), c in collapsed.items():
            terms.append(((s, ctrl, label if label is not None else lab), c))
    return WeylSymbol(f.m, f.p, terms)


def verify_round_trip(template: DynamicsTemplate, sys: ScalarSystem, trials: int = 100, seed: int = 0) -> RoundTripReport:
    """Check that the template's symbols restrict to phi on the scalar locus.

    The template side goes through quantization and 1x1 matrix evaluation;
    the phi side is direct polynomial evaluation.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if (template.m, template.p) != (sys.m, sys.p):
        raise TemplateError("template and system dimensions differ")
    rng = np.random.default_rng(seed)
    worst = np.zeros(sys.m)
    for _ in range(trials):
        x = rng.standard_normal(sys.m) + 1j * rng.standard_normal(sys.m)
        u = rng.standard_normal(sys.p) + 1j * rng.standard_normal(sys.p)
        X = x.reshape(sys.m, 1, 1)
        for i, (f, phi) in enumerate(zip(template.symbols, sys.phi)):
            lhs = eval_nc(quantize_symbol(f, tuple(u), "scalar", sys.constants), X)[0, 0]
            rhs = scalar_restrict(phi, x, u, sys.constants)
            worst[i] = max(worst[i], abs(lhs - rhs))
    exact_ok = all(symbol_of_quantization(f) == phi for f, phi in zip(template.symbols, sys.phi))
    return RoundTripReport(trials, float(worst.max()), tuple(float(w) for w in worst), exact_ok)


def admissible_control(
    template: DynamicsTemplate, X, u: Sequence = (), family: Family = Family()
) -> tuple[ControlPair, AdmissibilityReport]:
    """Statewise realization of a(u, x): the fitted algebra with its verdict."""
    X = as_matrix_tuple(X)
    if X.shape != (template.m, template.n, template.n):
        raise TemplateError(f"tuple shape {X.shape} does not match template")
    if len(u) != template.p:
        raise TemplateError(f"expected {template.p} control values")
    alg, report = fit_algebra(X, family)
    return ControlPair(alg), report

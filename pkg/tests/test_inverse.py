import numpy as np
import pytest

from repdyn.dynamics import ControlPair, FixedPair, integrate, rhs
from repdyn.inverse import (
    DynamicsTemplate,
    ScalarSystem,
    TemplateError,
    admissible_control,
    quantize,
    symbol_of_quantization,
    verify_round_trip,
)
from repdyn.quadalgebra import abelian, pbw_check, so3
from repdyn.repcheck import FULL, LIE, fit_algebra
from repdyn.symcalc import WeylSymbol, random_symbol, substitute_constants

mono = WeylSymbol.monomial


def test_quantize_linear(rng):
    t = quantize(ScalarSystem(1, 0, (mono((1,), -1),)), 2)
    X = rng.standard_normal((1, 2, 2)) + 0j
    s = t.scenario(X, 0.0, 1.0, 0.1, FixedPair(ControlPair(abelian(1))))
    assert np.array_equal(rhs(s, X), -X)


def test_quantize_product(rng):
    sys = ScalarSystem(2, 0, (mono((1, 1)), WeylSymbol.zero(2)))
    t = quantize(sys, 2)
    X = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
    s = t.scenario(X, 0.0, 1.0, 0.1, FixedPair(ControlPair(abelian(2))))
    assert np.allclose(rhs(s, X)[0], (X[0] @ X[1] + X[1] @ X[0]) / 2, atol=1e-15)


def test_quantize_constant_matrix(pauli):
    sys = ScalarSystem(1, 0, (WeylSymbol.constant(1, "c"),), {"c": 2.0})
    t = quantize(sys, 2, "matrix", {"c": pauli[0]})
    s = t.scenario(np.zeros((1, 2, 2)), 0.0, 1.0, 0.1, FixedPair(ControlPair(abelian(1))))
    assert np.array_equal(rhs(s, s.X0)[0], pauli[0])
    assert np.array_equal(quantize(sys, 2, "matrix").constants["c"], 2 * np.eye(2))
    assert np.array_equal(quantize(sys, 3).constants["c"], 2 * np.eye(3))


def test_quantize_errors(pauli):
    sys = ScalarSystem(1, 0, (WeylSymbol.constant(1, "c"),), {"c": 2.0})
    with pytest.raises(TemplateError):
        quantize(sys, 2, "matrix", {"d": pauli[0]})
    with pytest.raises(TemplateError):
        quantize(sys, 2, "matrix", {"c": np.eye(3)})
    with pytest.raises(TemplateError):
        quantize(sys, 0)
    with pytest.raises(TemplateError):
        ScalarSystem(1, 0, (WeylSymbol.constant(1, "c"),))


def test_round_trip_linear():
    sys = ScalarSystem(1, 0, (mono((1,), -1),))
    rep = verify_round_trip(quantize(sys, 2), sys, trials=10)
    assert rep.max_deviation == 0 and rep.coefficients_exact and rep.passed


def test_round_trip_random_degree4(rng):
    for _ in range(5):
        m, p = int(rng.integers(1, 4)), int(rng.integers(0, 3))
        sys = ScalarSystem(m, p, tuple(random_symbol(rng, m, p, 4) for _ in range(m)))
        rep = verify_round_trip(quantize(sys, 2), sys, trials=100, seed=7)
        assert rep.max_deviation <= 1e-12 and rep.coefficients_exact


def test_round_trip_detects_perturbation():
    eps = 1e-6
    sys = ScalarSystem(2, 0, (mono((2, 0)), mono((0, 1))))
    bad = DynamicsTemplate(2, 2, 0, (mono((2, 0)) + mono((2, 0), eps), mono((0, 1))), {})
    rep = verify_round_trip(bad, sys, trials=20, seed=3)
    g = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        x = g.standard_normal(2) + 1j * g.standard_normal(2)
        g.standard_normal(0), g.standard_normal(0)
        worst = max(worst, eps * abs(x[0]) ** 2)
    assert rep.max_deviation == pytest.approx(worst, rel=1e-6)
    assert not rep.coefficients_exact and not rep.passed


def test_quantize_restrict_identity_on_coefficients(rng):
    for m in (1, 2, 3):
        for _ in range(5):
            f = random_symbol(rng, m, 2, degree=5, density=0.6)
            assert symbol_of_quantization(f) == f


def test_n1_collapse_matches_scalar_flow():
    sys = ScalarSystem(1, 0, (mono((2,), -1) + mono((1,), 0.5),))
    tr = integrate(quantize(sys, 1).scenario(np.ones((1, 1, 1)), 0.0, 1.0, 0.1, FixedPair(ControlPair(abelian(1)))))
    x = 1.0 + 0j
    for k in range(1, 11):
        f = lambda y: -(y * y) + 0.5 * y
        k1 = f(x); k2 = f(x + 0.05 * k1); k3 = f(x + 0.05 * k2); k4 = f(x + 0.1 * k3)
        x = x + (0.1 / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        assert complex(tr.states[k, 0, 0, 0]) == pytest.approx(x, abs=1e-15)


def test_constant_promotion_consistency(so3_rep):
    z = WeylSymbol.zero(3)
    phi = (mono((0, 1, 0)) + WeylSymbol.constant(3, "c"), mono((1, 0, 0), -1), z)
    sys = ScalarSystem(3, 0, phi, {"c": 0.3 - 0.2j})
    matrix_t = quantize(sys, 2, "matrix")
    scalar_syms = tuple(substitute_constants(f, sys.constants) for f in phi)
    scalar_t = DynamicsTemplate(3, 2, 0, scalar_syms, {})
    pm = FixedPair(ControlPair(so3()))
    a = integrate(matrix_t.scenario(so3_rep, 0.0, 1.0, 0.05, pm))
    b = integrate(scalar_t.scenario(so3_rep, 0.0, 1.0, 0.05, pm))
    assert np.abs(a.states - b.states).max() <= 1e-12


def test_admissible_control_so3(so3_rep):
    t = quantize(ScalarSystem(3, 0, (WeylSymbol.zero(3),) * 3), 2)
    pair, rep = admissible_control(t, so3_rep, (), LIE)
    assert rep.feasible
    assert all(abs(complex(pair.algebra.B[k]) - complex(v)) <= 1e-12 for k, v in so3().B.items())


def test_admissible_control_commuting(rng):
    t = quantize(ScalarSystem(3, 0, (WeylSymbol.zero(3),) * 3), 2)
    X = np.array([np.diag(rng.standard_normal(2)) for _ in range(3)], dtype=complex)
    pair, rep = admissible_control(t, X, (), LIE)
    assert pair.algebra == abelian(3) and rep.feasible


def test_admissible_control_generic(rng):
    t = quantize(ScalarSystem(3, 0, (WeylSymbol.zero(3),) * 3), 2)
    for _ in range(5):
        X = rng.standard_normal((3, 2, 2)) + 1j * rng.standard_normal((3, 2, 2))
        pair, rep = admissible_control(t, X, (), FULL)
        assert rep.max_residual <= 1e-10
        assert rep.feasible == pbw_check(pair.algebra, 3).passed
        alg2, rep2 = fit_algebra(X, FULL)
        assert alg2 == pair.algebra and rep2 == rep

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repdyn._exact import GaussRational
from repdyn.matrixcore import DimensionError
from repdyn.symcalc import (
    NCPolynomial,
    SymbolError,
    WeylSymbol,
    commutative_collapse,
    eval_nc,
    monomials,
    quantize_symbol,
    random_symbol,
    scalar_restrict,
    weyl_order,
)

W = NCPolynomial.word


def test_weyl_order_examples():
    assert weyl_order((1, 1, 0)) == W((0, 1), Fraction(1, 2)) + W((1, 0), Fraction(1, 2))
    assert weyl_order((2, 0, 0)) == W((0, 0))
    third = Fraction(1, 3)
    assert weyl_order((2, 1, 0)) == W((0, 0, 1), third) + W((0, 1, 0), third) + W((1, 0, 0), third)
    assert weyl_order((0, 0, 0)) == NCPolynomial.unit()


@pytest.mark.parametrize("m", [1, 2, 3])
def test_weyl_combinatorics(m):
    for alpha in monomials(m, 5):
        p = weyl_order(alpha)
        word = [i for i, a in enumerate(alpha) for _ in range(a)]
        oracle = set(itertools.permutations(word))
        assert set(p) == oracle
        assert len(p) == math.factorial(sum(alpha)) // math.prod(math.factorial(a) for a in alpha)
        coeffs = {c for _, c in p.items()}
        assert len(coeffs) == 1
        assert sum((c for _, c in p.items()), GaussRational(0)) == 1


def test_quantize_examples():
    f = WeylSymbol(2, 0, {((2, 0), ()): 1, ((0, 1), ()): 1})
    assert quantize_symbol(f) == W((0, 0)) + W((1,))
    g = WeylSymbol.monomial((1, 1), 3)
    assert quantize_symbol(g) == W((0, 1), Fraction(3, 2)) + W((1, 0), Fraction(3, 2))
    c = WeylSymbol.constant(2, "c_a")
    assert quantize_symbol(c, const_mode="matrix") == W(("c_a",))
    assert quantize_symbol(c, const_mode="scalar", const_values={"c_a": 2.5}) == NCPolynomial.unit() * 2.5


def test_quantize_errors():
    with pytest.raises(SymbolError, match="unlabeled constant"):
        quantize_symbol(WeylSymbol.constant(1, None, 4), const_mode="matrix")
    with pytest.raises(SymbolError, match="missing value"):
        quantize_symbol(WeylSymbol.constant(1, "c"), const_mode="scalar")
    with pytest.raises(SymbolError):
        quantize_symbol(WeylSymbol.monomial((1,), 1, control=(1,)), u=())


def test_auto_mode_mixes():
    f = WeylSymbol(1, 0, {((0,), (), "c"): 2, ((0,), (), None): 3, ((1,), (), None): 1})
    assert quantize_symbol(f, const_mode="auto") == W(("c",), 2) + NCPolynomial.unit() * 3 + W((0,))


def test_controls_collapse_into_coefficients():
    f = WeylSymbol(1, 2, {((1,), (2, 1), None): 1})
    assert quantize_symbol(f, u=(3, 2)) == W((0,), 18)


def test_labels_only_on_constant_terms():
    with pytest.raises(SymbolError):
        WeylSymbol(1, 0, {((1,), (), "c"): 1})


def test_eval_examples(pauli):
    s1, s2, s3 = pauli
    assert np.allclose(eval_nc(W((0, 1)), pauli), 1j * s3, atol=0)
    assert np.allclose(eval_nc(weyl_order((1, 1, 0)), pauli), 0, atol=0)
    assert np.array_equal(eval_nc(NCPolynomial.unit(), pauli), np.eye(2))


def test_eval_errors(pauli):
    with pytest.raises(DimensionError):
        eval_nc(W((3,)), pauli)
    with pytest.raises(SymbolError, match="missing constant"):
        eval_nc(W(("c",)), pauli)
    with pytest.raises(DimensionError):
        eval_nc(W(("c",)), pauli, {"c": np.eye(3)})


def test_eval_multiplicative(rng):
    X = rng.standard_normal((3, 3, 3)) + 1j * rng.standard_normal((3, 3, 3))
    for _ in range(20):
        w1 = tuple(rng.integers(0, 3, size=rng.integers(0, 4)))
        w2 = tuple(rng.integers(0, 3, size=rng.integers(0, 4)))
        lhs = eval_nc(W(tuple(int(l) for l in w1 + w2)), X)
        rhs = eval_nc(W(tuple(int(l) for l in w1)), X) @ eval_nc(W(tuple(int(l) for l in w2)), X)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_scalar_restrict_examples():
    assert scalar_restrict(WeylSymbol.monomial((1, 1)), (2, 3)) == 6
    f = WeylSymbol(2, 0, {((2, 0), ()): 1, ((0, 1), ()): 1})
    assert scalar_restrict(f, (2, 3)) == 7
    with pytest.raises(SymbolError):
        scalar_restrict(f, (2,))


def _direct_eval(f, x, u):
    # independent oracle: sum over terms using numpy products
    tot = 0j
    for (s, c, _), coeff in f.items():
        tot += complex(coeff) * np.prod(np.power(np.asarray(x, complex), s)) * np.prod(np.power(np.asarray(u, complex), c))
    return tot


def test_random_degree4_scalar_vs_1x1(rng):
    for _ in range(30):
        f = random_symbol(rng, 3, 1, degree=4)
        x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        u = rng.standard_normal(1) + 1j * rng.standard_normal(1)
        direct = _direct_eval(f, x, u)
        assert scalar_restrict(f, x, u) == pytest.approx(direct, rel=1e-12, abs=1e-12)
        v = eval_nc(quantize_symbol(f, tuple(u)), x.reshape(3, 1, 1))[0, 0]
        assert v == pytest.approx(direct, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_commutative_collapse(m, n, seed):
    g = np.random.default_rng(seed)
    f = random_symbol(g, m, 1, degree=4)
    x = g.standard_normal(m) + 1j * g.standard_normal(m)
    u = tuple(g.standard_normal(1) + 0j)
    X = np.array([xi * np.eye(n) for xi in x])
    M = eval_nc(quantize_symbol(f, u), X)
    expected = scalar_restrict(f, x, u)
    assert np.allclose(M, expected * np.eye(n), rtol=1e-12, atol=1e-12 * max(1, abs(expected)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_quantization_linear(seed):
    g = np.random.default_rng(seed)
    f = random_symbol(g, 2, 0, degree=4)
    h = random_symbol(g, 2, 0, degree=4)
    a, b = GaussRational(Fraction(3, 7), 2), GaussRational(-1, Fraction(1, 5))
    assert quantize_symbol(f * a + h * b) == quantize_symbol(f) * a + quantize_symbol(h) * b


def test_collapse_inverts_quantization(rng):
    for m in (1, 2, 3):
        f = random_symbol(rng, m, 0, degree=5, density=0.7)
        assert commutative_collapse(quantize_symbol(f), m) == f


def test_nc_polynomial_arithmetic():
    e1, e2 = W((0,)), W((1,))
    assert (e1 * e2 - e2 * e1) == W((0, 1)) - W((1, 0))
    assert (e1 + 0 * e2) == e1
    assert len(e1 - e1) == 0
    assert (e1 * e2).degree == 2
    assert str(weyl_order((2, 1))) == "1/3 e1e1e2 + 1/3 e1e2e1 + 1/3 e2e1e1"

"""Quadratic-relation algebras and degree-bounded PBW certification.

An algebra on generators e_1..e_m is given by one relation per pair i < j:

    e_i e_j - e_j e_i = sum_{k<=l} A[i,j,k,l] (e_k e_l + e_l e_k)/2
                        + sum_k B[i,j,k] e_k + C[i,j] * 1

All indices are 0-based. Normal forms are computed by linear elimination in
the degree-filtered slice of the free algebra, never by string rewriting.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._exact import GaussRational, exact, exact_rank, exact_solve
from .matrixcore import lstsq_min_norm
from .symcalc import NCPolynomial, Word, monomials, weyl_order

MAX_SLICE_WORDS = 4000


class SliceTooLarge(ValueError):
    pass


class BasisCollapse(ValueError):
    pass


def pairs(m: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


def _clean(d: Mapping, m: int, arity: int, kind: str) -> dict:
    out = {}
    for key, c in d.items():
        key = tuple(int(k) for k in key)
        if len(key) != arity or any(not 0 <= k < m for k in key):
            raise ValueError(f"{kind} index {key} out of range for m={m}")
        if key[0] >= key[1]:
            raise ValueError(f"{kind} index {key} must have i < j")
        if kind == "A" and key[2] > key[3]:
            raise ValueError(f"A index {key} must have k <= l")
        c = exact(c)
        if c:
            out[key] = out.get(key, GaussRational(0)) + c
    return {k: v for k, v in out.items() if v}


@dataclass(frozen=True, eq=False)
class QuadraticAlgebra:
    m: int
    A: Mapping[tuple, GaussRational]
    B: Mapping[tuple, GaussRational]
    C: Mapping[tuple, GaussRational]

    def __init__(self, m: int, A: Mapping | None = None, B: Mapping | None = None, C: Mapping | None = None):
        if m < 1:
            raise ValueError("m must be >= 1")
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "A", _clean(A or {}, m, 4, "A"))
        object.__setattr__(self, "B", _clean(B or {}, m, 3, "B"))
        object.__setattr__(self, "C", _clean(C or {}, m, 2, "C"))

    @property
    def key(self) -> tuple:
        f = lambda d: tuple(sorted((k, (v.re, v.im)) for k, v in d.items()))
        return (self.m, f(self.A), f(self.B), f(self.C))

    def __eq__(self, other):
        if not isinstance(other, QuadraticAlgebra):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        fmt = lambda d: {k: complex(v) for k, v in d.items()}
        return f"QuadraticAlgebra(m={self.m}, A={fmt(self.A)}, B={fmt(self.B)}, C={fmt(self.C)})"

    @property
    def is_lie_type(self) -> bool:
        return not self.A and not self.C

    def tensors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Full tensors (T, Bt, Ct) with [e_a, e_b] = T[a,b,k,l] e_k e_l + Bt[a,b,k] e_k + Ct[a,b].

        T is antisymmetric in (a, b) and symmetric in (k, l).
        """
        m = self.m
        T = np.zeros((m, m, m, m), dtype=complex)
        Bt = np.zeros((m, m, m), dtype=complex)
        Ct = np.zeros((m, m), dtype=complex)
        for (i, j, k, l), c in self.A.items():
            v = complex(c) if k == l else complex(c) / 2
            for a, b, s in ((i, j, 1), (j, i, -1)):
                T[a, b, k, l] += s * v
                if k != l:
                    T[a, b, l, k] += s * v
        for (i, j, k), c in self.B.items():
            Bt[i, j, k] += complex(c)
            Bt[j, i, k] -= complex(c)
        for (i, j), c in self.C.items():
            Ct[i, j] += complex(c)
            Ct[j, i] -= complex(c)
        return T, Bt, Ct

    @classmethod
    def from_tensors(cls, T, Bt, Ct, chop: float = 0.0) -> "QuadraticAlgebra":
        """Inverse of :meth:`tensors`, reading the i < j, k <= l components."""
        m = Bt.shape[0]
        keep = lambda z: abs(z) > chop
        A, B, C = {}, {}, {}
        for i, j in pairs(m):
            for k in range(m):
                for l in range(k, m):
                    v = T[i, j, k, l] if k == l else T[i, j, k, l] + T[i, j, l, k]
                    if keep(v):
                        A[(i, j, k, l)] = complex(v)
                if keep(Bt[i, j, k]):
                    B[(i, j, k)] = complex(Bt[i, j, k])
            if keep(Ct[i, j]):
                C[(i, j)] = complex(Ct[i, j])
        return cls(m, A, B, C)

    def transport(self, g) -> "QuadraticAlgebra":
        """Constants of the same algebra in new generators f_a = sum_i g[a,i] e_i."""
        g = np.asarray(g, dtype=complex)
        h = np.linalg.inv(g)
        T, Bt, Ct = self.tensors()
        T2 = np.einsum("ai,bj,ijkl,kp,lq->abpq", g, g, T, h, h)
        B2 = np.einsum("ai,bj,ijk,kp->abp", g, g, Bt, h)
        C2 = np.einsum("ai,bj,ij->ab", g, g, Ct)
        return QuadraticAlgebra.from_tensors(T2, B2, C2, chop=1e-14)

    def permuted(self, perm: Sequence[int]) -> "QuadraticAlgebra":
        """Relabel generators: new generator a is old generator perm[a]."""
        g = np.zeros((self.m, self.m))
        for a, i in enumerate(perm):
            g[a, i] = 1.0
        return self.transport(g)


# Named structure constants used throughout examples, tests and the explorer.

def abelian(m: int) -> QuadraticAlgebra:
    return QuadraticAlgebra(m)


def so3() -> QuadraticAlgebra:
    """[e1,e2] = e3, [e2,e3] = e1, [e3,e1] = e2."""
    return QuadraticAlgebra(3, B={(0, 1, 2): 1, (1, 2, 0): 1, (0, 2, 1): -1})


def sl2() -> QuadraticAlgebra:
    """Generators (E, F, H): [H,E] = 2E, [H,F] = -2F, [E,F] = H."""
    return QuadraticAlgebra(3, B={(0, 1, 2): 1, (0, 2, 0): -2, (1, 2, 1): 2})


def heisenberg() -> QuadraticAlgebra:
    return QuadraticAlgebra(3, B={(0, 1, 2): 1})


def weyl_type() -> QuadraticAlgebra:
    """Two generators with [e1, e2] = 1."""
    return QuadraticAlgebra(2, C={(0, 1): 1})


def broken_jacobi() -> QuadraticAlgebra:
    """[e1,e2] = e1, [e2,e3] = e2, [e3,e1] = e3; the Jacobiator is e1+e2+e3."""
    return QuadraticAlgebra(3, B={(0, 1, 0): 1, (1, 2, 1): 1, (0, 2, 2): -1})


NAMED = {
    "abelian2": lambda: abelian(2),
    "abelian3": lambda: abelian(3),
    "so3": so3,
    "sl2": sl2,
    "heisenberg": heisenberg,
    "weyl": weyl_type,
    "broken_jacobi": broken_jacobi,
}


def relation_polynomials(alg: QuadraticAlgebra) -> list[NCPolynomial]:
    """r_ij = e_i e_j - e_j e_i - RHS_ij for i < j, in lexicographic pair order."""
    rels = []
    for i, j in pairs(alg.m):
        terms: list[tuple[Word, GaussRational]] = [((i, j), GaussRational(1)), ((j, i), GaussRational(-1))]
        for (a, b, k, l), c in alg.A.items():
            if (a, b) != (i, j):
                continue
            if k == l:
                terms.append(((k, k), -c))
            else:
                half = c / 2
                terms += [((k, l), -half), ((l, k), -half)]
        for (a, b, k), c in alg.B.items():
            if (a, b) == (i, j):
                terms.append(((k,), -c))
        if (i, j) in alg.C:
            terms.append(((), -alg.C[(i, j)]))
        rels.append(NCPolynomial(terms))
    return rels


def slice_words(m: int, d: int) -> list[Word]:
    """Words of length <= d, graded then lexicographic."""
    return [w for k in range(d + 1) for w in itertools.product(range(m), repeat=k)]


def _check_size(m: int, d: int):
    size = sum(m ** k for k in range(d + 1))
    if size > MAX_SLICE_WORDS:
        raise SliceTooLarge(
            f"free-algebra slice m={m}, d={d} has {size} words (limit {MAX_SLICE_WORDS})"
        )
    return size


def ideal_rows(relations: Sequence[NCPolynomial], m: int, k: int) -> list[dict[Word, GaussRational]]:
    """Elements w1 * r * w2 of filtration degree <= k, as sparse word maps."""
    rows = []
    for r in relations:
        deg = r.degree
        if deg < 0 or deg > k:
            continue
        for s in range(k - deg + 1):
            for left_len in range(s + 1):
                for w1 in itertools.product(range(m), repeat=left_len):
                    for w2 in itertools.product(range(m), repeat=s - left_len):
                        rows.append({w1 + w + w2: c for w, c in r.items()})
    return rows


def _dense(rows: Iterable[Mapping[Word, object]], index: Mapping[Word, int], exact_mode: bool):
    rows = list(rows)
    if exact_mode:
        out = [[GaussRational(0)] * len(index) for _ in rows]
        for r, row in enumerate(rows):
            for w, c in row.items():
                out[r][index[w]] = exact(c)
        return out
    M = np.zeros((len(rows), len(index)), dtype=complex)
    for r, row in enumerate(rows):
        for w, c in row.items():
            M[r, index[w]] += complex(c)
    return M


def _rank(M, exact_mode: bool, tol: float) -> int:
    if exact_mode:
        return exact_rank(M)
    if M.shape[0] == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def quotient_dims(
    relations: Sequence[NCPolynomial], m: int, d: int, exact_mode: bool = False, tol: float = 1e-9
) -> list[int]:
    """dim F_{<=k} / span{w1 r w2 : deg <= k} for k = 0..d."""
    _check_size(m, d)
    dims = []
    for k in range(d + 1):
        words = slice_words(m, k)
        index = {w: i for i, w in enumerate(words)}
        M = _dense(ideal_rows(relations, m, k), index, exact_mode)
        dims.append(len(words) - _rank(M, exact_mode, tol))
    return dims


@dataclass(frozen=True)
class PBWReport:
    passed: bool
    quotient_dims: tuple[int, ...]
    expected_dims: tuple[int, ...]

    @property
    def deficit(self) -> tuple[int, ...]:
        return tuple(e - q for q, e in zip(self.quotient_dims, self.expected_dims))


def pbw_check(alg: QuadraticAlgebra, d: int = 3, exact_mode: bool = False, tol: float = 1e-9) -> PBWReport:
    """Certify through degree ``d`` that Weyl symmetrization S(V) -> algebra is bijective.

    Passes iff the quotient of every filtration piece F_{<=k}, k <= d, has the
    dimension C(m+k, m) of the corresponding piece of the symmetric algebra.
    """
    if d < 2:
        raise ValueError("pbw_check needs d >= 2")
    q = quotient_dims(relation_polynomials(alg), alg.m, d, exact_mode, tol)
    expected = tuple(math.comb(alg.m + k, alg.m) for k in range(d + 1))
    return PBWReport(tuple(q) == expected, tuple(q), expected)


def sorted_monomial_word(alpha: Sequence[int]) -> Word:
    return tuple(i for i, a in enumerate(alpha) for _ in range(a))


def reduce_word(
    alg: QuadraticAlgebra,
    w: Sequence[int],
    tol: float = 1e-9,
    exact_mode: bool = False,
    basis: str = "sorted",
) -> dict[tuple, object]:
    """Expand the image of ``w`` in the algebra over a PBW basis of degree <= |w|.

    ``basis="sorted"`` uses e_1^{a_1}...e_m^{a_m}; ``basis="weyl"`` uses the
    Weyl-symmetrized monomials. Keys are multi-indices. Exact mode returns
    :class:`GaussRational` coefficients; otherwise complex floats.
    """
    w = tuple(int(l) for l in w)
    if any(not 0 <= l < alg.m for l in w):
        raise ValueError(f"word {w} has letters outside 1..{alg.m}")
    k = len(w)
    if k >= 2:
        report = pbw_check(alg, k, exact_mode, tol)
        if not report.passed:
            raise BasisCollapse(
                f"basis collapse: quotient dims {report.quotient_dims} != {report.expected_dims}"
            )
    words = slice_words(alg.m, k)
    index = {u: i for i, u in enumerate(words)}
    alphas = monomials(alg.m, k)
    if basis == "sorted":
        basis_rows = [{sorted_monomial_word(a): 1} for a in alphas]
    elif basis == "weyl":
        basis_rows = [dict(weyl_order(a).items()) for a in alphas]
    else:
        raise ValueError(f"unknown basis {basis!r}")
    gens = ideal_rows(relation_polynomials(alg), alg.m, k)
    cols = basis_rows + gens
    target = {w: 1}
    if exact_mode:
        Mcols = _dense(cols, index, True)
        b = _dense([target], index, True)[0]
        x = exact_solve(Mcols, b)
        if x is None:
            raise BasisCollapse("basis collapse: word not in the span of the basis")
        return {a: x[i] for i, a in enumerate(alphas) if x[i]}
    M = _dense(cols, index, False).T
    b = _dense([target], index, False)[0]
    x, res = lstsq_min_norm(M, b, tol=1e-12)
    if res > 1e-8 * max(1.0, float(np.linalg.norm(b))):
        raise BasisCollapse(f"basis collapse: residual {res:.3e}")
    scale = max(1.0, float(np.max(np.abs(x[: len(alphas)]))))
    return {a: complex(x[i]) for i, a in enumerate(alphas) if abs(x[i]) > 1e-12 * scale}


def normal_form_poly(coeffs: Mapping[tuple, object], basis: str = "sorted") -> NCPolynomial:
    """The NC polynomial represented by reduce_word coefficients."""
    out = NCPolynomial()
    for a, c in coeffs.items():
        if basis == "sorted":
            out = out + NCPolynomial.word(sorted_monomial_word(a), c)
        else:
            out = out + weyl_order(a) * c
    return out

"""Representation constraint: residuals, fitting, projection, equivalence."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import least_squares

from .matrixcore import DimensionError, as_matrix_tuple, lstsq_min_norm, numeric_rank
from .quadalgebra import QuadraticAlgebra, pairs, pbw_check

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdmissibilityReport:
    per_relation_residuals: tuple[float, ...]
    max_residual: float
    pbw_pass: bool
    feasible: bool
    tolerance: float

    @classmethod
    def build(cls, residuals, pbw_pass: bool, tolerance: float) -> "AdmissibilityReport":
        residuals = tuple(float(r) for r in residuals)
        mx = max(residuals, default=0.0)
        return cls(residuals, mx, bool(pbw_pass), bool(mx <= tolerance and pbw_pass), float(tolerance))


@dataclass(frozen=True)
class Family:
    """Which parts of the structure constants a fit may use."""

    A: bool = False
    B: bool = True
    C: bool = False

    def __post_init__(self):
        if not (self.A or self.B or self.C):
            raise ValueError("at least one of A, B, C must be enabled")

    @classmethod
    def parse(cls, text: str) -> "Family":
        text = text.upper()
        if not text or set(text) - set("ABC"):
            raise ValueError(f"family must be a combination of A, B, C, got {text!r}")
        return cls("A" in text, "B" in text, "C" in text)

    def __str__(self):
        return "".join(k for k in "ABC" if getattr(self, k))


LIE = Family(B=True)
FULL = Family(True, True, True)


def _relation_terms(alg: QuadraticAlgebra):
    """Per pair: products [(w, a, b)], linear [(w, k)], constant, all with r = sum."""
    out = []
    for i, j in pairs(alg.m):
        prods = [(1.0 + 0j, i, j), (-1.0 + 0j, j, i)]
        lin = []
        const = 0j
        for (a, b, k, l), c in alg.A.items():
            if (a, b) == (i, j):
                c = complex(c)
                if k == l:
                    prods.append((-c, k, k))
                else:
                    prods += [(-c / 2, k, l), (-c / 2, l, k)]
        for (a, b, k), c in alg.B.items():
            if (a, b) == (i, j):
                lin.append((-complex(c), k))
        if (i, j) in alg.C:
            const = -complex(alg.C[(i, j)])
        out.append((prods, lin, const))
    return out


def relation_matrices(alg: QuadraticAlgebra, X) -> np.ndarray:
    """Stack of r_ij(X) for i < j, shape (m(m-1)/2, n, n)."""
    X = as_matrix_tuple(X)
    if X.shape[0] != alg.m:
        raise DimensionError(f"algebra has m={alg.m} but tuple has {X.shape[0]} matrices")
    n = X.shape[1]
    eye = np.eye(n, dtype=complex)
    out = np.zeros((len(pairs(alg.m)), n, n), dtype=complex)
    for p, (prods, lin, const) in enumerate(_relation_terms(alg)):
        R = const * eye
        for w, a, b in prods:
            R = R + w * (X[a] @ X[b])
        for w, k in lin:
            R = R + w * X[k]
        out[p] = R
    return out


def residuals(alg: QuadraticAlgebra, X) -> np.ndarray:
    R = relation_matrices(alg, X)
    return np.sqrt(np.sum(np.abs(R) ** 2, axis=(1, 2)))


def representation_residual(
    alg: QuadraticAlgebra, X, tol: float = 1e-8, pbw_pass: bool | None = None
) -> AdmissibilityReport:
    """Frobenius residual of every relation on ``X`` plus the admissibility verdict.

    ``pbw_pass`` may be supplied when already known for ``alg``; otherwise
    :func:`pbw_check` runs at degree 3.
    """
    res = residuals(alg, X)
    if pbw_pass is None:
        pbw_pass = pbw_check(alg, 3).passed
    return AdmissibilityReport.build(res, pbw_pass, tol)


def fit_algebra(X, family: Family = LIE, tol: float = 1e-8, rank_tol: float = 1e-12):
    """Min-norm structure constants making ``X`` as close to a representation as possible.

    Each pair i < j is an independent least-squares problem in the enabled
    unknowns. Returns ``(alg, report)``.
    """
    X = as_matrix_tuple(X)
    m, n, _ = X.shape
    cols, keys = [], []
    if family.A:
        for k in range(m):
            for l in range(k, m):
                S = X[k] @ X[k] if k == l else (X[k] @ X[l] + X[l] @ X[k]) / 2
                cols.append(S.reshape(-1))
                keys.append(("A", k, l))
    if family.B:
        for k in range(m):
            cols.append(X[k].reshape(-1))
            keys.append(("B", k))
    if family.C:
        cols.append(np.eye(n, dtype=complex).reshape(-1))
        keys.append(("C",))
    M = np.stack(cols, axis=1)
    A, B, C = {}, {}, {}
    scale = max(1.0, float(np.max(np.abs(X))))
    for i, j in pairs(m):
        b = (X[i] @ X[j] - X[j] @ X[i]).reshape(-1)
        v, _ = lstsq_min_norm(M, b, tol=rank_tol)
        chop = 1e-14 * scale
        for key, c in zip(keys, v):
            if abs(c) <= chop:
                continue
            c = complex(c)
            if key[0] == "A":
                A[(i, j, key[1], key[2])] = c
            elif key[0] == "B":
                B[(i, j, key[1])] = c
            else:
                C[(i, j)] = c
    alg = QuadraticAlgebra(m, A, B, C)
    return alg, representation_residual(alg, X, tol)


# Gauss-Newton projection onto {X : r_ij(X) = 0}.

def relation_jacobian(alg: QuadraticAlgebra, X) -> np.ndarray:
    """Complex Jacobian of the stacked row-major vec(r_ij(X)) w.r.t. stacked vec(X_s)."""
    X = as_matrix_tuple(X)
    m, n, _ = X.shape
    n2 = n * n
    eye = np.eye(n, dtype=complex)
    terms = _relation_terms(alg)
    J = np.zeros((len(terms) * n2, m * n2), dtype=complex)
    for p, (prods, lin, _) in enumerate(terms):
        rows = slice(p * n2, (p + 1) * n2)
        for w, a, b in prods:
            # d(X_a X_b) = dX_a X_b + X_a dX_b ; row-major vec(P D Q) = kron(P, Q^T) vec(D)
            J[rows, a * n2:(a + 1) * n2] += w * np.kron(eye, X[b].T)
            J[rows, b * n2:(b + 1) * n2] += w * np.kron(X[a], eye)
        for w, k in lin:
            J[rows, k * n2:(k + 1) * n2] += w * np.eye(n2)
    return J


@dataclass
class GaussNewtonResult:
    X: np.ndarray
    max_residual: float
    total_residual: float
    iterations: int
    converged: bool
    history: list


class NoConvergence(RuntimeError):
    def __init__(self, message: str, best: GaussNewtonResult):
        super().__init__(message)
        self.best = best


def gauss_newton(
    alg: QuadraticAlgebra, X, tol: float = 1e-10, max_iter: int = 50, max_halvings: int = 30
) -> GaussNewtonResult:
    """Damped Gauss-Newton on sum ||r_ij(X)||_F^2, stopping at max residual <= tol.

    Steps are min-norm, halved until the objective strictly drops; if no
    halving helps the iteration stops at the current (best) iterate.
    """
    X = as_matrix_tuple(X).copy()
    m, n, _ = X.shape

    def state(Y):
        res = residuals(alg, Y)
        return res, float(np.sum(res ** 2))

    res, obj = state(X)
    history = [obj]
    it = 0
    while it < max_iter and res.max(initial=0.0) > tol:
        R = relation_matrices(alg, X).reshape(-1)
        J = relation_jacobian(alg, X)
        step, _ = lstsq_min_norm(J, -R, tol=1e-12)
        step = step.reshape(m, n, n)
        alpha = 1.0
        accepted = False
        for _ in range(max_halvings + 1):
            Y = X + alpha * step
            if np.all(np.isfinite(Y)):
                res_y, obj_y = state(Y)
                if obj_y < obj:
                    accepted = True
                    break
            alpha /= 2
        it += 1
        if not accepted:
            break
        X, res, obj = Y, res_y, obj_y
        history.append(obj)
    mx = float(res.max(initial=0.0))
    return GaussNewtonResult(X, mx, float(np.sqrt(obj)), it, mx <= tol, history)


def project_onto_constraint(alg: QuadraticAlgebra, X, tol: float = 1e-10, max_iter: int = 50) -> np.ndarray:
    """Local projection of ``X`` onto the representation variety of ``alg``.

    Raises :class:`NoConvergence` (carrying the best iterate) if the residual
    does not reach ``tol``.
    """
    X = as_matrix_tuple(X)
    if X.shape[0] != alg.m:
        raise DimensionError(f"algebra has m={alg.m} but tuple has {X.shape[0]} matrices")
    result = gauss_newton(alg, X, tol, max_iter)
    if not result.converged:
        raise NoConvergence(
            f"no convergence: best max residual {result.max_residual:.6g} after {result.iterations} iterations",
            result,
        )
    return result.X


# Equivalence of control pairs.

@dataclass(frozen=True)
class EquivalenceInvariants:
    b_rank: int
    killing_rank: int
    c_rank: int
    a_flat_ranks: tuple[int, int, int]
    contraction_charpoly: tuple[complex, ...]

    def sort_key(self) -> tuple:
        cp = tuple((round(z.real, 8), round(z.imag, 8)) for z in self.contraction_charpoly)
        return (self.b_rank, self.killing_rank, self.c_rank, self.a_flat_ranks, cp)

    def matches(self, other: "EquivalenceInvariants", tol: float = 1e-8) -> bool:
        if (self.b_rank, self.killing_rank, self.c_rank, self.a_flat_ranks) != (
            other.b_rank, other.killing_rank, other.c_rank, other.a_flat_ranks
        ):
            return False
        a = np.array(self.contraction_charpoly)
        b = np.array(other.contraction_charpoly)
        return a.shape == b.shape and bool(np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(b))))


def equivalence_invariants(alg: QuadraticAlgebra) -> EquivalenceInvariants:
    """Quantities unchanged by any change of generator basis g in GL(m).

    The quadratic, linear and constant parts transform as separate tensors,
    so ranks of their flattenings are invariant. The Killing-type form
    K_ab = sum B_aj^k B_bk^j transforms by congruence, so only its rank is
    kept; the endomorphism tau_a^l = sum_b T_ab^bl transforms by similarity,
    so its characteristic polynomial is kept.
    """
    m = alg.m
    T, Bt, Ct = alg.tensors()
    P = pairs(m)
    Bmat = np.array([[Bt[i, j, k] for (i, j) in P] for k in range(m)]).reshape(m, len(P))
    K = np.einsum("ajk,bkj->ab", Bt, Bt)
    flats = (
        numeric_rank(T.reshape(m * m, m * m)),
        numeric_rank(T.reshape(m, m ** 3)),
        numeric_rank(T.transpose(2, 0, 1, 3).reshape(m, m ** 3)),
    )
    tau = np.einsum("abbl->al", T)
    cp = np.poly(tau) if m else np.array([1.0])
    return EquivalenceInvariants(
        b_rank=numeric_rank(Bmat),
        killing_rank=numeric_rank(K),
        c_rank=numeric_rank(Ct),
        a_flat_ranks=flats,
        contraction_charpoly=tuple(complex(z) for z in cp),
    )


class Verdict(str, Enum):
    EQUIVALENT = "equivalent"
    DISTINCT = "distinct"
    UNKNOWN = "unknown"


def _stacked(alg: QuadraticAlgebra) -> np.ndarray:
    T, Bt, Ct = alg.tensors()
    return np.concatenate([T.ravel(), Bt.ravel(), Ct.ravel()])


def transport_error(a1: QuadraticAlgebra, a2: QuadraticAlgebra, g) -> float:
    """Frobenius distance between a1 transported by g and a2."""
    return float(np.linalg.norm(_stacked(a1.transport(g)) - _stacked(a2)))


def _transport_residual(a1_tensors, target, m):
    T, Bt, Ct = a1_tensors

    def fun(params):
        g = (params[: m * m] + 1j * params[m * m:]).reshape(m, m)
        try:
            h = np.linalg.inv(g)
        except np.linalg.LinAlgError:
            return np.full(2 * target.size, 1e6)
        T2 = np.einsum("ai,bj,ijkl,kp,lq->abpq", g, g, T, h, h)
        B2 = np.einsum("ai,bj,ijk,kp->abp", g, g, Bt, h)
        C2 = np.einsum("ai,bj,ij->ab", g, g, Ct)
        d = np.concatenate([T2.ravel(), B2.ravel(), C2.ravel()]) - target
        return np.concatenate([d.real, d.imag])

    return fun


def search_isomorphism(
    a1: QuadraticAlgebra, a2: QuadraticAlgebra, budget: int = 20, seed: int = 0, tol: float = 1e-8
) -> tuple[np.ndarray | None, float]:
    """Look for g in GL(m) with a1.transport(g) == a2.

    Permutation matrices are tried first, then ``budget`` seeded random
    starts refined by Levenberg-Marquardt. Returns the best (g, error).
    """
    if a1.m != a2.m:
        raise DimensionError("algebras with different generator counts")
    m = a1.m
    best_g, best_err = None, np.inf
    for perm in itertools.permutations(range(m)):
        g = np.eye(m)[list(perm)]
        err = transport_error(a1, a2, g)
        if err < best_err:
            best_g, best_err = g.astype(complex), err
        if err <= tol:
            return best_g, err
    fun = _transport_residual(a1.tensors(), _stacked(a2), m)
    for start in range(budget):
        rng = np.random.default_rng((seed, start))
        g0 = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        x0 = np.concatenate([g0.real.ravel(), g0.imag.ravel()])
        sol = least_squares(fun, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        g = (sol.x[: m * m] + 1j * sol.x[m * m:]).reshape(m, m)
        if np.linalg.cond(g) > 1e8:
            continue
        err = transport_error(a1, a2, g)
        if err < best_err:
            best_g, best_err = g, err
        if err <= tol:
            break
    return best_g, float(best_err)


def same_class(
    a1: QuadraticAlgebra, a2: QuadraticAlgebra, search_budget: int = 20, seed: int = 0, tol: float = 1e-8
) -> Verdict:
    """Tri-state equivalence of two control pairs under change of generators."""
    if a1.m != a2.m:
        raise DimensionError("algebras with different generator counts")
    if a1 == a2:
        return Verdict.EQUIVALENT
    if not equivalence_invariants(a1).matches(equivalence_invariants(a2), tol):
        return Verdict.DISTINCT
    if np.linalg.norm(_stacked(a1) - _stacked(a2)) <= tol:
        return Verdict.EQUIVALENT
    _, err = search_isomorphism(a1, a2, search_budget, seed, tol)
    return Verdict.EQUIVALENT if err <= tol else Verdict.UNKNOWN

"""Sampled search over quadratic algebras with m = 3 and their small representations."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import ControlPair, FixedPair, Scenario, integrate
from .quadalgebra import NAMED, QuadraticAlgebra, pairs, pbw_check
from .repcheck import EquivalenceInvariants, equivalence_invariants, gauss_newton, residuals
from .symcalc import WeylSymbol

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RepresentationResult:
    X: np.ndarray
    residual: float
    start: int

    @property
    def norm(self) -> float:
        """Frobenius norm of the whole tuple; 0 flags the trivial representation."""
        return float(np.linalg.norm(self.X))


def find_representation(alg: QuadraticAlgebra, n: int, starts: int = 20, seed: int | tuple = 0, max_iter: int = 60, tol: float = 1e-12) -> RepresentationResult:
    """Multi-start Gauss-Newton search for X with all relations vanishing.

    Start ``k`` draws from a generator keyed by ``(seed, k)``, so the best
    residual can only improve as ``starts`` grows. The residual is the root
    sum of squares of the per-relation Frobenius norms.
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    key = tuple(seed) if isinstance(seed, tuple) else (seed,)
    best = None
    for k in range(starts):
        rng = np.random.default_rng(key + (k,))
        X0 = rng.standard_normal((alg.m, n, n)) + 1j * rng.standard_normal((alg.m, n, n))
        gn = gauss_newton(alg, X0, tol=tol, max_iter=max_iter)
        total = float(np.sqrt(np.sum(residuals(alg, gn.X) ** 2)))
        if best is None or total < best.residual:
            best = RepresentationResult(gn.X, total, k)
    return best


def _flow_bank(m: int) -> list[tuple[str, tuple]]:
    """Degree <= 2 symbol flows used for screening."""
    z = WeylSymbol.zero(m)
    e = lambda i: tuple(int(k == i) for k in range(m))
    bank = [("zero", (z,) * m)]
    for i, j in pairs(m):
        comps = [z] * m
        comps[i] = WeylSymbol.monomial(e(j))
        comps[j] = WeylSymbol.monomial(e(i), -1)
        bank.append((f"rotation{i + 1}{j + 1}", tuple(comps)))
    if m == 3:
        quad = tuple(
            WeylSymbol.monomial(tuple(a + b for a, b in zip(e((i + 1) % 3), e((i + 2) % 3))))
            for i in range(3)
        )
        bank.append(("euler", quad))
    return bank


@dataclass(frozen=True)
class SearchSpec:
    """What to sample: explicit grid points plus seeded random draws."""

    m: int = 3
    grid: tuple = ()  # named algebras or QuadraticAlgebra instances
    random_count: int = 0
    allow_A: bool = False
    allow_B: bool = True
    allow_C: bool = False
    bound: int = 1
    density: float = 0.3
    starts: int = 8
    screen_flows: bool = False
    horizon: float = 0.5
    h: float = 0.05
    max_samples: int = 1000
    rep_tol: float = 1e-8


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    index: int
    constants: QuadraticAlgebra
    invariants: EquivalenceInvariants
    pbw_pass: bool
    quotient_dims: tuple
    best_rep: np.ndarray | None = None
    rep_residual: float | None = None
    rep_norm: float | None = None
    flow_screen: tuple = ()  # ((name, max residual over horizon), ...)


@dataclass(frozen=True)
class Catalog:
    entries: tuple
    truncated: bool


def random_algebra(spec: SearchSpec, seed: int, index: int) -> QuadraticAlgebra:
    """Integer constants in [-bound, bound], drawn from a generator keyed by (seed, index)."""
    rng = np.random.default_rng((seed, index))
    m = spec.m

    def draw():
        if rng.random() >= spec.density:
            return 0
        return int(rng.integers(-spec.bound, spec.bound + 1))

    A, B, C = {}, {}, {}
    for i, j in pairs(m):
        for k in range(m):
            for l in range(k, m):
                v = draw()
                if spec.allow_A and v:
                    A[(i, j, k, l)] = v
            v = draw()
            if spec.allow_B and v:
                B[(i, j, k)] = v
        v = draw()
        if spec.allow_C and v:
            C[(i, j)] = v
    return QuadraticAlgebra(m, A, B, C)


def _points(spec: SearchSpec, seed: int) -> list[QuadraticAlgebra]:
    pts = []
    for g in spec.grid:
        pts.append(NAMED[g]() if isinstance(g, str) else g)
    pts += [random_algebra(spec, seed, k) for k in range(spec.random_count)]
    return pts


def _screen(alg: QuadraticAlgebra, X: np.ndarray, spec: SearchSpec) -> tuple:
    out = []
    for name, comps in _flow_bank(alg.m):
        s = Scenario(
            m=alg.m, n=X.shape[1], symbols=comps, X0=X, t0=0.0, t1=spec.horizon, h=spec.h,
            pair_mode=FixedPair(ControlPair(alg)),
        )
        try:
            tr = integrate(s)
            out.append((name, tr.max_residual))
        except FloatingPointError:
            out.append((name, float("inf")))
    return tuple(out)


def _evaluate(args) -> CatalogEntry:
    index, alg, spec, n, seed = args
    report = pbw_check(alg, 3)
    entry = dict(
        index=index, constants=alg, invariants=equivalence_invariants(alg),
        pbw_pass=report.passed, quotient_dims=report.quotient_dims,
    )
    if report.passed:
        rep = find_representation(alg, n, spec.starts, seed=(seed, index))
        entry.update(best_rep=rep.X, rep_residual=rep.residual, rep_norm=rep.norm)
        if spec.screen_flows and rep.residual <= spec.rep_tol:
            entry["flow_screen"] = _screen(alg, rep.X, spec)
    return CatalogEntry(**entry)


def sample_search(spec: SearchSpec, n: int = 2, seed: int = 0, workers: int = 1) -> Catalog:
    """Evaluate every sample point; output order depends only on the inputs."""
    pts = _points(spec, seed)
    truncated = len(pts) > spec.max_samples
    if truncated:
        log.warning("sample budget %d exceeded by %d points; catalog truncated", spec.max_samples, len(pts))
        pts = pts[: spec.max_samples]
    tasks = [(k, alg, spec, n, seed) for k, alg in enumerate(pts)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            entries = list(pool.map(_evaluate, tasks))
    else:
        entries = [_evaluate(t) for t in tasks]
    entries.sort(key=lambda e: (e.invariants.sort_key(), e.index))
    return Catalog(tuple(entries), truncated)

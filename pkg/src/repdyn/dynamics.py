"""Matrix-valued controlled dynamics dX/dt = F(X, a(t)) with admissibility monitoring."""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence, Union

import numpy as np

from .matrixcore import as_matrix, as_matrix_tuple
from .quadalgebra import QuadraticAlgebra, pbw_check
from .repcheck import (
    AdmissibilityReport,
    Family,
    NoConvergence,
    Verdict,
    fit_algebra,
    project_onto_constraint,
    representation_residual,
    same_class,
)
from .symcalc import WeylSymbol, compile_nc, eval_compiled, quantize_symbol

log = logging.getLogger(__name__)


class ScenarioError(ValueError):
    pass


class BlowupError(FloatingPointError):
    def __init__(self, message: str, last_state: np.ndarray, t: float):
        super().__init__(message)
        self.last_state = last_state
        self.t = t


@dataclass(frozen=True)
class ControlPair:
    """The control a = (algebra, generators); generators are always e_i -> X_i."""

    algebra: QuadraticAlgebra


@dataclass(frozen=True)
class FixedPair:
    pair: ControlPair


@dataclass(frozen=True)
class ScheduledPairs:
    schedule: tuple  # ((t_start, t_end, ControlPair), ...)


@dataclass(frozen=True)
class FitPairs:
    family: Family


PairMode = Union[FixedPair, ScheduledPairs, FitPairs]


@dataclass(frozen=True)
class Tolerances:
    residual: float = 1e-8
    projection: float = 1e-10
    projection_max_iter: int = 20


@dataclass(frozen=True, eq=False)
class Scenario:
    m: int
    n: int
    symbols: tuple
    X0: np.ndarray
    t0: float
    t1: float
    h: float
    pair_mode: PairMode
    constants: Mapping[str, np.ndarray] = field(default_factory=dict)
    p: int = 0
    control: tuple = ()  # ((t, u), ...) piecewise constant, last value before t
    projection_every: int = 0
    tolerances: Tolerances = Tolerances()
    segment_budget: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ScenarioError("invariant: m >= 1 and n >= 1")
        if not self.t0 < self.t1:
            raise ScenarioError("invariant: t0 < t1")
        if not self.h > 0:
            raise ScenarioError("invariant: h > 0")
        if self.projection_every < 0:
            raise ScenarioError("invariant: projection_every >= 0")
        X0 = as_matrix_tuple(self.X0)
        if X0.shape != (self.m, self.n, self.n):
            raise ScenarioError(f"invariant: X0 has shape {X0.shape}, expected {(self.m, self.n, self.n)}")
        object.__setattr__(self, "X0", X0)
        symbols = tuple(self.symbols)
        if len(symbols) != self.m:
            raise ScenarioError(f"invariant: {len(symbols)} symbols for m={self.m}")
        for f in symbols:
            if not isinstance(f, WeylSymbol) or f.m != self.m or f.p != self.p:
                raise ScenarioError(f"invariant: symbol {f!r} does not match m={self.m}, p={self.p}")
        object.__setattr__(self, "symbols", symbols)
        consts = {k: as_matrix(v) for k, v in dict(self.constants).items()}
        for k, v in consts.items():
            if v.shape != (self.n, self.n):
                raise ScenarioError(f"invariant: constant {k!r} has shape {v.shape}")
        object.__setattr__(self, "constants", consts)
        control = tuple((float(t), tuple(complex(x) for x in u)) for t, u in self.control)
        if any(len(u) != self.p for _, u in control):
            raise ScenarioError(f"invariant: control vectors must have length p={self.p}")
        if any(b[0] <= a[0] for a, b in zip(control, control[1:])):
            raise ScenarioError("invariant: control table times strictly increasing")
        if self.p and (not control or control[0][0] > self.t0):
            raise ScenarioError("invariant: control table must start at or before t0")
        object.__setattr__(self, "control", control)
        mode = self.pair_mode
        if isinstance(mode, FixedPair):
            self._check_pair(mode.pair)
        elif isinstance(mode, ScheduledPairs):
            sched = tuple((float(a), float(b), pr) for a, b, pr in mode.schedule)
            if not sched:
                raise ScenarioError("invariant: empty schedule")
            eps = 1e-9 * self.h
            tiles = abs(sched[0][0] - self.t0) <= eps and abs(sched[-1][1] - self.t1) <= eps
            tiles = tiles and all(a < b for a, b, _ in sched)
            tiles = tiles and all(abs(x[1] - y[0]) <= eps for x, y in zip(sched, sched[1:]))
            if not tiles:
                raise ScenarioError("invariant: scheduled intervals tile [t0, t1]")
            for *_, pr in sched:
                self._check_pair(pr)
            object.__setattr__(self, "pair_mode", ScheduledPairs(sched))
        elif not isinstance(mode, FitPairs):
            raise ScenarioError(f"unknown pair mode {mode!r}")
        missing = set().union(*(f.labels() for f in symbols)) - set(consts)
        if missing:
            raise ScenarioError(f"invariant: missing constant matrices for labels {sorted(missing)}")
        object.__setattr__(self, "_rhs_cache", {})

    def _check_pair(self, pair: ControlPair):
        if pair.algebra.m != self.m:
            raise ScenarioError(f"invariant: control pair algebra has m={pair.algebra.m}, scenario m={self.m}")

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    @property
    def grid(self) -> np.ndarray:
        """Sample times t0 + k h, with a shortened last step landing on t1."""
        steps = max(1, math.ceil((self.t1 - self.t0) / self.h - 1e-9))
        t = self.t0 + self.h * np.arange(steps + 1)
        t[-1] = self.t1
        return t

    def control_at(self, t: float) -> tuple:
        if not self.p:
            return ()
        times = [c[0] for c in self.control]
        i = bisect.bisect_right(times, t + 1e-9 * self.h) - 1
        return self.control[max(i, 0)][1]

    def pair_at(self, t: float) -> ControlPair | None:
        mode = self.pair_mode
        if isinstance(mode, FixedPair):
            return mode.pair
        if isinstance(mode, ScheduledPairs):
            starts = [s[0] for s in mode.schedule]
            i = bisect.bisect_right(starts, t + 1e-9 * self.h) - 1
            return mode.schedule[min(max(i, 0), len(starts) - 1)][2]
        return None

    def compiled_rhs(self, u: tuple):
        cache = self._rhs_cache
        if u not in cache:
            cache[u] = [compile_nc(quantize_symbol(f, u, "auto")) for f in self.symbols]
        return cache[u]


def rhs(s: Scenario, X, u: Sequence = ()) -> np.ndarray:
    """F(X, u): component i is the Weyl quantization of f_i evaluated on X."""
    X = np.asarray(X, dtype=complex)
    u = tuple(complex(v) for v in u)
    cache: dict = {}
    return np.stack([eval_compiled(c, X, s.constants, cache) for c in s.compiled_rhs(u)])


def rk4_step(s: Scenario, X, t: float, h: float) -> np.ndarray:
    """Classical RK4 step; control frozen at its value on the piece active at t."""
    if not h > 0:
        raise ValueError("h must be positive")
    X = np.asarray(X, dtype=complex)
    u = s.control_at(t)
    # overflow is reported below as a BlowupError, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = rhs(s, X, u)
        k2 = rhs(s, X + (h / 2) * k1, u)
        k3 = rhs(s, X + (h / 2) * k2, u)
        k4 = rhs(s, X + h * k3, u)
        Y = X + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(Y)):
        raise BlowupError(f"blowup: non-finite state after step at t={t}", X, t)
    return Y


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    times: np.ndarray
    states: np.ndarray  # (samples, m, n, n)
    reports: tuple[AdmissibilityReport, ...]
    algebras: tuple[QuadraticAlgebra, ...]
    segment_ids: tuple[int, ...]
    fitted: bool = False

    def __post_init__(self):
        k = len(self.times)
        if not (len(self.states) == len(self.reports) == len(self.algebras) == len(self.segment_ids) == k):
            raise ValueError("trajectory record fields have unequal lengths")

    @property
    def first_infeasible(self) -> int | None:
        return next((i for i, r in enumerate(self.reports) if not r.feasible), None)

    @property
    def all_feasible(self) -> bool:
        return self.first_infeasible is None

    @property
    def max_residual(self) -> float:
        return max(r.max_residual for r in self.reports)


def segment_by_equivalence(tr: TrajectoryRecord, budget: int = 0, seed: int = 0) -> TrajectoryRecord:
    """Split the samples wherever consecutive pairs are certified distinct.

    Only a ``distinct`` verdict starts a new segment; ``unknown`` does not.
    """
    ids = []
    seg = 0
    for k, alg in enumerate(tr.algebras):
        if k:
            prev = tr.algebras[k - 1]
            if prev is not alg and same_class(prev, alg, budget, seed) is Verdict.DISTINCT:
                seg += 1
        ids.append(seg)
    return replace(tr, segment_ids=tuple(ids))


def integrate(s: Scenario) -> TrajectoryRecord:
    """Fixed-step RK4 over the scenario's grid with per-sample admissibility reports."""
    times = s.grid
    tol = s.tolerances
    pbw_cache: dict = {}

    def report_for(X, t):
        if isinstance(s.pair_mode, FitPairs):
            return fit_algebra(X, s.pair_mode.family, tol.residual)
        alg = s.pair_at(t).algebra
        if alg not in pbw_cache:
            pbw_cache[alg] = pbw_check(alg, 3).passed
        return alg, representation_residual(alg, X, tol.residual, pbw_cache[alg])

    X = s.X0.copy()
    states = [X]
    alg, rep = report_for(X, times[0])
    algebras, reports = [alg], [rep]
    last = len(times) - 1
    for k in range(1, len(times)):
        # full steps use h itself so the arithmetic matches a plain scalar loop
        step = s.h
        if k == last and abs(times[k] - times[k - 1] - s.h) > 1e-9 * s.h:
            step = times[k] - times[k - 1]
        X = rk4_step(s, X, times[k - 1], step)
        if s.projection_every and k % s.projection_every == 0:
            target = algebras[-1] if isinstance(s.pair_mode, FitPairs) else s.pair_at(times[k]).algebra
            try:
                X = project_onto_constraint(target, X, tol.projection, tol.projection_max_iter)
            except NoConvergence as exc:
                log.warning("projection at t=%.6g: %s", times[k], exc)
                X = exc.best.X
        alg, rep = report_for(X, times[k])
        states.append(X)
        algebras.append(alg)
        reports.append(rep)
    first_bad = next((i for i, r in enumerate(reports) if not r.feasible), None)
    if first_bad is not None:
        log.info("first infeasible sample %d at t=%.6g", first_bad, times[first_bad])
    tr = TrajectoryRecord(
        times=times,
        states=np.stack(states),
        reports=tuple(reports),
        algebras=tuple(algebras),
        segment_ids=(0,) * len(times),
        fitted=isinstance(s.pair_mode, FitPairs),
    )
    return segment_by_equivalence(tr, s.segment_budget, s.seed)

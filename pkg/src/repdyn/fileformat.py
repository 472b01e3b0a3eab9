"""Versioned JSON files (scenarios, algebras, matrices, systems, searches),
trajectory CSV and catalog JSON lines.

Complex numbers are ``[re, im]`` pairs; matrices are row lists of them;
generator indices in files are 1-based.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .dynamics import (
    ControlPair,
    FitPairs,
    FixedPair,
    Scenario,
    ScenarioError,
    ScheduledPairs,
    Tolerances,
    TrajectoryRecord,
)
from .explorer import Catalog, CatalogEntry, SearchSpec
from .inverse import DynamicsTemplate, ScalarSystem
from .quadalgebra import NAMED, QuadraticAlgebra
from .repcheck import Family
from .symcalc import SymbolError, WeylSymbol

SCHEMA_VERSION = 1


class FormatError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


ComplexJSON = tuple[float, float]
MatrixJSON = list[list[ComplexJSON]]


class TermModel(_Strict):
    state_exponents: list[int]
    control_exponents: list[int] = []
    coeff: ComplexJSON
    const_label: Optional[str] = None


class AEntry(_Strict):
    i: int
    j: int
    k: int
    l: int
    coeff: ComplexJSON


class BEntry(_Strict):
    i: int
    j: int
    k: int
    coeff: ComplexJSON


class CEntry(_Strict):
    i: int
    j: int
    coeff: ComplexJSON


class AlgebraBody(_Strict):
    m: int
    A: list[AEntry] = []
    B: list[BEntry] = []
    C: list[CEntry] = []


class AlgebraFile(_Strict):
    schema_version: Literal[1] = 1
    kind: Literal["algebra"] = "algebra"
    m: int
    A: list[AEntry] = []
    B: list[BEntry] = []
    C: list[CEntry] = []


class MatricesFile(_Strict):
    schema_version: Literal[1] = 1
    kind: Literal["matrices"] = "matrices"
    matrices: list[MatrixJSON]


class ConstantsFile(_Strict):
    schema_version: Literal[1] = 1
    kind: Literal["constants"] = "constants"
    constants: dict[str, MatrixJSON]


class ControlRow(_Strict):
    t: float
    u: list[ComplexJSON]


class FixedModel(_Strict):
    mode: Literal["fixed"]
    algebra: AlgebraBody


class ScheduleRow(_Strict):
    t_start: float
    t_end: float
    algebra: AlgebraBody


class ScheduledModel(_Strict):
    mode: Literal["scheduled"]
    schedule: list[ScheduleRow]


class FitModel(_Strict):
    mode: Literal["fit"]
    family: str = "B"


class TolerancesModel(_Strict):
    residual: float = 1e-8
    projection: float = 1e-10
    projection_max_iter: int = 20


class ScenarioFile(_Strict):
    schema_version: Literal[1] = 1
    kind: Literal["scenario"] = "scenario"
    m: int
    n: int
    p: int = 0
    symbols: list[list[TermModel]]
    constants: dict[str, MatrixJSON] = {}
    X0: Optional[list[MatrixJSON]] = None
    t0: Optional[float] = None
    t1: Optional[float] = None
    h: Optional[float] = None
    control: list[ControlRow] = []
    pair_mode: Annotated[Union[FixedModel, ScheduledModel, FitModel], Field(discriminator="mode")]
    projection_every: int = 0
    tolerances: TolerancesModel = TolerancesModel()
    segment_budget: int = 0
    seed: int = 0


class SystemFile(_Strict):
    schema_version: Literal[1] = 1
    kind: Literal["system"] = "system"
    m: int
    p: int = 0
    phi: list[list[TermModel]]
    constants: dict[str, ComplexJSON] = {}


class SearchFile(_Strict):
    schema_version: Literal[1] = 1
    kind: Literal["search"] = "search"
    m: int = 3
    grid: list[Union[str, AlgebraBody]] = []
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


# conversions -----------------------------------------------------------------

def _cj(z) -> ComplexJSON:
    z = complex(z)
    return (z.real, z.imag)


def _mj(M) -> MatrixJSON:
    return [[_cj(z) for z in row] for row in np.asarray(M)]


def _mat(rows: MatrixJSON) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex).reshape(len(rows), -1)


def _tuple(mats: list[MatrixJSON]) -> np.ndarray:
    return np.stack([_mat(M) for M in mats])


def _symbol(terms: list[TermModel], m: int, p: int) -> WeylSymbol:
    items = []
    for t in terms:
        ctrl = tuple(t.control_exponents) or (0,) * p
        items.append(((tuple(t.state_exponents), ctrl, t.const_label), complex(*t.coeff)))
    return WeylSymbol(m, p, items)


def _terms(f: WeylSymbol) -> list[TermModel]:
    out = []
    for (s, u, lab), c in sorted(f.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or "")):
        out.append(TermModel(state_exponents=list(s), control_exponents=list(u), coeff=_cj(c), const_label=lab))
    return out


def algebra_from_model(body: AlgebraBody | AlgebraFile) -> QuadraticAlgebra:
    m = body.m
    return QuadraticAlgebra(
        m,
        {(e.i - 1, e.j - 1, e.k - 1, e.l - 1): complex(*e.coeff) for e in body.A},
        {(e.i - 1, e.j - 1, e.k - 1): complex(*e.coeff) for e in body.B},
        {(e.i - 1, e.j - 1): complex(*e.coeff) for e in body.C},
    )


def algebra_to_model(alg: QuadraticAlgebra, cls=AlgebraBody):
    return cls(
        m=alg.m,
        A=[AEntry(i=i + 1, j=j + 1, k=k + 1, l=l + 1, coeff=_cj(c)) for (i, j, k, l), c in sorted(alg.A.items())],
        B=[BEntry(i=i + 1, j=j + 1, k=k + 1, coeff=_cj(c)) for (i, j, k), c in sorted(alg.B.items())],
        C=[CEntry(i=i + 1, j=j + 1, coeff=_cj(c)) for (i, j), c in sorted(alg.C.items())],
    )


def _pair_mode(model):
    if isinstance(model, FixedModel):
        return FixedPair(ControlPair(algebra_from_model(model.algebra)))
    if isinstance(model, ScheduledModel):
        return ScheduledPairs(tuple(
            (r.t_start, r.t_end, ControlPair(algebra_from_model(r.algebra))) for r in model.schedule
        ))
    return FitPairs(Family.parse(model.family))


def _pair_mode_model(mode):
    if isinstance(mode, FixedPair):
        return FixedModel(mode="fixed", algebra=algebra_to_model(mode.pair.algebra))
    if isinstance(mode, ScheduledPairs):
        return ScheduledModel(mode="scheduled", schedule=[
            ScheduleRow(t_start=a, t_end=b, algebra=algebra_to_model(pr.algebra)) for a, b, pr in mode.schedule
        ])
    return FitModel(mode="fit", family=str(mode.family))


def scenario_from_model(f: ScenarioFile) -> Scenario:
    missing = [k for k in ("X0", "t0", "t1", "h") if getattr(f, k) is None]
    if missing:
        raise FormatError(f"scenario is missing {', '.join(missing)} (is this a template?)")
    return Scenario(
        m=f.m, n=f.n, p=f.p,
        symbols=tuple(_symbol(t, f.m, f.p) for t in f.symbols),
        constants={k: _mat(v) for k, v in f.constants.items()},
        X0=_tuple(f.X0), t0=f.t0, t1=f.t1, h=f.h,
        control=tuple((r.t, tuple(complex(*z) for z in r.u)) for r in f.control),
        pair_mode=_pair_mode(f.pair_mode),
        projection_every=f.projection_every,
        tolerances=Tolerances(**f.tolerances.model_dump()),
        segment_budget=f.segment_budget,
        seed=f.seed,
    )


def scenario_to_model(s: Scenario) -> ScenarioFile:
    return ScenarioFile(
        m=s.m, n=s.n, p=s.p,
        symbols=[_terms(f) for f in s.symbols],
        constants={k: _mj(v) for k, v in sorted(s.constants.items())},
        X0=[_mj(M) for M in s.X0], t0=s.t0, t1=s.t1, h=s.h,
        control=[ControlRow(t=t, u=[_cj(z) for z in u]) for t, u in s.control],
        pair_mode=_pair_mode_model(s.pair_mode),
        projection_every=s.projection_every,
        tolerances=TolerancesModel(**vars(s.tolerances)),
        segment_budget=s.segment_budget,
        seed=s.seed,
    )


def template_to_model(t: DynamicsTemplate) -> ScenarioFile:
    return ScenarioFile(
        m=t.m, n=t.n, p=t.p,
        symbols=[_terms(f) for f in t.symbols],
        constants={k: _mj(v) for k, v in sorted(t.constants.items())},
        pair_mode=FitModel(mode="fit", family="B"),
    )


def template_from_model(f: ScenarioFile) -> DynamicsTemplate:
    consts = {k: _mat(v) for k, v in f.constants.items()}
    for k, v in consts.items():
        if v.shape != (f.n, f.n):
            raise FormatError(f"invariant: constant {k!r} has shape {v.shape}")
    return DynamicsTemplate(f.m, f.n, f.p, tuple(_symbol(t, f.m, f.p) for t in f.symbols), consts)


def system_from_model(f: SystemFile) -> ScalarSystem:
    return ScalarSystem(
        f.m, f.p, tuple(_symbol(t, f.m, f.p) for t in f.phi), {k: complex(*v) for k, v in f.constants.items()}
    )


def system_to_model(sys: ScalarSystem) -> SystemFile:
    return SystemFile(
        m=sys.m, p=sys.p, phi=[_terms(f) for f in sys.phi],
        constants={k: _cj(v) for k, v in sorted(sys.constants.items())},
    )


def search_from_model(f: SearchFile) -> SearchSpec:
    grid = []
    for g in f.grid:
        if isinstance(g, str):
            if g not in NAMED:
                raise FormatError(f"unknown named algebra {g!r} (known: {', '.join(sorted(NAMED))})")
            grid.append(g)
        else:
            grid.append(algebra_from_model(g))
    fields = f.model_dump(exclude={"schema_version", "kind", "grid"})
    return SearchSpec(grid=tuple(grid), **fields)


# reading and writing ---------------------------------------------------------

def _read(path, model_cls):
    path = Path(path)
    text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    if isinstance(raw, dict) and "kind" in raw:
        expected = model_cls.model_fields["kind"].default
        if raw["kind"] != expected:
            raise FormatError(f"{path}: expected a {expected!r} file, got kind {raw['kind']!r}")
    try:
        return model_cls.model_validate(raw)
    except ValidationError as e:
        lines = [f"{path}: invalid {model_cls.__name__}:"]
        for err in e.errors():
            loc = ".".join(str(x) for x in err["loc"])
            lines.append(f"  field {loc}: {err['msg']}")
        raise FormatError("\n".join(lines)) from None


def _convert(path, fn, model):
    try:
        return fn(model)
    except (ScenarioError, SymbolError, ValueError) as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"{path}: {e}") from None


def dumps(model: BaseModel) -> str:
    return json.dumps(model.model_dump(mode="json"), indent=2) + "\n"


def _write(path, model: BaseModel):
    Path(path).write_text(dumps(model))


def load_scenario(path) -> Scenario:
    return _convert(path, scenario_from_model, _read(path, ScenarioFile))


def save_scenario(s: Scenario, path):
    _write(path, scenario_to_model(s))


def load_template(path) -> DynamicsTemplate:
    return _convert(path, template_from_model, _read(path, ScenarioFile))


def save_template(t: DynamicsTemplate, path):
    _write(path, template_to_model(t))


def load_algebra(path) -> QuadraticAlgebra:
    return _convert(path, algebra_from_model, _read(path, AlgebraFile))


def save_algebra(alg: QuadraticAlgebra, path):
    _write(path, algebra_to_model(alg, AlgebraFile))


def load_matrices(path) -> np.ndarray:
    f = _read(path, MatricesFile)
    try:
        return _tuple(f.matrices)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None


def save_matrices(X, path):
    _write(path, MatricesFile(matrices=[_mj(M) for M in np.asarray(X)]))


def load_constants(path) -> dict[str, np.ndarray]:
    return {k: _mat(v) for k, v in _read(path, ConstantsFile).constants.items()}


def load_system(path) -> ScalarSystem:
    return _convert(path, system_from_model, _read(path, SystemFile))


def save_system(sys: ScalarSystem, path):
    _write(path, system_to_model(sys))


def load_search(path) -> SearchSpec:
    return _convert(path, search_from_model, _read(path, SearchFile))


def _g(x: float) -> str:
    return "%.17g" % x


def trajectory_header(m: int, n: int) -> list[str]:
    cols = ["t"]
    for i in range(m):
        for r in range(n):
            for c in range(n):
                cols += [f"X{i + 1}_{r + 1}{c + 1}_re", f"X{i + 1}_{r + 1}{c + 1}_im"]
    return cols + ["max_residual", "feasible", "segment_id"]


def write_trajectory(tr: TrajectoryRecord, path):
    """CSV: t, then re/im of every entry ordered by (i, row, col), then the report."""
    _, m, n, _ = tr.states.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(m, n))
        for t, X, rep, seg in zip(tr.times, tr.states, tr.reports, tr.segment_ids):
            row = [_g(t)]
            for z in X.reshape(-1):
                row += [_g(z.real), _g(z.imag)]
            row += [_g(rep.max_residual), "1" if rep.feasible else "0", str(seg)]
            w.writerow(row)


def read_trajectory(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def catalog_entry_json(e: CatalogEntry) -> dict:
    inv = e.invariants
    return {
        "index": e.index,
        "constants": algebra_to_model(e.constants).model_dump(mode="json"),
        "invariants": {
            "b_rank": inv.b_rank,
            "killing_rank": inv.killing_rank,
            "c_rank": inv.c_rank,
            "a_flat_ranks": list(inv.a_flat_ranks),
            "contraction_charpoly": [list(_cj(z)) for z in inv.contraction_charpoly],
        },
        "pbw_pass": e.pbw_pass,
        "quotient_dims": list(e.quotient_dims),
        "rep_residual": e.rep_residual,
        "rep_norm": e.rep_norm,
        "best_rep": None if e.best_rep is None else [_mj(M) for M in e.best_rep],
        "flow_screen": [[name, r] for name, r in e.flow_screen],
    }


def write_catalog(cat: Catalog, path, seed: int):
    """One header line, then one JSON object per catalog entry."""
    with open(path, "w") as fh:
        head = {"kind": "catalog", "schema_version": SCHEMA_VERSION, "seed": seed,
                "entries": len(cat.entries), "truncated": cat.truncated}
        fh.write(json.dumps(head, sort_keys=True) + "\n")
        for e in cat.entries:
            fh.write(json.dumps(catalog_entry_json(e), sort_keys=True) + "\n")


def read_catalog(path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    return json.loads(lines[0]), [json.loads(l) for l in lines[1:]]

"""
Scenario files: JSON documents naming a group, exponents, solver settings,
measure recipes and one task. See README.md for the schema.

Parsing errors raise ScenarioError with the path of the offending field.
"""

import csv
import inspect
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .bounds import SolverConfig, frame_bounds
from .errors import FrameLabError, ScenarioError
from .group import DualCharacter, FiniteAbelianGroup, GroupElement
from .logger import get_logger
from .measure import (
    AtomicMeasure,
    DensityFunction,
    add,
    convolve,
    dirac,
    from_atoms,
    haar,
    restrict,
    reweight,
    scale,
    translate,
)
from .theorems import VERIFIERS, PerturbationConstants, VerificationReport, packing_blowup_table
from .transform import PNormConfig

logger = get_logger(__name__)

TASK_TYPES = ("bounds", "verify", "demo", "sweep")
GRID_KEYS = ("p", "q", "k")

MEASURE_ARGS = {"mu", "lam", "nu", "rho"}
ELEMENT_ARGS = {"x", "a", "g"}
CHARACTER_ARGS = {"omega"}
ELEMENT_SET_ARGS = {"subset", "X", "Y"}
CHARACTER_SET_ARGS = {"neighborhood"}
DENSITY_ARGS = {"phi": False, "psi": True}
PASSTHROUGH_ARGS = {"samples", "seed", "expected_lower", "expected_upper", "tolerance", "ks"}
INJECTED_ARGS = {"norms", "solver", "group"}


def _fail(message: str, path: str):
    raise ScenarioError(message, path)


def _require(mapping: Mapping, key: str, path: str):
    if not isinstance(mapping, Mapping):
        _fail("expected an object", path)
    if key not in mapping:
        _fail("required field is missing", f"{path}.{key}" if path else key)
    return mapping[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(f"expected a number, got {value!r}", path)
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(f"expected an integer, got {value!r}", path)
    return value


def parse_group(value, path: str = "group") -> FiniteAbelianGroup:
    if isinstance(value, int) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        _fail("expected a nonempty list of moduli", path)
    moduli = [_integer(n, f"{path}[{i}]") for i, n in enumerate(value)]
    try:
        return FiniteAbelianGroup(tuple(moduli))
    except FrameLabError as err:
        raise ScenarioError(str(err), path) from err


def parse_norms(document: Mapping, path: str = "") -> PNormConfig:
    values = {}
    for name in ("p", "q"):
        where = f"{path}.{name}" if path else name
        values[name] = _number(_require(document, name, path), where)
        if not 1 < values[name] < float("inf"):
            _fail(f"{name} must lie in (1, inf), got {values[name]:g}", where)
    return PNormConfig(values["p"], values["q"])


def parse_solver(document: Optional[Mapping], seed_override: Optional[int] = None) -> SolverConfig:
    document = document or {}
    if not isinstance(document, Mapping):
        _fail("expected an object", "solver")
    seed = seed_override if seed_override is not None else document.get("seed")
    if seed is None:
        _fail("a seed is required (or pass --seed)", "solver.seed")
    seed = _integer(seed, "solver.seed")
    overrides = {}
    for key, kind in (("restarts", _integer), ("max_iterations", _integer), ("workers", _integer),
                      ("tolerance", _number), ("step_size", _number), ("step_shrink", _number)):
        if key in document:
            overrides[key] = kind(document[key], f"solver.{key}")
    unknown = set(document) - set(overrides) - {"seed"}
    if unknown:
        _fail(f"unknown solver field(s) {sorted(unknown)}", "solver")
    try:
        return SolverConfig.from_config(seed, **overrides)
    except ValueError as err:
        raise ScenarioError(str(err), "solver") from err


class MeasureBuilder:
    """Resolves measure recipes against one group and a table of named recipes."""

    def __init__(self, group: FiniteAbelianGroup, named: Optional[Mapping[str, Any]] = None):
        self.group = group
        self.named = dict(named or {})
        self._resolved: Dict[str, AtomicMeasure] = {}
        self._resolving: List[str] = []

    def point(self, coords, path: str, dual: bool = False):
        if isinstance(coords, bool) or not isinstance(coords, (int, list)):
            _fail(f"expected coordinates, got {coords!r}", path)
        try:
            return self.group.character(coords) if dual else self.group.element(coords)
        except (FrameLabError, TypeError) as err:
            raise ScenarioError(str(err), path) from err

    def points(self, value, path: str, dual: bool = False) -> frozenset:
        if value == "all":
            return frozenset(self.group.characters() if dual else self.group.elements())
        if not isinstance(value, list):
            _fail("expected a list of coordinates or \"all\"", path)
        return frozenset(self.point(c, f"{path}[{i}]", dual) for i, c in enumerate(value))

    def named_measure(self, name: str, path: str) -> AtomicMeasure:
        if name in self._resolved:
            return self._resolved[name]
        if name not in self.named:
            _fail(f"unknown measure {name!r}", path)
        if name in self._resolving:
            _fail(f"circular reference through {' -> '.join(self._resolving + [name])}", path)
        self._resolving.append(name)
        try:
            measure = self.measure(self.named[name], f"measures.{name}")
        finally:
            self._resolving.pop()
        self._resolved[name] = measure
        return measure

    def all_named(self) -> Dict[str, AtomicMeasure]:
        return {name: self.named_measure(name, f"measures.{name}") for name in self.named}

    def measure(self, recipe, path: str, dual: bool = False) -> AtomicMeasure:
        if isinstance(recipe, str):
            return self.named_measure(recipe, path)
        if not isinstance(recipe, Mapping):
            _fail("expected a measure recipe object or name", path)
        if "ref" in recipe:
            return self.named_measure(recipe["ref"], f"{path}.ref")
        dual = bool(recipe.get("dual", dual))
        if "atoms" in recipe:
            return self._atoms(recipe["atoms"], f"{path}.atoms", dual)

        kind = _require(recipe, "kind", path)
        try:
            if kind == "haar":
                normalization = recipe.get("normalization", "counting")
                if normalization not in ("counting", "probability"):
                    _fail("expected \"counting\" or \"probability\"", f"{path}.normalization")
                return haar(self.group, normalization, dual=dual)
            if kind == "dirac":
                return dirac(self.group, self.point(_require(recipe, "at", path), f"{path}.at", dual))
            if kind in ("convolve", "add"):
                parts = _require(recipe, "of", path)
                if not isinstance(parts, list) or not parts:
                    _fail("expected a nonempty list of recipes", f"{path}.of")
                measures = [self.measure(r, f"{path}.of[{i}]", dual) for i, r in enumerate(parts)]
                combine = convolve if kind == "convolve" else add
                result = measures[0]
                for other in measures[1:]:
                    result = combine(result, other)
                return result
            if kind == "translate":
                base = self.measure(_require(recipe, "measure", path), f"{path}.measure", dual)
                return translate(base, self.point(_require(recipe, "by", path), f"{path}.by", base.on_dual))
            if kind == "restrict":
                base = self.measure(_require(recipe, "measure", path), f"{path}.measure", dual)
                return restrict(base, self.points(_require(recipe, "to", path), f"{path}.to", base.on_dual))
            if kind == "reweight":
                base = self.measure(_require(recipe, "measure", path), f"{path}.measure", dual)
                return reweight(base, self.density(_require(recipe, "density", path), f"{path}.density", base.on_dual))
            if kind == "scale":
                base = self.measure(_require(recipe, "measure", path), f"{path}.measure", dual)
                return scale(base, _number(_require(recipe, "factor", path), f"{path}.factor"))
            if kind == "random":
                return self._random(recipe, path, dual)
        except ScenarioError:
            raise
        except FrameLabError as err:
            raise ScenarioError(str(err), path) from err
        _fail(f"unknown measure kind {kind!r}", f"{path}.kind")

    def _atoms(self, atoms, path: str, dual: bool) -> AtomicMeasure:
        if not isinstance(atoms, list):
            _fail("expected a list of [coords, weight] pairs", path)
        pairs = []
        for i, atom in enumerate(atoms):
            if not isinstance(atom, list) or len(atom) != 2:
                _fail("expected [coords, weight]", f"{path}[{i}]")
            point = self.point(atom[0], f"{path}[{i}][0]", dual)
            weight = _number(atom[1], f"{path}[{i}][1]")
            pairs.append((point.coords, weight))
        try:
            return from_atoms(self.group, pairs, dual=dual)
        except FrameLabError as err:
            raise ScenarioError(str(err), path) from err

    def _random(self, recipe: Mapping, path: str, dual: bool) -> AtomicMeasure:
        support = sorted(self.points(recipe.get("support", "all"), f"{path}.support", dual))
        seed = _integer(_require(recipe, "seed", path), f"{path}.seed")
        low = _number(recipe.get("low", 0.1), f"{path}.low")
        high = _number(recipe.get("high", 1.0), f"{path}.high")
        if not 0 <= low < high:
            _fail(f"need 0 <= low < high, got low={low:g}, high={high:g}", path)
        weights = np.random.default_rng(seed).uniform(low, high, len(support))
        return AtomicMeasure(self.group, dict(zip(support, weights)), DualCharacter if dual else GroupElement)

    def density(self, value, path: str, dual: bool = False) -> DensityFunction:
        try:
            if isinstance(value, Mapping):
                if "constant" in value:
                    points = self.group.characters() if dual else self.group.elements()
                    return DensityFunction.constant(points, _number(value["constant"], f"{path}.constant"))
                value = _require(value, "values", path)
                path = f"{path}.values"
            if not isinstance(value, list):
                _fail("expected [[coords, value], ...] or {\"constant\": c}", path)
            values = {}
            for i, entry in enumerate(value):
                if not isinstance(entry, list) or len(entry) != 2:
                    _fail("expected [coords, value]", f"{path}[{i}]")
                values[self.point(entry[0], f"{path}[{i}][0]", dual)] = _number(entry[1], f"{path}[{i}][1]")
            return DensityFunction(values)
        except ScenarioError:
            raise
        except FrameLabError as err:
            raise ScenarioError(str(err), path) from err


def _complex_entry(value, path: str) -> complex:
    if isinstance(value, list) and len(value) == 2:
        return complex(_number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]"))
    return complex(_number(value, path))


def parse_operator(value, size: int, path: str) -> np.ndarray:
    """A dense matrix: rows of numbers or [re, im] pairs, {"identity": c} or {"diagonal": [...]}."""
    if isinstance(value, Mapping):
        if "identity" in value:
            return _complex_entry(value["identity"], f"{path}.identity") * np.eye(size, dtype=complex)
        if "diagonal" in value:
            entries = value["diagonal"]
            if not isinstance(entries, list):
                _fail("expected a list", f"{path}.diagonal")
            return np.diag([_complex_entry(v, f"{path}.diagonal[{i}]") for i, v in enumerate(entries)])
        _fail("expected \"identity\" or \"diagonal\"", path)
    if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
        _fail("expected a list of rows", path)
    width = len(value[0])
    rows = []
    for i, row in enumerate(value):
        if len(row) != width:
            _fail(f"row has {len(row)} entries, expected {width}", f"{path}[{i}]")
        rows.append([_complex_entry(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows, dtype=complex)


@dataclass(frozen=True)
class Scenario:
    id: str
    group: FiniteAbelianGroup
    norms: PNormConfig
    solver: SolverConfig
    measures: Dict[str, AtomicMeasure]
    task: Dict[str, Any]
    builder: MeasureBuilder = field(repr=False, compare=False, default=None)


def parse_scenario(document, seed_override: Optional[int] = None, source: Optional[str] = None) -> Scenario:
    if not isinstance(document, Mapping):
        _fail("scenario must be a JSON object", source or "")
    scenario_id = document.get("id") or (source or "scenario")
    if not isinstance(scenario_id, str):
        _fail("expected a string", "id")
    group = parse_group(_require(document, "group", ""))
    norms = parse_norms(document)
    solver = parse_solver(document.get("solver"), seed_override)
    recipes = document.get("measures", {})
    if not isinstance(recipes, Mapping):
        _fail("expected an object of named recipes", "measures")
    builder = MeasureBuilder(group, recipes)
    measures = builder.all_named()
    task = _require(document, "task", "")
    if not isinstance(task, Mapping):
        _fail("expected an object", "task")
    kind = _require(task, "type", "task")
    if kind not in TASK_TYPES:
        _fail(f"unknown task type {kind!r}; expected one of {list(TASK_TYPES)}", "task.type")
    if kind == "sweep":
        grid = _require(task, "grid", "task")
        _sweep_points(grid)
    return Scenario(scenario_id, group, norms, solver, measures, dict(task), builder)


def load_scenario(path: str, seed_override: Optional[int] = None) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except OSError as err:
        raise ScenarioError(f"cannot read scenario: {err.strerror}", path) from err
    except json.JSONDecodeError as err:
        raise ScenarioError(f"invalid JSON at line {err.lineno}: {err.msg}", path) from err
    logger.info("Loaded scenario", path=path)
    return parse_scenario(document, seed_override, source=path)


# tasks


@dataclass
class TaskResult:
    """Reports and table rows produced by one scenario task."""

    task: str
    reports: List[VerificationReport] = field(default_factory=list)
    records: List[Dict[str, Any]] = field(default_factory=list)
    table: Optional[str] = None


def rows_to_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    columns: List[str] = []
    for row in rows:
        columns.extend(key for key in row if key not in columns)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: (repr(value) if isinstance(value, float) else value) for key, value in row.items()})
    return buffer.getvalue()


def _resolve_argument(name: str, value, scenario: Scenario, resolved: Mapping[str, Any], path: str):
    builder = scenario.builder
    if name in MEASURE_ARGS:
        return builder.measure(value, path)
    if name in ELEMENT_ARGS:
        return builder.point(value, path)
    if name in CHARACTER_ARGS:
        return builder.point(value, path, dual=True)
    if name in ELEMENT_SET_ARGS:
        return builder.points(value, path)
    if name in CHARACTER_SET_ARGS:
        return builder.points(value, path, dual=True)
    if name in DENSITY_ARGS:
        return builder.density(value, path, DENSITY_ARGS[name])
    if name == "S":
        inner = resolved.get("rho", resolved.get("lam"))
        return parse_operator(value, len(inner) if inner is not None else 0, path)
    if name == "constants":
        if not isinstance(value, Mapping):
            _fail("expected {\"C\": .., \"D\": .., \"M\": .., \"quadratic\": bool}", path)
        try:
            return PerturbationConstants(
                C=_number(value.get("C", 0.0), f"{path}.C"),
                D=_number(value.get("D", 0.0), f"{path}.D"),
                M=_number(value.get("M", 0.0), f"{path}.M"),
                quadratic=bool(value.get("quadratic", False)),
            )
        except ValueError as err:
            raise ScenarioError(str(err), path) from err
    if name in PASSTHROUGH_ARGS:
        if name == "ks":
            if not isinstance(value, list) or not value:
                _fail("expected a nonempty list of levels", path)
            return [_integer(k, f"{path}[{i}]") for i, k in enumerate(value)]
        if name in ("samples", "seed"):
            return _integer(value, path)
        return _number(value, path)
    _fail(f"unsupported argument {name!r}", path)


def _ordered_arguments(args: Mapping[str, Any]) -> List[str]:
    # the operator S is sized by the measures, so resolve them first
    return sorted(args, key=lambda name: (name == "S", name))


def run_verify(scenario: Scenario, task: Mapping[str, Any], norms: PNormConfig) -> VerificationReport:
    theorem = _require(task, "theorem", "task")
    if theorem not in VERIFIERS:
        _fail(f"unknown theorem id {theorem!r}", "task.theorem")
    verifier = VERIFIERS[theorem]
    parameters = inspect.signature(verifier).parameters
    args = task.get("args", {})
    if not isinstance(args, Mapping):
        _fail("expected an object", "task.args")

    resolved: Dict[str, Any] = {}
    for name in _ordered_arguments(args):
        path = f"task.args.{name}"
        if name not in parameters or name in INJECTED_ARGS:
            _fail(f"{theorem} takes no argument {name!r}", path)
        resolved[name] = _resolve_argument(name, args[name], scenario, resolved, path)
    injected = {"norms": norms, "solver": scenario.solver, "group": scenario.group}
    for name, value in injected.items():
        if name in parameters:
            resolved[name] = value
    missing = [name for name, p in parameters.items()
               if p.default is inspect.Parameter.empty and name not in resolved]
    if missing:
        _fail(f"{theorem} needs argument(s) {missing}", "task.args")

    report = verifier(**resolved)
    return report.with_scenario(scenario.id, theorem)


def run_bounds(scenario: Scenario, task: Mapping[str, Any], norms: PNormConfig) -> Tuple[Dict[str, Any], List[VerificationReport]]:
    mu = scenario.builder.measure(task.get("mu", "mu"), "task.mu")
    nu = scenario.builder.measure(task.get("nu", "nu"), "task.nu")
    estimate = frame_bounds(mu, nu, norms, scenario.solver)
    record = estimate.to_dict()
    reports = []
    expect = task.get("expect")
    if expect is not None:
        verify_task = {"theorem": "ex2.9", "args": {"mu": task.get("mu", "mu"), "nu": task.get("nu", "nu")}}
        if not isinstance(expect, Mapping):
            _fail("expected {\"lower\": .., \"upper\": .., \"tolerance\": ..}", "task.expect")
        for key, arg in (("lower", "expected_lower"), ("upper", "expected_upper"), ("tolerance", "tolerance")):
            if key in expect:
                verify_task["args"][arg] = expect[key]
        reports.append(run_verify(scenario, verify_task, norms))
    return record, reports


def _demo_table(scenario: Scenario, task: Mapping[str, Any], norms: PNormConfig, ks: Optional[Sequence[int]] = None):
    name = task.get("name", "packing-blowup")
    if name != "packing-blowup":
        _fail(f"unknown demo {name!r}", "task.name")
    if ks is None:
        raw = _require(task, "k", "task")
        raw = raw if isinstance(raw, list) else [raw]
        if not raw:
            _fail("expected at least one level", "task.k")
        ks = [_integer(k, f"task.k[{i}]") for i, k in enumerate(raw)]
    recipe = task.get("nu")
    nu_factory = None
    if recipe is not None:
        def nu_factory(group, recipe=recipe):
            return MeasureBuilder(group, {}).measure(recipe, "task.nu", dual=True)
    return packing_blowup_table(ks, nu_factory, norms, scenario.solver)


def _sweep_points(grid) -> List[Dict[str, Any]]:
    if not isinstance(grid, Mapping) or not grid:
        _fail("grid must be a nonempty object", "task.grid")
    unknown = set(grid) - set(GRID_KEYS)
    if unknown:
        _fail(f"unsupported grid key(s) {sorted(unknown)}; expected some of {list(GRID_KEYS)}", "task.grid")
    keys = [key for key in GRID_KEYS if key in grid]
    axes = []
    for key in keys:
        values = grid[key]
        if not isinstance(values, list) or not values:
            _fail("grid axis must be a nonempty list", f"task.grid.{key}")
        axes.append([_number(v, f"task.grid.{key}[{i}]") for i, v in enumerate(values)])
    return [dict(zip(keys, point)) for point in itertools.product(*axes)]


def run_sweep(scenario: Scenario, task: Mapping[str, Any]) -> TaskResult:
    base = _require(task, "base", "task")
    if not isinstance(base, Mapping) or base.get("type") not in ("bounds", "verify", "demo"):
        _fail("base must be a bounds, verify or demo task", "task.base")
    result = TaskResult("sweep")
    for point in _sweep_points(task["grid"]):
        p = point.get("p", scenario.norms.p)
        q = point.get("q", scenario.norms.q)
        try:
            norms = PNormConfig(p, q)
        except ValueError as err:
            raise ScenarioError(str(err), "task.grid") from err
        row: Dict[str, Any] = {"p": p, "q": q}
        rows = [row]
        kind = base["type"]
        if kind == "bounds":
            record, reports = run_bounds(scenario, base, norms)
            row.update(A_est=record["A_est"], B_est=record["B_est"], exact=record["exact"],
                       converged=record["converged"])
            result.reports.extend(reports)
        elif kind == "verify":
            report = run_verify(scenario, base, norms)
            row.update(theorem=report.theorem, outcome=report.outcome, exact=report.exact)
            row.update(report.quantities)
            result.reports.append(report)
        else:
            ks = [int(point["k"])] if "k" in point else None
            table = _demo_table(scenario, base, norms, ks)
            # one row per growth level
            rows = [dict(row, k=growth.k, ratio=growth.ratio, floor=growth.floor, lower=growth.lower,
                         upper=growth.upper, passed=growth.passed) for growth in table.rows]
            result.reports.append(table.report().with_scenario(scenario.id))
        result.records.extend(rows)
    result.table = rows_to_csv(result.records)
    logger.info("Sweep finished", scenario=scenario.id, rows=len(result.records))
    return result


def run_task(scenario: Scenario) -> TaskResult:
    """Execute the scenario's task with its own exponents and solver settings."""
    task = scenario.task
    kind = task["type"]
    if kind == "bounds":
        record, reports = run_bounds(scenario, task, scenario.norms)
        return TaskResult("bounds", reports, [record], rows_to_csv([
            {key: value for key, value in record.items() if not key.endswith("witness") and key != "warnings"}
        ]))
    if kind == "verify":
        report = run_verify(scenario, task, scenario.norms)
        return TaskResult("verify", [report], [report.to_dict()], rows_to_csv([_flat_report(report)]))
    if kind == "demo":
        table = _demo_table(scenario, task, scenario.norms)
        records = [{"k": r.k, "ratio": r.ratio, "floor": r.floor, "lower": r.lower, "upper": r.upper,
                    "shift": list(r.shift.coords), "passed": r.passed} for r in table.rows]
        return TaskResult("demo", [table.report().with_scenario(scenario.id)], records, table.to_csv())
    return run_sweep(scenario, task)


def _flat_report(report: VerificationReport) -> Dict[str, Any]:
    row: Dict[str, Any] = {"theorem": report.theorem, "scenario": report.scenario,
                           "outcome": report.outcome, "exact": report.exact, "tolerance": report.tolerance}
    row.update(report.quantities)
    return row

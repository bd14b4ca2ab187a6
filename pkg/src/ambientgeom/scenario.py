"""Scenario files: TOML documents describing a manifold, an alpha family and scale functions.

Minimal example::

    name = "flat_plane"

    [manifold]
    coordinates = ["x", "y"]
    bounds = [[-2, 2], [-2, 2]]
    metric = [["1", "0"], ["0", "1"]]

    [alpha]
    components = [["1", "0"], ["0", "1"]]
    epsilon = 1.0

    [scale]
    u = ["0", "0.3*x"]

Bounds may be numbers, ``"inf"``/``"-inf"`` or constant expressions such as
``"2*pi"``.  Optional tables: ``constants``, ``embedding``, ``gauss_bonnet``,
``cotton``, ``suites`` and ``sampling`` (with a nested ``tolerances`` table).
"""

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import tomli

from . import expr as ex
from .ambient import AlphaFamily
from .chart import Chart, TensorField, parse_expression
from .errors import ExpressionError, GeometryError, ScenarioError
from .riemann import MetricField

SUITES = ("ambient_axioms", "connection", "ricci_Q", "weingarten", "recovery",
          "cotton", "gauss", "fibers", "minkowski", "gauss_bonnet")
DEFAULT_SEED = 20210728
DEFAULT_POINTS = 200
DEFAULT_IMMERSION_POINTS = 100
SCENARIO_SUFFIX = ".scn"


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    chart: Chart
    metric: MetricField
    alpha: AlphaFamily
    scale: tuple  # (source, ScalarField) pairs
    suites: tuple = SUITES
    seed: int = DEFAULT_SEED
    points: int = DEFAULT_POINTS
    immersion_points: int = DEFAULT_IMMERSION_POINTS
    tolerances: dict = field(default_factory=dict)
    sampling_box: tuple = None
    embedding: tuple = None
    gauss_bonnet: dict = None
    cotton_expectation: str = "flat"
    description: str = ""
    source: str = ""

    @property
    def dim(self):
        return self.chart.dim


def _require(table, key, path, kind=None):
    if key not in table:
        raise ScenarioError("missing required key", f"{path}.{key}" if path else key)
    val = table[key]
    if kind is not None and not isinstance(val, kind):
        raise ScenarioError(f"expected {_kind_name(kind)}", f"{path}.{key}" if path else key)
    return val


def _kind_name(kind):
    kinds = kind if isinstance(kind, tuple) else (kind,)
    return " or ".join(k.__name__ for k in kinds)


def _number(value, path, constants):
    if isinstance(value, bool):
        raise ScenarioError("expected a number", path)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity"):
            return math.inf
        if text in ("-inf", "-infinity"):
            return -math.inf
        try:
            node = ex.parse(value, (), constants)
            return float(ex.evaluate(node, {}, 0, 0))
        except ExpressionError as exc:
            exc.key_path = path
            raise
    raise ScenarioError("expected a number or constant expression", path)


def _matrix(value, n, path):
    if not isinstance(value, list) or len(value) != n:
        raise ScenarioError(f"expected {n} rows", path)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != n:
            raise ScenarioError(f"expected {n} entries", f"{path}[{i}]")
        for j, entry in enumerate(row):
            if not isinstance(entry, (str, int, float)) or isinstance(entry, bool):
                raise ScenarioError("expected an expression string", f"{path}[{i}][{j}]")
    return [[str(e) for e in row] for row in value]


def _parse_field(src, chart, constants, path, params=()):
    try:
        return parse_expression(str(src), chart, constants, params)
    except ExpressionError as exc:
        exc.key_path = path
        raise


def _box(value, n, path, constants):
    if not isinstance(value, list) or len(value) != n:
        raise ScenarioError(f"expected {n} intervals", path)
    box = []
    for i, pair in enumerate(value):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ScenarioError("expected [low, high]", f"{path}[{i}]")
        lo, hi = (_number(v, f"{path}[{i}][{k}]", constants) for k, v in enumerate(pair))
        if not lo < hi:
            raise ScenarioError("empty interval", f"{path}[{i}]")
        box.append((lo, hi))
    return tuple(box)


def parse_scenario(text, source="<string>"):
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError(f"invalid TOML: {exc}") from None

    name = doc.get("name", Path(source).stem)
    if not isinstance(name, str) or not name:
        raise ScenarioError("expected a non-empty string", "name")

    constants = doc.get("constants", {})
    if not isinstance(constants, dict):
        raise ScenarioError("expected a table", "constants")
    for key, val in constants.items():
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ScenarioError("constants must be numbers", f"constants.{key}")
    constants = {k: float(v) for k, v in constants.items()}

    man = _require(doc, "manifold", "", dict)
    coords = _require(man, "coordinates", "manifold", list)
    if not coords or not all(isinstance(c, str) for c in coords):
        raise ScenarioError("expected a list of identifiers", "manifold.coordinates")
    n = len(coords)
    bounds = _box(_require(man, "bounds", "manifold", list), n, "manifold.bounds", constants)
    try:
        chart = Chart(str(man.get("chart", name)), tuple(coords), bounds)
    except GeometryError as exc:
        raise ScenarioError(str(exc), "manifold") from None
    metric_src = _matrix(_require(man, "metric", "manifold"), n, "manifold.metric")
    metric_fields = [[_parse_field(metric_src[i][j], chart, constants, f"manifold.metric[{i}][{j}]")
                      for j in range(n)] for i in range(n)]
    try:
        metric = MetricField(chart, TensorField(chart, 0, 2, tuple(f for row in metric_fields for f in row)))
    except GeometryError as exc:
        raise ScenarioError(str(exc), "manifold.metric") from None

    al = _require(doc, "alpha", "", dict)
    eps = _number(_require(al, "epsilon", "alpha"), "alpha.epsilon", constants)
    if not eps > 0 or math.isinf(eps):
        raise ScenarioError("epsilon must be a positive finite number", "alpha.epsilon")
    alpha_src = _matrix(_require(al, "components", "alpha"), n, "alpha.components")
    alpha_fields = [[_parse_field(alpha_src[i][j], chart, constants, f"alpha.components[{i}][{j}]",
                                  params=(AlphaFamily.PARAM,)) for j in range(n)] for i in range(n)]
    try:
        alpha = AlphaFamily(chart, alpha_fields, eps)
    except GeometryError as exc:
        raise ScenarioError(str(exc), "alpha.components") from None

    sc = _require(doc, "scale", "", dict)
    us = _require(sc, "u", "scale", list)
    if not us:
        raise ScenarioError("at least one scale function required", "scale.u")
    scale = tuple((str(s), _parse_field(s, chart, constants, f"scale.u[{i}]")) for i, s in enumerate(us))

    suites = SUITES
    if "suites" in doc:
        run = _require(doc["suites"], "run", "suites", list)
        unknown = [s for s in run if s not in SUITES]
        if unknown:
            raise ScenarioError(f"unknown suites {unknown}", "suites.run")
        suites = tuple(s for s in SUITES if s in run)

    samp = doc.get("sampling", {})
    if not isinstance(samp, dict):
        raise ScenarioError("expected a table", "sampling")
    seed = samp.get("seed", DEFAULT_SEED)
    points = samp.get("points", DEFAULT_POINTS)
    ipoints = samp.get("immersion_points", DEFAULT_IMMERSION_POINTS)
    for key, val in (("seed", seed), ("points", points), ("immersion_points", ipoints)):
        if isinstance(val, bool) or not isinstance(val, int) or val < (0 if key == "seed" else 1):
            raise ScenarioError("expected a non-negative integer" if key == "seed" else "expected a positive integer",
                                f"sampling.{key}")
    box = None
    if "box" in samp:
        box = _box(samp["box"], n, "sampling.box", constants)
        for i, ((lo, hi), (blo, bhi)) in enumerate(zip(box, chart.bounds)):
            if not (blo < lo and hi < bhi):
                raise ScenarioError("sampling box must lie inside the chart", f"sampling.box[{i}]")
    tolerances = samp.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ScenarioError("expected a table", "sampling.tolerances")
    for key, val in tolerances.items():
        if isinstance(val, bool) or not isinstance(val, (int, float)) or val < 0:
            raise ScenarioError("tolerance must be a non-negative number", f"sampling.tolerances.{key}")
    tolerances = {k: float(v) for k, v in tolerances.items()}

    embedding = None
    if "embedding" in doc:
        comps = _require(doc["embedding"], "components", "embedding", list)
        if len(comps) != n + 1:
            raise ScenarioError(f"expected {n + 1} components", "embedding.components")
        embedding = tuple(_parse_field(s, chart, constants, f"embedding.components[{i}]")
                          for i, s in enumerate(comps))

    gb = None
    if "gauss_bonnet" in doc:
        tab = doc["gauss_bonnet"]
        chi = _require(tab, "euler_characteristic", "gauss_bonnet", int)
        gb = {"euler_characteristic": int(chi)}
        if "box" in tab:
            gb["box"] = _box(tab["box"], n, "gauss_bonnet.box", constants)
        nodes = tab.get("nodes", 400)
        if isinstance(nodes, bool) or not isinstance(nodes, int) or nodes < 1:
            raise ScenarioError("expected a positive integer", "gauss_bonnet.nodes")
        gb["nodes"] = nodes

    expectation = doc.get("cotton", {}).get("expect", "flat")
    if expectation not in ("flat", "nonflat"):
        raise ScenarioError("expected 'flat' or 'nonflat'", "cotton.expect")

    return ScenarioSpec(name=name, chart=chart, metric=metric, alpha=alpha, scale=scale,
                        suites=suites, seed=seed, points=points, immersion_points=ipoints,
                        tolerances=tolerances, sampling_box=box, embedding=embedding,
                        gauss_bonnet=gb, cotton_expectation=expectation,
                        description=str(doc.get("description", "")), source=str(source))


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", str(path)) from None
    return parse_scenario(text, str(path))


def bundled_scenarios():
    """Names of the scenarios shipped with the package."""
    root = resources.files("ambientgeom") / "scenarios"
    return sorted(p.name[: -len(SCENARIO_SUFFIX)] for p in root.iterdir()
                  if p.name.endswith(SCENARIO_SUFFIX))


def load_bundled(name):
    root = resources.files("ambientgeom") / "scenarios"
    res = root / f"{name}{SCENARIO_SUFFIX}"
    if not res.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return parse_scenario(res.read_text(encoding="utf-8"), f"{name}{SCENARIO_SUFFIX}")

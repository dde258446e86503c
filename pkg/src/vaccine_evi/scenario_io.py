"""Scenario files, CSV time series and the interpretation report.

Scenario files are YAML with a fixed schema::

    horizon: 1.0
    grid_points: 65
    groups:
    - name: g1
      epsilon: {kind: constant, value: 0.6}
      r_v: {kind: constant, value: 0.5}
      r_inf: {kind: constant, value: 1.0}
    pi_model:
      kind: constant              # or linear_coverage
      params:
        g1: {c: {kind: constant, value: 0.2}}      # linear_coverage: {a: ..., b: ...}
    solver: {method: extragradient, gamma: null, max_iters: 5000, tol: 1.0e-10,
             oracle_fallback_resolution: 1000, polish: true}
    oracle: {resolution: 0.001, improvement_tol: 1.0e-09, max_sweeps: 200}
    output: {tol_active: 1.0e-08, saddle_samples: 500, evi_samples: 1000}

Piecewise-linear functions are ``{kind: piecewise_linear, breakpoints:
[[t0, v0], [t1, v1], ...]}``. ``solver``, ``oracle`` and ``output`` are
optional.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .duality import DualityReport, MultiplierPair, Regime, classify_regimes
from .evi_solver import SolverParams, StrategyProfile, TimeGrid
from .model import FunctionSpec, GameModel, GroupSpec, PiModel, ValidationError, validate_model
from .oracle import OracleParams

__all__ = [
    "ScenarioError",
    "OutputOptions",
    "Scenario",
    "parse_scenario",
    "load_scenario",
    "serialize_scenario",
    "CSV_HEADER",
    "timeseries_rows",
    "write_timeseries_csv",
    "read_profile_csv",
    "write_report",
]

CSV_HEADER = ["t", "group", "Q", "alpha", "beta", "u", "g", "coverage", "regime"]
TOP_KEYS = ("horizon", "grid_points", "groups", "pi_model", "solver", "oracle", "output")
REQUIRED_KEYS = ("horizon", "grid_points", "groups", "pi_model")
GROUP_KEYS = ("name", "epsilon", "r_v", "r_inf")
PI_PARAMS = {"constant": ("c",), "linear_coverage": ("a", "b")}


class ScenarioError(ValueError):
    """Malformed or invalid scenario; ``path`` names the offending key."""

    def __init__(self, message, path=None, line=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if path:
            loc.append(path)
        super().__init__(f"{': '.join(loc)}: {message}" if loc else message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class OutputOptions:
    tol_active: float = 1e-8
    saddle_samples: int = 500
    evi_samples: int = 1000


@dataclass
class Scenario:
    model: GameModel
    grid: TimeGrid
    solver: SolverParams = field(default_factory=SolverParams)
    oracle: OracleParams = field(default_factory=OracleParams)
    output: OutputOptions = field(default_factory=OutputOptions)


def _num(x, path, kind=float):
    if isinstance(x, bool) or x is None:
        raise ScenarioError(f"expected a number, got {x!r}", path)
    try:
        v = kind(x) if kind is float else int(str(x))
    except (TypeError, ValueError):
        raise ScenarioError(f"expected a number, got {x!r}", path) from None
    return v


def _mapping(x, path, allowed, required=()):
    if not isinstance(x, dict):
        raise ScenarioError(f"expected a mapping, got {type(x).__name__}", path)
    unknown = [k for k in x if k not in allowed]
    if unknown:
        raise ScenarioError(f"unknown key(s) {', '.join(map(str, unknown))}", path)
    for k in required:
        if k not in x:
            raise ScenarioError(f"missing key {k!r}", path)
    return x


def _function(x, path) -> FunctionSpec:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return FunctionSpec.constant(float(x))
    x = _mapping(x, path, ("kind", "value", "breakpoints"), ("kind",))
    try:
        if x["kind"] == "constant":
            if "value" not in x:
                raise ScenarioError("missing key 'value'", path)
            return FunctionSpec.constant(_num(x["value"], f"{path}.value"))
        if x["kind"] == "piecewise_linear":
            bps = x.get("breakpoints")
            if not isinstance(bps, list) or not all(isinstance(p, list) and len(p) == 2 for p in bps):
                raise ScenarioError("breakpoints must be a list of [t, v] pairs", f"{path}.breakpoints")
            pts = [(_num(t, f"{path}.breakpoints"), _num(v, f"{path}.breakpoints")) for t, v in bps]
            return FunctionSpec.piecewise(pts)
    except ValidationError as exc:
        raise ScenarioError(str(exc), path) from None
    raise ScenarioError(f"unknown function kind {x['kind']!r}", f"{path}.kind")


def _dataclass_from(cls, data, path, converters):
    if data is None:
        return cls()
    data = _mapping(data, path, [f.name for f in fields(cls)])
    kwargs = {}
    for name, value in data.items():
        conv = converters.get(name)
        kwargs[name] = conv(value, f"{path}.{name}") if conv else value
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ScenarioError(str(exc), path) from None


def _opt_float(x, path):
    return None if x is None else _num(x, path)


def _int(x, path):
    return _num(x, path, int)


def _bool(x, path):
    if not isinstance(x, bool):
        raise ScenarioError(f"expected true/false, got {x!r}", path)
    return x


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Raises
    ------
    ScenarioError
        YAML syntax errors (with line number), schema errors and model
        validation failures (with the offending key path).
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ScenarioError(f"syntax error: {problem}", line=line) from None
    doc = _mapping(doc, "<root>", TOP_KEYS, REQUIRED_KEYS)

    T = _num(doc["horizon"], "horizon")
    n_nodes = _num(doc["grid_points"], "grid_points", int)
    if n_nodes < 2:
        raise ScenarioError("grid_points must be at least 2", "grid_points")
    if not T > 0:
        raise ScenarioError("horizon must be positive", "horizon")

    raw_groups = doc["groups"]
    if not isinstance(raw_groups, list) or not raw_groups:
        raise ScenarioError("expected a non-empty list of groups", "groups")
    groups = []
    for j, g in enumerate(raw_groups):
        path = f"groups[{j}]"
        if isinstance(g, dict) and "name" in g:
            path += f" ({g['name']})"
        g = _mapping(g, path, GROUP_KEYS, GROUP_KEYS)
        groups.append(
            GroupSpec(
                name=str(g["name"]),
                epsilon=_function(g["epsilon"], f"{path}.epsilon"),
                r_v=_function(g["r_v"], f"{path}.r_v"),
                r_inf=_function(g["r_inf"], f"{path}.r_inf"),
            )
        )
    names = [g.name for g in groups]
    if len(set(names)) != len(names):
        raise ScenarioError("group names must be unique", "groups")

    pm = _mapping(doc["pi_model"], "pi_model", ("kind", "params"), ("kind", "params"))
    kind = pm["kind"]
    if kind not in PI_PARAMS:
        raise ScenarioError(f"unknown kind {kind!r}", "pi_model.kind")
    params = _mapping(pm["params"], "pi_model.params", names, names)
    per = {p: [] for p in PI_PARAMS[kind]}
    for name in names:
        path = f"pi_model.params.{name}"
        entry = _mapping(params[name], path, PI_PARAMS[kind], PI_PARAMS[kind])
        for p in PI_PARAMS[kind]:
            per[p].append(_function(entry[p], f"{path}.{p}"))
    pi = PiModel(kind, **per)

    try:
        model = GameModel(T, groups, pi)
        grid = TimeGrid(T, n_nodes)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    report = validate_model(model, grid)
    if not report.ok:
        raise ScenarioError("validation failed:\n  " + "\n  ".join(report.problems), "groups/pi_model")

    solver = _dataclass_from(
        SolverParams,
        doc.get("solver"),
        "solver",
        {"gamma": _opt_float, "max_iters": _int, "tol": _num, "oracle_fallback_resolution": _int, "polish": _bool},
    )
    oracle = _dataclass_from(
        OracleParams, doc.get("oracle"), "oracle", {"resolution": _num, "improvement_tol": _num, "max_sweeps": _int}
    )
    output = _dataclass_from(
        OutputOptions, doc.get("output"), "output", {"tol_active": _num, "saddle_samples": _int, "evi_samples": _int}
    )
    return Scenario(model, grid, solver, oracle, output)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def _dump_function(f: FunctionSpec) -> dict:
    if f.kind == "constant":
        return {"kind": "constant", "value": f.value}
    return {"kind": "piecewise_linear", "breakpoints": [[t, v] for t, v in f.breakpoints]}


def serialize_scenario(sc: Scenario) -> str:
    """Canonical YAML text; ``parse_scenario`` inverts it exactly."""
    m = sc.model
    pi_attrs = PI_PARAMS[m.pi.kind]
    doc = {
        "horizon": m.T,
        "grid_points": sc.grid.n_nodes,
        "groups": [
            {
                "name": g.name,
                "epsilon": _dump_function(g.epsilon),
                "r_v": _dump_function(g.r_v),
                "r_inf": _dump_function(g.r_inf),
            }
            for g in m.groups
        ],
        "pi_model": {
            "kind": m.pi.kind,
            "params": {
                name: {p: _dump_function(getattr(m.pi, p)[j]) for p in pi_attrs}
                for j, name in enumerate(m.names)
            },
        },
        "solver": asdict(sc.solver),
        "oracle": asdict(sc.oracle),
        "output": asdict(sc.output),
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=100)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{float(x) + 0.0:.12g}"


def timeseries_rows(model: GameModel, profile: StrategyProfile | None, mult: MultiplierPair | None,
                    tol_active: float = 1e-8) -> list[list[str]]:
    """Formatted CSV rows, ordered by node then group."""
    if profile is None:
        return []
    regimes = classify_regimes(profile, tol_active).labels()
    k = model.k
    alpha = mult.alpha if mult is not None else np.full(profile.values.shape, np.nan)
    beta = mult.beta if mult is not None else np.full(profile.values.shape, np.nan)
    rows = []
    for n, t in enumerate(profile.grid.nodes):
        s = model.at(t)
        q = profile.values[n]
        u, g, p = s.payoff(q), s.F(q), s.coverage(q)
        for i in range(k):
            rows.append([_fmt(t), model.names[i], _fmt(q[i]), _fmt(alpha[n, i]), _fmt(beta[n, i]),
                         _fmt(u[i]), _fmt(g[i]), _fmt(p), regimes[n, i]])
    return rows


def write_timeseries_csv(model: GameModel, profile: StrategyProfile | None, mult: MultiplierPair | None,
                         path, tol_active: float = 1e-8) -> int:
    """Write ``t,group,Q,alpha,beta,u,g,coverage,regime``; returns the row count."""
    rows = timeseries_rows(model, profile, mult, tol_active)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
    return len(rows)


def read_profile_csv(path, model: GameModel, grid: TimeGrid) -> StrategyProfile:
    """Re-import the ``Q`` column of a time-series CSV onto ``grid``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames[:3]) != CSV_HEADER[:3]:
            raise ScenarioError("not a time-series CSV (bad header)", str(path))
        col = {name: i for i, name in enumerate(model.names)}
        values = np.full((grid.n_nodes, model.k), np.nan)
        for line, row in enumerate(reader, start=2):
            t = float(row["t"])
            n = int(np.argmin(np.abs(grid.nodes - t)))
            if abs(grid.nodes[n] - t) > 1e-9 * max(1.0, grid.T) or row["group"] not in col:
                raise ScenarioError(f"row does not match the scenario grid/groups: {row}", str(path), line)
            values[n, col[row["group"]]] = float(row["Q"])
    if np.isnan(values).any():
        raise ScenarioError("CSV does not cover every (node, group)", str(path))
    return StrategyProfile(grid, values)


def _case_line(t, name, q, a, b, g, regime) -> str:
    head = f"t={_fmt(t)} {name}: Q={_fmt(q)} [{regime}]"
    if regime == Regime.E_MINUS.label:
        if a > 0:
            return (f"{head} case (a): alpha*={_fmt(a)} > 0, so Q=0: this group's vaccination "
                    f"probability is zero")
        return f"{head} case (d): Q<1, beta*=0 and alpha*=-du/dP={_fmt(a)} (indifferent at the bound)"
    if regime == Regime.E_PLUS.label:
        if b > 0:
            return (f"{head} case (c): beta*={_fmt(b)} > 0, so Q=1: this group's vaccination "
                    f"probability is at its upper bound")
        return f"{head} case (b): Q>0, alpha*=0 and beta*=du/dP={_fmt(b)} (indifferent at the bound)"
    return (f"{head} cases (b),(d): interior, alpha*=beta*=0; marginal payoff du/dP={_fmt(-g)} "
            f"equals beta*={_fmt(b)} and -du/dP equals alpha*={_fmt(a)}")


def write_report(model: GameModel, profile: StrategyProfile, mult: MultiplierPair | None,
                 report: DualityReport) -> str:
    """Human-readable verification summary plus one interpretation per (node, group)."""
    out = io.StringIO()
    out.write("Vaccination game equilibrium report\n")
    out.write(f"groups: {', '.join(model.names)}; pi model: {model.pi.kind}; "
              f"horizon {_fmt(model.T)}; {profile.grid.n_nodes} nodes\n\n")
    out.write("Verification\n")
    out.write(f"  max natural residual     : {report.max_natural_residual:.3e}\n")
    out.write(f"  KKT residual             : {report.kkt_residual:.3e}\n")
    out.write(f"  complementarity residual : {report.complementarity_residual:.3e}\n")
    out.write(f"  primal psi(Q)            : {report.primal:.3e}\n")
    out.write(f"  dual value               : {report.dual:.3e}\n")
    out.write(f"  duality gap              : {report.duality_gap:.3e}\n")
    out.write(f"  sign conditions          : {report.sign_condition_verdict}\n")
    out.write(f"  saddle-point samples     : {report.saddle_samples_passed}/{report.saddle_samples_total}"
              f" ({'pass' if report.saddle_passed else 'fail'})\n")
    for note in report.notes:
        out.write(f"  note: {note}\n")
    out.write("\nRelations used: alpha*, beta* >= 0 (sign); alpha* Q = 0, beta* (Q - 1) = 0 "
              "(complementarity); -du/dP + beta* = alpha* (stationarity)\n\n")
    out.write("Interpretation\n")
    labels = (report.regimes or classify_regimes(profile)).labels()
    for n, t in enumerate(profile.grid.nodes):
        g = model.at(t).F(profile.values[n])
        for i, name in enumerate(model.names):
            a = mult.alpha[n, i] if mult is not None else float("nan")
            b = mult.beta[n, i] if mult is not None else float("nan")
            out.write("  " + _case_line(t, name, profile.values[n, i], a, b, g[i], labels[n, i]) + "\n")
    return out.getvalue()

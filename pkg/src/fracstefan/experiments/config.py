"""Run-config parsing: JSON schema, restricted datum expressions, scenario objects."""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from ..gridfield import Bump, Constant, DatumError, Field, Grid1D, Riemann, sample_initial
from ..nonlinearity import KINDS, StefanGraph
from ..operator import build_local_stencil, build_stencil
from ..stepper import RunConfig

ANALYSES = ("oracle_antisym", "interfaces", "profile", "positivity", "sandwich")

_NUMBER = {"type": "number"}
_PAIR = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["scenario", "graph", "s", "dx", "window", "farfield", "T", "datum"],
    "additionalProperties": False,
    "properties": {
        "scenario": {"type": "string", "minLength": 1},
        "graph": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(KINDS)},
                "L": {"type": "number", "exclusiveMinimum": 0},
                "k": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                      "minItems": 3, "maxItems": 3},
            },
        },
        "s": {"oneOf": [{"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        {"const": "local"}]},
        "dx": {"type": "number", "exclusiveMinimum": 0},
        "window": _PAIR,
        "farfield": _PAIR,
        "T": {"type": "number", "minimum": 0},
        "theta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "R_cut": {"type": "integer", "minimum": 2},
        "snapshot_times": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "t_ref": {"type": "number", "exclusiveMinimum": 0},
        "datum": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["riemann", "constant", "bump"]},
                "c": _NUMBER,
                "expr": {"type": "string"},
                "support": _PAIR,
                "continuous": {"type": "boolean"},
                "rule": {"enum": ["cell_average", "pointwise"]},
            },
            "allOf": [{"if": {"properties": {"type": {"const": "bump"}}},
                       "then": {"required": ["expr", "support"]}}],
        },
        "analyses": {"type": "array", "items": {"enum": list(ANALYSES)}, "uniqueItems": True},
        "omega": _PAIR,
    },
}


class ConfigError(ValueError):
    """Config failed validation; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"config invalid at {path or '<root>'}: {message}")
        self.path = path


# restricted expressions ------------------------------------------------------

_FUNCS = {name: getattr(np, name) for name in
          ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "cosh", "sinh",
           "minimum", "maximum", "where", "sign", "heaviside")}
_CONSTS = {"pi": np.pi, "e": np.e}
_ALLOWED_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Compare, ast.BoolOp, ast.Call,
                  ast.Name, ast.Load, ast.Constant, ast.operator, ast.unaryop, ast.cmpop, ast.boolop,
                  ast.IfExp)


def compile_expr(expr: str, extra: dict | None = None):
    """Compile a numpy expression in ``x`` built from arithmetic and whitelisted functions."""
    names = {**_FUNCS, **_CONSTS, **(extra or {})}
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError("datum/expr", f"cannot parse {expr!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ConfigError("datum/expr", f"{type(node).__name__} is not allowed in expressions")
        if isinstance(node, ast.Name) and node.id != "x" and node.id not in names:
            raise ConfigError("datum/expr", f"unknown name {node.id!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ConfigError("datum/expr", "only whitelisted numpy functions may be called")
    code = compile(tree, "<datum>", "eval")

    def f(x):
        out = eval(code, {"__builtins__": {}}, {**names, "x": x})
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x)).copy()

    return f


# scenarios -------------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    run_config: RunConfig
    initial: Field
    analyses: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    @property
    def datum_type(self) -> str:
        return self.raw["datum"]["type"]


def validate(cfg: dict) -> None:
    """Schema check followed by cross-field checks; raises ConfigError."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = [str(p) for p in err.absolute_path]
        if err.validator == "required" and isinstance(err.instance, dict):
            missing = [k for k in err.validator_value if k not in err.instance]
            path.append(missing[0])
        raise ConfigError("/".join(path), err.message)
    a, b = cfg["window"]
    if not a < b:
        raise ConfigError("window", "window must satisfy x_min < x_max")
    for i, t in enumerate(cfg.get("snapshot_times", [])):
        if t > cfg["T"]:
            raise ConfigError(f"snapshot_times/{i}", f"snapshot time {t} exceeds T={cfg['T']}")
    b1, b2 = cfg["farfield"]
    kind = cfg["datum"]["type"]
    if kind in ("constant", "bump") and b1 != b2:
        raise ConfigError("farfield", f"{kind} data need equal far-field constants")
    if cfg["s"] == "local" and "R_cut" in cfg:
        raise ConfigError("R_cut", "the local stencil has no truncation radius")


def build_graph(spec: dict) -> StefanGraph:
    return StefanGraph.from_dict({"L": 1.0, "k": [1.0, 1.0, 1.0], **spec})


def build_scenario(cfg: dict) -> Scenario:
    validate(cfg)
    graph = build_graph(cfg["graph"])
    try:
        grid = Grid1D.from_window(cfg["window"][0], cfg["window"][1], cfg["dx"])
    except ValueError as exc:
        raise ConfigError("dx", str(exc)) from None
    if cfg["s"] == "local":
        st = build_local_stencil(grid.dx)
    else:
        st = build_stencil(cfg["s"], grid.dx, R_cut=cfg.get("R_cut"), n=grid.n)

    d = cfg["datum"]
    b1, b2 = cfg["farfield"]
    if d["type"] == "riemann":
        datum = Riemann(b1, b2, d.get("c", 0.0))
    elif d["type"] == "constant":
        datum = Constant(b1)
    else:
        func = compile_expr(d["expr"], {"L": graph.L})
        datum = Bump(func, tuple(d["support"]), b1, d.get("continuous", False), label=d["expr"])
    try:
        initial = sample_initial(grid, datum, rule=d.get("rule", "cell_average"))
    except DatumError as exc:
        raise ConfigError("datum", str(exc)) from None

    times = sorted(cfg.get("snapshot_times", [cfg["T"]]))
    run_cfg = RunConfig(graph, st, grid, datum.farfield(), cfg["T"], cfg.get("theta", 0.9), times)
    return Scenario(cfg["scenario"], run_cfg, initial, list(cfg.get("analyses", [])), cfg)


def load_config(path) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"not valid JSON ({exc.msg} at line {exc.lineno})") from None
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    if not isinstance(raw, dict):
        raise ConfigError("", "top level must be a JSON object")
    return build_scenario(raw)

"""Uniform 1-D grids, nodal enthalpy fields and initial-data sampling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

QUAD_POINTS = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(QUAD_POINTS)
# jumps closer than this fraction of a cell to a cell edge are put on the edge
_SNAP = 1e-9


class DatumError(ValueError):
    """Initial datum is inconsistent with the window or the far field."""


@dataclass(frozen=True)
class Grid1D:
    """Nodes x_b = x_min + b*dx, b = 0..n-1; node b owns the cell [x_b - dx/2, x_b + dx/2]."""

    x_min: float
    dx: float
    n: int

    def __post_init__(self):
        if not (self.dx > 0 and math.isfinite(self.dx)):
            raise ValueError(f"grid spacing must be positive, got {self.dx}")
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 nodes, got {self.n}")

    @classmethod
    def from_window(cls, a: float, b: float, dx: float) -> "Grid1D":
        """Cell-centred grid whose cells tile [a, b] exactly."""
        n = round((b - a) / dx)
        if n < 3 or abs(n * dx - (b - a)) > 1e-9 * max(1.0, abs(b - a)):
            raise ValueError(f"window [{a}, {b}] is not a whole number of cells of size {dx}")
        return cls(a + 0.5 * dx, dx, n)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def x_max(self) -> float:
        return self.x_min + (self.n - 1) * self.dx

    @property
    def window(self) -> tuple[float, float]:
        return (self.x_min - 0.5 * self.dx, self.x_max + 0.5 * self.dx)

    def is_symmetric(self, rtol: float = 1e-9) -> bool:
        return abs(self.x_min + self.x_max) <= rtol * self.dx

    def index_of(self, x: float) -> int:
        return int(round((x - self.x_min) / self.dx))


@dataclass(frozen=True)
class FarField:
    """Constant enthalpy extension: ``left`` for x <= jump, ``right`` beyond."""

    left: float
    right: float
    jump: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.left) and math.isfinite(self.right)):
            raise ValueError("far-field constants must be finite")

    @classmethod
    def constant(cls, b: float) -> "FarField":
        return cls(b, b)

    def background(self, grid: Grid1D) -> np.ndarray:
        """Cell averages of the two-constant background split at ``jump``."""
        lo = grid.nodes - 0.5 * grid.dx
        frac_left = np.clip((self.jump - lo) / grid.dx, 0.0, 1.0)
        frac_left[frac_left < _SNAP] = 0.0
        frac_left[frac_left > 1.0 - _SNAP] = 1.0
        return self.right + (self.left - self.right) * frac_left


# Initial data -------------------------------------------------------------


@dataclass(frozen=True)
class Riemann:
    b1: float
    b2: float
    c: float = 0.0
    continuous = False

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= self.c, self.b1, self.b2)

    def breakpoints(self):
        return (self.c,)

    def farfield(self) -> FarField:
        return FarField(self.b1, self.b2, self.c)

    def describe(self) -> dict:
        return {"type": "riemann", "b1": self.b1, "b2": self.b2, "c": self.c}


@dataclass(frozen=True)
class Constant:
    value: float
    continuous = True

    def __call__(self, x):
        return np.full(np.shape(x), float(self.value))

    def breakpoints(self):
        return ()

    def farfield(self) -> FarField:
        return FarField.constant(self.value)

    def describe(self) -> dict:
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class Bump:
    """``func`` on ``support`` = (a, b), constant ``background`` elsewhere.

    ``continuous`` should be set only when func matches the background at
    both ends of the support (pointwise sampling is then admissible).
    """

    func: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    background: float = 0.0
    continuous: bool = False
    label: str = "bump"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.support
        inside = (x > a) & (x < b)
        out = np.full(x.shape, float(self.background))
        if np.any(inside):
            out[inside] = self.func(x[inside])
        return out

    def breakpoints(self):
        return tuple(self.support)

    def farfield(self) -> FarField:
        return FarField.constant(self.background)

    def describe(self) -> dict:
        return {"type": "bump", "label": self.label, "support": list(self.support),
                "background": self.background}


@dataclass(frozen=True)
class Tabulated:
    """Nodal samples used verbatim (must be given on the target grid)."""

    values: tuple
    continuous = True

    def describe(self) -> dict:
        return {"type": "tabulated", "n": len(self.values)}


@dataclass(frozen=True)
class Field:
    grid: Grid1D
    values: np.ndarray
    farfield: FarField
    meta: dict = dc_field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"field has {v.shape} values, grid has {self.grid.n} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values) -> "Field":
        return Field(self.grid, values, self.farfield, dict(self.meta))

    def map(self, fn) -> "Field":
        """Apply a pointwise enthalpy map to the nodes and to the far field."""
        ff = FarField(float(fn(np.float64(self.farfield.left))),
                      float(fn(np.float64(self.farfield.right))), self.farfield.jump)
        return Field(self.grid, fn(self.values), ff, dict(self.meta))


def sample_initial(grid: Grid1D, datum, farfield: FarField | None = None,
                   rule: str = "cell_average") -> Field:
    """Project ``datum`` onto ``grid``.

    The default rule takes exact cell averages (16-point Gauss-Legendre on every
    cell, split at the datum's breakpoints). ``rule="pointwise"`` samples nodal
    values and is only accepted for continuous data.
    """
    if farfield is None:
        farfield = datum.farfield() if hasattr(datum, "farfield") else None
        if farfield is None:
            raise DatumError("a far field is required for tabulated data")
    if isinstance(datum, Tabulated):
        vals = np.asarray(datum.values, dtype=float)
        if vals.shape != (grid.n,):
            raise DatumError(f"tabulated datum has {vals.size} samples, grid has {grid.n}")
        return Field(grid, vals, farfield, {"rule": "tabulated", "datum": datum.describe()})

    _check_against_farfield(grid, datum, farfield)
    if rule == "pointwise":
        if not datum.continuous:
            raise DatumError("pointwise sampling requires a continuous datum")
        vals = datum(grid.nodes)
    elif rule == "cell_average":
        vals = _cell_averages(grid, datum)
    else:
        raise ValueError(f"unknown sampling rule {rule!r}")
    return Field(grid, vals, farfield, {"rule": rule, "datum": datum.describe()})


def _check_against_farfield(grid, datum, ff):
    a, b = grid.window
    if isinstance(datum, Riemann):
        if (datum.b1, datum.b2) != (ff.left, ff.right) or datum.c != ff.jump:
            raise DatumError("Riemann datum disagrees with the far field")
        if not a < datum.c < b:
            raise DatumError(f"jump at {datum.c} lies outside the window [{a}, {b}]")
    elif isinstance(datum, Constant):
        if not ff.left == ff.right == datum.value:
            raise DatumError("constant datum disagrees with the far field")
    elif isinstance(datum, Bump):
        lo, hi = datum.support
        matches = ff.left == ff.right == datum.background
        if lo < a or hi > b:
            raise DatumError(f"bump support [{lo}, {hi}] exceeds the window [{a}, {b}]")
        if not matches:
            raise DatumError("bump background disagrees with the far field")


def _cell_averages(grid: Grid1D, datum) -> np.ndarray:
    dx = grid.dx
    lo = grid.nodes - 0.5 * dx
    # bulk: 16 GL points per cell
    pts = lo[:, None] + 0.5 * dx * (_GL_X[None, :] + 1.0)
    vals = 0.5 * np.sum(datum(pts.ravel()).reshape(pts.shape) * _GL_W[None, :], axis=1)
    # cells containing a breakpoint are redone piecewise
    for c in datum.breakpoints():
        k = math.floor((c - lo[0]) / dx)
        for j in (k - 1, k, k + 1):
            if 0 <= j < grid.n and lo[j] + _SNAP * dx < c < lo[j] + (1.0 - _SNAP) * dx:
                vals[j] = _split_average(datum, lo[j], lo[j] + dx, datum.breakpoints())
    return vals


def _split_average(datum, a, b, cuts) -> float:
    edges = [a] + sorted(c for c in cuts if a < c < b) + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        # evaluate strictly inside each piece so the indicator side is unambiguous
        x = lo + 0.5 * (hi - lo) * (_GL_X + 1.0)
        total += 0.5 * (hi - lo) * float(np.dot(_GL_W, datum(x)))
    return total / (b - a)


# Discrete norms -----------------------------------------------------------


def l1_local_distance(a: Field, b: Field, K: Sequence[float]) -> float:
    """dx * sum over nodes in K of |a - b|."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    x = a.grid.nodes
    mask = (x >= K[0]) & (x <= K[1])
    if not np.any(mask):
        raise ValueError(f"interval {tuple(K)} contains no grid nodes")
    return float(a.grid.dx * np.sum(np.abs(a.values[mask] - b.values[mask])))


def excess_mass(f: Field, reference: FarField | None = None) -> float:
    """dx * sum(f - background): the quantity conserved by the dynamics."""
    ref = f.farfield if reference is None else reference
    return float(f.grid.dx * np.sum(f.values - ref.background(f.grid)))


# CSV ----------------------------------------------------------------------


def write_field_csv(path, f: Field, graph=None) -> None:
    from .nonlinearity import phi_eval

    u = phi_eval(graph, f.values) if graph is not None else np.full(f.grid.n, np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "h", "u"])
        for row in zip(f.x, f.values, np.atleast_1d(u)):
            w.writerow([f"{v:.17g}" for v in row])


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return data["x"], data["h"], data["u"]

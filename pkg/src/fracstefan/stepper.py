"""Explicit monotone scheme V^j = V^{j-1} - dt L Phi(V^{j-1}) and its run loop."""

from __future__ import annotations

import logging
import math
import time as _time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .gridfield import FarField, Field, Grid1D, l1_local_distance
from .nonlinearity import StefanGraph, lipschitz_bound, phi_eval
from .operator import Stencil, apply

logger = logging.getLogger(__name__)

ROUNDING_SLACK = 1e-9


class CFLError(ValueError):
    """Time step too large for the update to stay monotone."""


class InvariantViolation(RuntimeError):
    """A discrete invariant of the scheme failed during a run."""

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


def cfl_dt(st: Stencil, graph: StefanGraph, theta: float = 0.9) -> float:
    """theta / (Lip(Phi) * row_sum); row_sum ~ dx^{-2s} so dt ~ dx^{2s}."""
    if not 0.0 < theta <= 1.0:
        raise CFLError(f"CFL safety factor must lie in (0, 1], got {theta}")
    return theta / (lipschitz_bound(graph) * st.row_sum)


def _update(v: np.ndarray, st: Stencil, graph: StefanGraph, dt: float,
            phi_ff: tuple[float, float]) -> np.ndarray:
    return v - dt * apply(st, phi_eval(graph, v), phi_ff)


def _phi_farfield(graph, ff: FarField) -> tuple[float, float]:
    return (float(phi_eval(graph, ff.left)), float(phi_eval(graph, ff.right)))


def step(state: Field, st: Stencil, graph: StefanGraph, dt: float) -> Field:
    """One forward-Euler step; the far field is stationary and left untouched."""
    if dt > cfl_dt(st, graph, 1.0) * (1.0 + 1e-12):
        raise CFLError(f"dt={dt:.6g} exceeds the monotonicity bound {cfl_dt(st, graph, 1.0):.6g}")
    if state.grid.dx != st.dx:
        raise ValueError("stencil and field spacings differ")
    new = _update(state.values, st, graph, dt, _phi_farfield(graph, state.farfield))
    return state.with_values(new)


def outflow(values: np.ndarray, st: Stencil, graph: StefanGraph, ff: FarField, dt: float, dx: float) -> float:
    """Mass the lattice scheme deposits beyond the window during one step.

    Window mass plus cumulative outflow is conserved exactly by the update.
    """
    cl, cr = st.farfield_coeffs(values.size)
    u = phi_eval(graph, values)
    pl, pr = _phi_farfield(graph, ff)
    return float(dt * dx * (np.dot(u - pl, cl) + np.dot(u - pr, cr)))


@dataclass
class RunConfig:
    graph: StefanGraph
    stencil: Stencil
    grid: Grid1D
    farfield: FarField
    T: float
    theta: float = 0.9
    snapshot_times: Sequence[float] = ()
    monitors: frozenset = frozenset({"sup", "mass"})
    every_step: bool = False  # store every time level (needed for weak residuals)

    @property
    def dt(self) -> float:
        return cfl_dt(self.stencil, self.graph, self.theta)

    def describe(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "s": "local" if self.stencil.is_local else self.stencil.s,
            "dx": self.grid.dx,
            "window": list(self.grid.window),
            "n": self.grid.n,
            "R_cut": self.stencil.R_cut,
            "farfield": [self.farfield.left, self.farfield.right],
            "jump": self.farfield.jump,
            "T": self.T,
            "theta": self.theta,
            "snapshot_times": list(self.snapshot_times),
        }


@dataclass
class SnapshotSeries:
    grid: Grid1D
    farfield: FarField
    graph: StefanGraph
    order: float  # s, or 1 for the local operator
    dt: float
    times: list = field(default_factory=list)
    requested: list = field(default_factory=list)
    snap_idx: list = field(default_factory=list)  # requested[k] is stored at fields[snap_idx[k]]
    fields: list = field(default_factory=list)
    monitor_log: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def index(self, t: float) -> int:
        """Index into ``fields`` of the snapshot requested at (or stored nearest to) ``t``."""
        if self.requested:
            req = np.asarray(self.requested, dtype=float)
            k = int(np.argmin(np.abs(req - t)))
            if abs(req[k] - t) <= 1e-12 * max(1.0, abs(t)):
                return self.snap_idx[k]
        tt = np.asarray(self.times, dtype=float)
        k = int(np.argmin(np.abs(tt - t)))
        if abs(tt[k] - t) > max(self.dt, 1e-12):
            raise KeyError(f"no snapshot near t={t}")
        return k

    def at(self, t: float) -> Field:
        k = self.index(t)
        return Field(self.grid, self.fields[k], self.farfield, {"t": self.times[k], **self.meta})

    def snapshots(self):
        """(requested time, actual time, values) for every requested snapshot."""
        for t, k in zip(self.requested, self.snap_idx):
            yield t, self.times[k], self.fields[k]

    def temperature(self, t: float) -> np.ndarray:
        return phi_eval(self.graph, self.fields[self.index(t)])


def _window_warning(cfg: RunConfig):
    a, b = cfg.grid.window
    reach = cfg.T ** (1.0 / (2.0 * cfg.stencil.order))
    if min(-a, b) < 10.0 * reach:
        logger.warning("window [%g, %g] is narrow for T=%g (rule of thumb: edges beyond %g)",
                       a, b, cfg.T, 10.0 * reach)


def run(cfg: RunConfig, initial: Field, progress: Callable | None = None) -> SnapshotSeries:
    """March to T with the CFL step, storing snapshots at the first t_j >= requested time.

    Raises InvariantViolation if a nodal value leaves the range spanned by the
    initial data and the far field.
    """
    if initial.grid != cfg.grid:
        raise ValueError("initial field is not on the configured grid")
    if cfg.stencil.dx != cfg.grid.dx:
        raise ValueError("stencil and grid spacings differ")
    _window_warning(cfg)
    dt = cfg.dt
    nsteps = max(0, math.ceil(cfg.T / dt - 1e-12))
    ff = cfg.farfield
    phi_ff = _phi_farfield(cfg.graph, ff)
    lo = min(ff.left, ff.right, float(initial.values.min())) - ROUNDING_SLACK
    hi = max(ff.left, ff.right, float(initial.values.max())) + ROUNDING_SLACK

    wanted = sorted(float(t) for t in cfg.snapshot_times)
    series = SnapshotSeries(cfg.grid, ff, cfg.graph, cfg.stencil.order, dt,
                            meta={"config": cfg.describe(), "initial": dict(initial.meta)})
    log = {"t": [], "sup": [], "inf": [], "mass": [], "outflow": []}
    cum_out = 0.0
    v = np.array(initial.values, dtype=float)
    background = ff.background(cfg.grid)
    next_snap = 0

    def record(j, v):
        nonlocal next_snap
        t = j * dt
        if cfg.every_step:
            series.times.append(t)
            series.fields.append(v.copy())
        while next_snap < len(wanted) and t >= wanted[next_snap] - 1e-12 * max(1.0, dt):
            if not cfg.every_step and not (series.times and series.times[-1] == t):
                series.fields.append(v.copy())
                series.times.append(t)
            series.requested.append(wanted[next_snap])
            series.snap_idx.append(len(series.fields) - 1)
            next_snap += 1
        log["t"].append(t)
        if "sup" in cfg.monitors:
            log["sup"].append(float(v.max()))
            log["inf"].append(float(v.min()))
        if "mass" in cfg.monitors:
            log["mass"].append(float(cfg.grid.dx * np.sum(v - background)))
            log["outflow"].append(cum_out)

    t0 = _time.perf_counter()
    record(0, v)
    for j in range(1, nsteps + 1):
        if "mass" in cfg.monitors:
            cum_out += outflow(v, cfg.stencil, cfg.graph, ff, dt, cfg.grid.dx)
        v = _update(v, cfg.stencil, cfg.graph, dt, phi_ff)
        vmin, vmax = float(v.min()), float(v.max())
        if vmin < lo or vmax > hi or not math.isfinite(vmin + vmax):
            raise InvariantViolation(
                "Linf-stability",
                f"step {j}: values [{vmin:.6g}, {vmax:.6g}] left the admissible range [{lo:.6g}, {hi:.6g}]")
        record(j, v)
        if progress is not None:
            progress(j, nsteps)
    # requested times past the last level land on the final state
    while next_snap < len(wanted):
        if not (series.times and series.times[-1] == nsteps * dt):
            series.times.append(nsteps * dt)
            series.fields.append(v.copy())
        series.requested.append(wanted[next_snap])
        series.snap_idx.append(len(series.fields) - 1)
        next_snap += 1

    series.monitor_log = {k: np.asarray(val) for k, val in log.items() if val}
    series.meta.update({"dt": dt, "steps": nsteps, "wall_time": _time.perf_counter() - t0})
    return series


def monitor_summary(series: SnapshotSeries) -> dict:
    log = series.monitor_log
    out = {"dt": series.dt, "steps": series.meta.get("steps")}
    if "sup" in log:
        out["sup_max"] = float(log["sup"].max())
        out["inf_min"] = float(log["inf"].min())
    if "mass" in log:
        total = log["mass"] + log["outflow"]
        out["window_mass_change"] = float(log["mass"][-1] - log["mass"][0])
        out["conserved_mass_drift"] = float(np.max(np.abs(total - total[0])))
    return out


def run_coupled(cfg: RunConfig, lower: Field, upper: Field) -> tuple[np.ndarray, float]:
    """Step an ordered pair together; returns per-step min(upper - lower) and the worst value."""
    if np.any(lower.values > upper.values):
        raise ValueError("pair is not ordered")
    dt = cfg.dt
    nsteps = max(0, math.ceil(cfg.T / dt - 1e-12))
    a, b = np.array(lower.values), np.array(upper.values)
    pa, pb = _phi_farfield(cfg.graph, lower.farfield), _phi_farfield(cfg.graph, upper.farfield)
    gaps = [float(np.min(b - a))]
    for _ in range(nsteps):
        a = _update(a, cfg.stencil, cfg.graph, dt, pa)
        b = _update(b, cfg.stencil, cfg.graph, dt, pb)
        gaps.append(float(np.min(b - a)))
    gaps = np.asarray(gaps)
    return gaps, float(gaps.min())


# Convergence study ----------------------------------------------------------


def restrict(fine: np.ndarray, fine_grid: Grid1D, coarse_grid: Grid1D) -> np.ndarray:
    """Average fine cells over each coarse cell (coarse cells must be unions of fine cells)."""
    ratio = coarse_grid.dx / fine_grid.dx
    r = int(round(ratio))
    offset = (coarse_grid.window[0] - fine_grid.window[0]) / fine_grid.dx
    k0 = int(round(offset))
    if r < 1 or abs(ratio - r) > 1e-9 or abs(offset - k0) > 1e-6 or k0 < 0:
        raise ValueError("grids are not nested")
    if k0 + r * coarse_grid.n > fine_grid.n:
        raise ValueError("coarse window extends beyond the reference window")
    block = fine[k0:k0 + r * coarse_grid.n].reshape(coarse_grid.n, r)
    return block.mean(axis=1)


@dataclass
class ConvergenceTable:
    dx: list
    errors: list
    ratios: list
    reference_dx: float
    K: tuple

    def as_rows(self):
        return [(d, e, r) for d, e, r in zip(self.dx, self.errors, [float("nan")] + self.ratios)]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("dx,error,ratio\n")
            for d, e, r in self.as_rows():
                fh.write(f"{d:.17g},{e:.17g},{r:.17g}\n")


def convergence_study(levels: Sequence[SnapshotSeries], reference: SnapshotSeries,
                      K: Sequence[float]) -> ConvergenceTable:
    """max over common snapshot times of the L1(K) error against the restricted reference."""
    dxs, errs = [], []
    for ser in levels:
        worst = 0.0
        for t in ser.requested:
            ref_vals = restrict(reference.fields[reference.index(t)], reference.grid, ser.grid)
            coarse = Field(ser.grid, ser.fields[ser.index(t)], ser.farfield)
            ref_field = Field(ser.grid, ref_vals, ser.farfield)
            worst = max(worst, l1_local_distance(coarse, ref_field, K))
        dxs.append(ser.grid.dx)
        errs.append(worst)
    ratios = [errs[i + 1] / errs[i] if errs[i] > 0 else float("nan") for i in range(len(errs) - 1)]
    return ConvergenceTable(dxs, errs, ratios, reference.grid.dx, tuple(K))

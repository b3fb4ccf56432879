"""Figure reproductions and qualitative checks built on top of the solver.

Each routine returns a plain dict report; when ``out`` is given it also writes
CSV tables, SVG plots and a manifest into that directory.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..gridfield import Bump, Field, Grid1D, Riemann, sample_initial
from ..nonlinearity import TWO_PHASE, StefanGraph, lipschitz_bound, phi_eval
from ..operator import build_stencil
from ..selfsimilar import NoCrossing, default_tol_u, detect_interfaces, extract_profile
from ..stepper import RunConfig, cfl_dt, run
from . import output

# windows, spacings and horizons are our choices; the manifests record them
FIG2_DEFAULTS = {"dx": 0.02, "window": (-40.0, 40.0), "T": 1.0}
FIG4_DEFAULTS = {"dx": 0.02, "window": (-40.0, 40.0), "T": 8.0, "s": 0.25,
                 "times": (0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)}
FIG5_DEFAULTS = {"dx": 0.02, "window": (-40.0, 40.0), "T": 5.0, "s": 0.25, "n_snap": 100}
SENTINEL_FRACTION = 0.75


def riemann_series(graph: StefanGraph, s: float, b1: float, b2: float, dx: float,
                   window, T: float, times=None, theta: float = 0.9):
    grid = Grid1D.from_window(window[0], window[1], dx)
    datum = Riemann(b1, b2)
    cfg = RunConfig(graph, build_stencil(s, dx, n=grid.n), grid, datum.farfield(), T, theta,
                    list(times) if times is not None else [T])
    return run(cfg, sample_initial(grid, datum))


def _extent(x, mask) -> float:
    return float(np.max(np.abs(x[mask]))) if np.any(mask) else float("nan")


def _manifest_inputs(**kw) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in kw.items()}


# Figure 2: mushy regions ----------------------------------------------------


def run_figure2(s_list, P2_list, out=None, L: float = 1.0, P1: float = 1.0, **overrides) -> dict:
    """Two-phase Riemann runs (L+P1 | -P2) and their interface reports."""
    if not s_list or not P2_list:
        raise ValueError("figure2 needs at least one s and one P2")
    opts = {**FIG2_DEFAULTS, **overrides}
    graph = StefanGraph.two_phase(L)
    rows, profiles = [], {}
    for s in s_list:
        for P2 in P2_list:
            series = riemann_series(graph, s, L + P1, -P2, opts["dx"], opts["window"], opts["T"])
            p = extract_profile(series, opts["T"])
            profiles[f"s={s:g}, P2={P2:g}"] = p
            try:
                rep = detect_interfaces(p)
                rows.append({"s": s, "P2": P2, "xi_w": rep.xi_w, "xi_i": rep.xi_i,
                             "mushy_width": rep.mushy_width, "dx": p.dxi, "status": "ok"})
            except NoCrossing:
                rows.append({"s": s, "P2": P2, "xi_w": float("nan"), "xi_i": float("nan"),
                             "mushy_width": float("nan"), "dx": p.dxi, "status": "window"})
    report = {"rows": rows, "settings": {**opts, "L": L, "P1": P1}}
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["s", "P2", "xi_w", "xi_i", "mushy_width", "dx", "status"]
        output.write_table(out / "figure2.csv", cols, ([r[c] for c in cols] for r in rows))
        output.plot_profiles(out / "figure2_profiles.svg", profiles, xlim=(-5, 5))
        output.write_manifest(out, "figure2", _manifest_inputs(
            s=list(s_list), P2=list(P2_list), L=L, P1=P1, theta=0.9, **opts))
    return report


# Figure 4: finite and infinite speed of the negative phase ------------------


def figure4_data(L: float = 1.0) -> dict:
    return {
        "blue": Bump(lambda x: (L + 1.0) * np.cos(x), (-1.5 * np.pi, 1.5 * np.pi), 0.0,
                     continuous=True, label="(L+1)cos(x) on |x|<3pi/2"),
        "black": Bump(lambda x: (L + 1.0) * (np.cos(x) + 0.75), (-1.2 * np.pi, 1.2 * np.pi), 0.0,
                      label="(L+1)(cos(x)+3/4) on |x|<6pi/5"),
    }


def water_envelope_speed(h0: Field, graph: StefanGraph, s: float, eps: float, dx: float, window):
    """(R, xi_0) such that the positive temperature stays in |x| <= R + xi_0 t^{1/(2s)}.

    R bounds the set where h0 > L - eps; xi_0 is the water interface of the
    one-phase Riemann solution with states (sup h0 | L - eps) that dominates h0
    on each side of the origin.
    """
    x = h0.grid.nodes
    hot = h0.values > graph.L - eps
    R = float(np.max(np.abs(x[hot])) + 0.5 * h0.grid.dx) if np.any(hot) else 0.0
    top = float(h0.values.max())
    if top <= graph.L:
        return R, 0.0
    one = StefanGraph.one_phase(graph.L, graph.k1)
    p = extract_profile(riemann_series(one, s, top, graph.L - eps, dx, window, 1.0), 1.0)
    return R, max(detect_interfaces(p).xi_w, 0.0)


def run_figure4(out=None, L: float = 1.0, eps: float | None = None, **overrides) -> dict:
    opts = {**FIG4_DEFAULTS, **overrides}
    s, dx, window = opts["s"], opts["dx"], opts["window"]
    graph = StefanGraph.two_phase(L)
    grid = Grid1D.from_window(window[0], window[1], dx)
    st = build_stencil(s, dx, n=grid.n)
    sentinel = SENTINEL_FRACTION * min(-window[0], window[1])
    eps = 0.5 * L if eps is None else eps
    report = {"sentinel_radius": sentinel, "data": {}, "settings": {**opts, "L": L, "eps": eps}}
    rows = []
    series_by = {}
    for name, datum in figure4_data(L).items():
        h0 = sample_initial(grid, datum)
        R, xi0 = water_envelope_speed(h0, graph, s, eps, dx, window)
        series = run(RunConfig(graph, st, grid, datum.farfield(), opts["T"], 0.9, opts["times"]), h0)
        series_by[name] = series
        reaches, envelope_ok = False, True
        for t_req, t, vals in series.snapshots():
            u = phi_eval(graph, vals)
            tol = default_tol_u(u)
            pos, neg = _extent(grid.nodes, u > tol), _extent(grid.nodes, u < -tol)
            env = R + xi0 * t ** (1.0 / (2.0 * s))
            hit = bool(neg >= sentinel)
            reaches |= hit
            ok = bool(np.isnan(pos) or pos <= env + 2.0 * dx)
            envelope_ok &= ok
            rows.append((name, t_req, t, pos, neg, env, hit))
        report["data"][name] = {
            "label": datum.label,
            "classification": "infinite" if reaches else "finite",
            "R": R, "xi0": xi0, "positive_envelope_ok": envelope_ok,
        }
    cls = {d["classification"] for d in report["data"].values()}
    report["classifications_differ"] = len(cls) > 1
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        output.write_table(out / "figure4_fronts.csv",
                           ["datum", "t_requested", "t", "positive_extent", "negative_extent",
                            "positive_envelope", "reaches_sentinel"], rows)
        output.write_json(out / "figure4.json", report)
        for name, series in series_by.items():
            output.plot_snapshots(out / f"figure4_{name}.svg", series, title=figure4_data(L)[name].label)
        output.write_manifest(out, "figure4", _manifest_inputs(
            theta=0.9, dt=series.dt, **report["settings"]))
    return report


# Figure 5: expanding, contracting and disappearing water -------------------


def figure5_datum(L: float = 1.0) -> Bump:
    """Hot water core inside a near-melting mushy annulus, cold ice far field."""
    core, mushy, ice = L + 2.0, 0.95 * L, -0.5

    def h0(x):
        return np.where(np.abs(x) < 1.0, core, mushy)

    return Bump(h0, (-5.0, 5.0), ice, label="L+2 on |x|<1, 0.95L on 1<|x|<5, -0.5 elsewhere")


def run_figure5(out=None, L: float = 1.0, datum=None, **overrides) -> dict:
    opts = {**FIG5_DEFAULTS, **overrides}
    s, dx, window, T = opts["s"], opts["dx"], opts["window"], opts["T"]
    graph = StefanGraph.two_phase(L)
    datum = figure5_datum(L) if datum is None else datum
    grid = Grid1D.from_window(window[0], window[1], dx)
    h0 = sample_initial(grid, datum)
    times = list(np.linspace(0.0, T, opts["n_snap"] + 1))
    series = run(RunConfig(graph, build_stencil(s, dx, n=grid.n), grid, datum.farfield(), T, 0.9, times), h0)

    tol = default_tol_u(phi_eval(graph, h0.values))
    x = grid.nodes
    env = _two_phase_envelope(h0, graph, s, dx, window)
    rows, water = [], []
    envelope_ok = True
    for t_req, t, vals in series.snapshots():
        u = phi_eval(graph, vals)
        w_mask = u > tol
        m_mask = (vals >= 0.0) & (vals <= L)
        w_meas = dx * int(np.count_nonzero(w_mask))
        water.append(w_meas)
        row = [t_req, t, w_meas, dx * int(np.count_nonzero(m_mask)), _extent(x, w_mask), _extent(x, m_mask)]
        if env is not None:
            R, xi_w, xi_i = env
            grow = t ** (1.0 / (2.0 * s))
            bw, bm = R + xi_w * grow, R + xi_i * grow
            envelope_ok &= bool(np.isnan(row[4]) or row[4] <= bw + 2.0 * dx)
            envelope_ok &= bool(np.isnan(row[5]) or row[5] <= bm + 2.0 * dx)
            row += [bw, bm]
        else:
            row += [float("nan"), float("nan")]
        rows.append(row)

    water = np.asarray(water)
    peak = int(np.argmax(water))
    report = {
        "datum": datum.label,
        "initial_water": float(water[0]),
        "peak_water": float(water[peak]),
        "peak_time": float(series.requested[peak]),
        "final_water": float(water[-1]),
        "expands": bool(water[peak] > water[0]),
        "disappears": bool(water[-1] == 0.0),
        "non_monotone": bool(np.any(np.diff(water) > 0) and np.any(np.diff(water) < 0)),
        "envelope_ok": envelope_ok if env is not None else None,
        "envelope": None if env is None else dict(zip(("R", "xi_w", "xi_i"), env)),
        "settings": {**opts, "L": L},
    }
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        output.write_table(out / "figure5_history.csv",
                           ["t_requested", "t", "water_measure", "mushy_measure", "water_extent",
                            "mushy_extent", "water_envelope", "mushy_envelope"], rows)
        output.write_json(out / "figure5.json", report)
        output.plot_history(out / "figure5_history.svg", [r[0] for r in rows],
                            {"water": water, "mushy": [r[3] for r in rows]}, "measure")
        picks = np.unique(np.linspace(0, len(series.requested) - 1, 8).round().astype(int))
        sub = type(series)(series.grid, series.farfield, series.graph, series.order, series.dt,
                           series.times, [series.requested[i] for i in picks],
                           [series.snap_idx[i] for i in picks], series.fields)
        output.plot_snapshots(out / "figure5_snapshots.svg", sub, title=datum.label)
        output.write_manifest(out, "figure5", _manifest_inputs(theta=0.9, dt=series.dt, **report["settings"]))
    return report


def _two_phase_envelope(h0: Field, graph: StefanGraph, s: float, dx: float, window):
    """(R, xi_w, xi_i) from the two-phase Riemann solution (sup h0 | -C) placed at R."""
    C = -max(h0.farfield.left, h0.farfield.right)
    if C <= 0:
        return None
    x = h0.grid.nodes
    warm = h0.values > -C
    R = float(np.max(np.abs(x[warm])) + 0.5 * h0.grid.dx) if np.any(warm) else 0.0
    top = float(h0.values.max())
    if top <= graph.L:
        return None
    p = extract_profile(riemann_series(graph, s, top, -C, dx, window, 1.0), 1.0)
    rep = detect_interfaces(p)
    return R, max(rep.xi_w, 0.0), max(rep.xi_i, 0.0)


# Positivity and sandwich checks ---------------------------------------------


def run_positivity_check(series, omega, t_star: float = 0.0) -> dict:
    """u stays positive on the nodes of ``omega`` at every snapshot from ``t_star`` on."""
    graph = series.graph
    if not graph.is_one_phase:
        return {"status": "SKIPPED",
                "note": "positivity is not conserved by two-phase dynamics; the water region can vanish"}
    x = series.grid.nodes
    mask = (x > omega[0]) & (x < omega[1])
    k0 = series.index(t_star)
    u0 = phi_eval(graph, series.fields[k0])
    if not np.any(mask) or not np.any(u0[mask] > 0):
        return {"status": "PASS", "note": "vacuous: no positive temperature on omega at t*"}
    if np.any(u0[mask] <= 0):
        raise ValueError("u(., t*) is not positive on the whole of omega")
    worst = float("inf")
    for t_req, t, vals in series.snapshots():
        if t < series.times[k0]:
            continue
        worst = min(worst, float(phi_eval(graph, vals)[mask].min()))
    return {"status": "PASS" if worst > 0 else "FAIL", "min_u_on_omega": worst,
            "omega": list(omega), "t_star": t_star}


def run_sandwich_check(h0: Field, graph: StefanGraph, stencil, T: float, times,
                       theta: float = 0.9, tol: float = 1e-9) -> dict:
    """Bracket a two-phase run between two one-phase runs.

    Upper: one-phase (conductivity k1) from max(h0, 0). Lower: L - h~ where h~
    is the one-phase run (conductivity k2) from L - min(h0, L).
    All three runs share one time step.
    """
    if graph.kind != TWO_PHASE:
        raise ValueError("the sandwich check is defined for the two_phase graph")
    L = graph.L
    up_graph = StefanGraph.one_phase(L, graph.k1)
    lo_graph = StefanGraph.one_phase(L, graph.k2)
    dt = cfl_dt(stencil, graph, theta)

    def theta_for(g):
        return dt * lipschitz_bound(g) * stencil.row_sum

    grid = h0.grid
    upper0 = h0.map(lambda v: np.maximum(v, 0.0))
    tilde0 = h0.map(lambda v: L - np.minimum(v, L))
    main = run(RunConfig(graph, stencil, grid, h0.farfield, T, theta, times), h0)
    up = run(RunConfig(up_graph, stencil, grid, upper0.farfield, T, theta_for(up_graph), times), upper0)
    lo = run(RunConfig(lo_graph, stencil, grid, tilde0.farfield, T, theta_for(lo_graph), times), tilde0)

    rows = []
    for (t, _, h), (_, _, hu), (_, _, ht) in zip(main.snapshots(), up.snapshots(), lo.snapshots()):
        lower = L - np.asarray(ht)
        rows.append((t, float(np.max(h - hu)), float(np.max(lower - h)),
                     float(np.max(np.abs(hu - h))), float(np.max(np.abs(h - lower)))))
    rows = np.asarray(rows)
    return {
        "status": "PASS" if rows[:, 1].max() <= tol and rows[:, 2].max() <= tol else "FAIL",
        "upper_violation": float(rows[:, 1].max()),
        "lower_violation": float(rows[:, 2].max()),
        "upper_equal": bool(rows[:, 3].max() <= tol),
        "lower_equal": bool(rows[:, 4].max() <= tol),
        "strict_somewhere": bool(rows[:, 3].max() > tol and rows[:, 4].max() > tol),
        "table": rows.tolist(),
    }

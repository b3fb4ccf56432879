"""Exit criteria. Each test prints one PASS/FAIL line (also collected in the terminal summary)."""

import math

import numpy as np
import pytest

from conftest import riemann_run
from fracstefan.experiments.figures import run_figure2, run_figure4, run_figure5
from fracstefan.gridfield import FarField, Grid1D
from fracstefan.nonlinearity import StefanGraph
from fracstefan.operator import build_stencil, consistency_error
from fracstefan.oracle import fractional_laplacian_quad, slope_at_origin
from fracstefan.selfsimilar import (CONVERGENT, DIVERGENT, antisymmetry_defect, detect_interfaces,
                                    extract_profile, fit_tail_exponent, mass_transfer,
                                    profile_from_values)
from fracstefan.stepper import RunConfig, _update, convergence_study, outflow

pytestmark = pytest.mark.acceptance

TWO = StefanGraph.two_phase(1.0)
ONE = StefanGraph.one_phase(1.0)


@pytest.fixture(scope="module")
def antisym_half():
    series, st = riemann_run(TWO, 0.5, 2.0, -1.0, 0.02, 40.0, 1.0)
    return series, st, extract_profile(series, 1.0)


def test_ac1_oracle_equivalence(antisym_half, acceptance_line):
    series, _, _ = antisym_half
    f = series.at(1.0)
    x = f.x
    u = TWO(f.values)
    near = np.abs(x) <= 2.0
    err = float(np.max(np.abs(u[near] - 2.0 / math.pi * np.arctan(-x[near]))))
    u0 = float(np.interp(0.0, x, u))
    ok = err <= 2e-2 and abs(u0) <= 1e-3
    acceptance_line("AC1", ok, f"max|u-oracle| on |x|<=2 = {err:.3e} (<= 2e-2), |u(0,1)| = {abs(u0):.1e} (<= 1e-3), "
                               f"snapshot t = {f.meta['t']:.4f}")
    assert ok


def test_ac2_stationary_interface(antisym_half, acceptance_line):
    _, _, p = antisym_half
    rep = detect_interfaces(p)
    defect = antisymmetry_defect(p)
    dx = p.dxi
    ok = abs(rep.xi_w) <= 2 * dx and abs(rep.xi_i) <= 2 * dx and defect <= 1e-8
    acceptance_line("AC2", ok, f"xi_w = {rep.xi_w:.4g}, xi_i = {rep.xi_i:.4g} (|.| <= {2 * dx:.4g}), "
                               f"antisymmetry defect = {defect:.1e} (<= 1e-8)")
    assert ok


def test_ac3_slope_at_origin(antisym_half, acceptance_line):
    parts, ok = [], True
    for s in (0.5, 0.75):
        if s == 0.5:
            series = antisym_half[0]
        else:
            series, _ = riemann_run(TWO, s, 2.0, -1.0, 0.02, 40.0, 1.0)
        f = series.at(1.0)
        u = TWO(f.values)
        k = int(np.searchsorted(f.x, 0.0))
        slope = (u[k] - u[k - 1]) / (f.x[k] - f.x[k - 1])
        target = -slope_at_origin(1.0, s)
        rel = abs(slope / target - 1.0)
        ok &= rel <= 0.10
        parts.append(f"s={s}: {slope:.4f} vs {target:.4f} ({100 * rel:.1f}%)")
    acceptance_line("AC3", ok, "; ".join(parts) + " (within 10%)")
    assert ok


def test_ac4_one_phase_free_boundary(acceptance_line):
    times = [0.25, 0.5, 1.0, 2.0, 4.0]
    series, _ = riemann_run(ONE, 0.5, 2.0, 0.5, 0.02, 80.0, 4.0, times)
    xw = []
    for t in times:
        f = series.at(t)
        xw.append(detect_interfaces(profile_from_values(f.x, f.values, ONE, 0.5)).xi_w)
    actual = [series.times[series.index(t)] for t in times]
    expo = float(np.polyfit(np.log(actual), np.log(xw), 1)[0])
    xi0 = detect_interfaces(extract_profile(series, 1.0)).xi_w
    scaled, _ = riemann_run(StefanGraph.one_phase(2.0), 0.5, 4.0, 1.0, 0.02, 80.0, 1.0)
    xi0_scaled = detect_interfaces(extract_profile(scaled, 1.0)).xi_w
    ok = abs(expo - 1.0) <= 0.1 and abs(xi0 - xi0_scaled) <= 2 * 0.02
    acceptance_line("AC4", ok, f"x_w(t) exponent {expo:.4f} (1 +- 10%); xi_0 = {xi0:.5f} vs {xi0_scaled:.5f} "
                               f"after (L,P1,P2) -> (2,2,1) (within 2dx)")
    assert ok


@pytest.fixture(scope="module")
def one_phase_profiles():
    out = {}
    for s in (0.25, 0.5, 0.75):
        series, _ = riemann_run(ONE, s, 2.0, 0.5, 0.02, 40.0, 1.0)
        out[s] = extract_profile(series, 1.0)
    return out


def test_ac5_tail_exponent(one_phase_profiles, acceptance_line):
    parts, ok = [], True
    for s, p in one_phase_profiles.items():
        xi0 = detect_interfaces(p).xi_w
        slope = fit_tail_exponent(p, 0.5, (4 * xi0, 0.5 * p.xi[-1]))
        rel = abs(slope / (-2 * s) - 1.0)
        ok &= rel <= 0.15
        parts.append(f"s={s}: {slope:.3f} vs {-2 * s:.2f} ({100 * rel:.1f}%)")
    acceptance_line("AC5", ok, "; ".join(parts) + " (within 15%)")
    assert ok


def test_ac6_mass_transfer(one_phase_profiles, acceptance_line):
    radii = [1, 2, 4, 8, 16, 32]
    hi = mass_transfer(one_phase_profiles[0.75], 2.0, 0.5, radii)
    lo = mass_transfer(one_phase_profiles[0.25], 2.0, 0.5, radii)
    balance = abs(hi.I_minus[-1] / hi.I_plus[-1] - 1.0)
    ok = hi.classification == CONVERGENT and balance <= 0.10 and lo.classification == DIVERGENT
    acceptance_line("AC6", ok, f"s=0.75 {hi.classification} (I- = {hi.I_minus[-1]:.4f}, I+ = {hi.I_plus[-1]:.4f}, "
                               f"{100 * balance:.2f}% apart); s=0.25 {lo.classification}")
    assert ok


def test_ac7_mushy_half(acceptance_line):
    dx = 0.01
    series, _ = riemann_run(TWO, 0.5, 2.0, -0.1, dx, 40.0, 1.0)
    rep = detect_interfaces(extract_profile(series, 1.0))
    ok = rep.mushy_width > 2 * dx and rep.xi_w > 2 * dx
    acceptance_line("AC7", ok, f"xi_w = {rep.xi_w:.4f}, xi_i = {rep.xi_i:.4f}, mushy width {rep.mushy_width:.4f} "
                               f"(both > {2 * dx})")
    assert ok


def test_ac8_discrete_structure(rng, acceptance_line):
    """200 random ordered pairs: comparison, L-infinity bounds, L1 contraction, conserved mass."""
    slack = 1e-12
    worst = {"order": 0.0, "linf": 0.0, "l1": 0.0, "drift": 0.0}
    for _ in range(200):
        s = float(rng.choice([0.25, 0.5, 0.75]))
        graph = [ONE, TWO, StefanGraph.two_phase(1.0, 2.0, 0.5)][rng.integers(3)]
        dx = float(rng.choice([0.05, 0.1]))
        n = int(rng.integers(40, 120))
        grid = Grid1D(-0.5 * n * dx, dx, n)
        st = build_stencil(s, dx, n=n)
        ff = FarField(*rng.uniform(-2, 3, 2))
        lower = rng.uniform(-2, 3, n)
        upper = lower + rng.uniform(0, 1, n) * (rng.random(n) < 0.7)
        theta = float(rng.uniform(0.3, 1.0))
        cfg = RunConfig(graph, st, grid, ff, 0.0, theta)
        dt = cfg.dt
        phi_ff = (float(graph(ff.left)), float(graph(ff.right)))
        lo_b = min(lower.min(), ff.left, ff.right)
        hi_b = max(upper.max(), ff.left, ff.right)
        a, b = lower.copy(), upper.copy()
        mass0 = dx * np.sum(a - ff.background(grid))
        leaked = 0.0
        steps = int(rng.integers(5, 30))
        for _ in range(steps):
            leaked += outflow(a, st, graph, ff, dt, dx)
            d_before = dx * np.sum(np.abs(b - a))
            a = _update(a, st, graph, dt, phi_ff)
            b = _update(b, st, graph, dt, phi_ff)
            worst["order"] = max(worst["order"], float(np.max(a - b)))
            worst["linf"] = max(worst["linf"], lo_b - min(a.min(), b.min()), max(a.max(), b.max()) - hi_b)
            worst["l1"] = max(worst["l1"], dx * np.sum(np.abs(b - a)) - d_before)
        drift = abs(dx * np.sum(a - ff.background(grid)) + leaked - mass0) / (steps * dt)
        worst["drift"] = max(worst["drift"], drift)
    ok = (worst["order"] <= slack and worst["linf"] <= slack and worst["l1"] <= 1e-8
          and worst["drift"] <= 1e-6)
    acceptance_line("AC8", ok, f"max order violation {worst['order']:.1e}, L-inf overshoot {worst['linf']:.1e} "
                               f"(<= 1e-12); L1 growth {worst['l1']:.1e} (<= 1e-8); "
                               f"mass drift {worst['drift']:.1e}/unit time (<= 1e-6)")
    assert ok


def test_ac9_convergence(acceptance_line):
    times = (0.25, 0.5, 1.0)
    reference, _ = riemann_run(ONE, 0.5, 2.0, 0.5, 0.005, 20.0, 1.0, times)
    levels = [riemann_run(ONE, 0.5, 2.0, 0.5, dx, 20.0, 1.0, times)[0] for dx in (0.08, 0.04, 0.02)]
    table = convergence_study(levels, reference, (-5.0, 5.0))
    e = table.errors
    ok = e[0] > e[1] > e[2] and table.ratios[-1] <= 0.7
    acceptance_line("AC9", ok, "L1(K) errors " + ", ".join(f"{v:.4g}" for v in e)
                    + " ratios " + ", ".join(f"{r:.3f}" for r in table.ratios) + " (last <= 0.7)")
    assert ok


def test_ac10_consistency(acceptance_line):
    def psi(x):
        return np.exp(-x * x)

    spacings = (0.2, 0.1, 0.05, 0.025)
    fine = Grid1D(-10.0, spacings[-1], int(round(20 / spacings[-1])) + 1)
    parts, ok = [], True
    for s in (0.25, 0.5, 0.75):
        ref = dict(zip(np.round(fine.nodes, 9), fractional_laplacian_quad(psi, fine.nodes, s)))
        errs = []
        for dx in spacings:
            g = Grid1D(-10.0, dx, int(round(20 / dx)) + 1)
            errs.append(consistency_error(build_stencil(s, dx, n=g.n), psi, g,
                                          exact=lambda x: np.array([ref[v] for v in np.round(x, 9)])))
        ok &= all(a > b for a, b in zip(errs, errs[1:]))
        parts.append(f"s={s}: " + " > ".join(f"{v:.2e}" for v in errs))
    acceptance_line("AC10", ok, "; ".join(parts))
    assert ok


def test_ac11_figures(acceptance_line):
    fig2 = run_figure2([0.6, 0.75], [0.05])
    widths = {r["s"]: r["mushy_width"] for r in fig2["rows"]}
    ok2 = all(r["status"] == "ok" and r["mushy_width"] > 2 * r["dx"] for r in fig2["rows"])
    fig4 = run_figure4()
    cls = {k: v["classification"] for k, v in fig4["data"].items()}
    ok4 = fig4["classifications_differ"]
    fig5 = run_figure5()
    ok5 = fig5["non_monotone"] and fig5["expands"] and fig5["disappears"]
    ok = ok2 and ok4 and ok5
    acceptance_line("AC11", ok, f"figure2 mushy widths {', '.join(f's={s}: {w:.3f}' for s, w in widths.items())}; "
                                f"figure4 fronts {cls}; figure5 water {fig5['initial_water']:g} -> "
                                f"{fig5['peak_water']:g} -> {fig5['final_water']:g}")
    assert ok

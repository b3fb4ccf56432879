"""Selfsimilar profiles H(xi), xi = x t^{-1/(2s)}, extracted from Riemann runs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .nonlinearity import StefanGraph, phi_eval
from .operator import Stencil, apply

CONVERGENT = "CONVERGENT"
DIVERGENT = "DIVERGENT"
INCONCLUSIVE = "INCONCLUSIVE"


class NoCrossing(RuntimeError):
    """The profile never reaches the requested level inside the window."""


@dataclass
class Profile:
    xi: np.ndarray
    H: np.ndarray
    U: np.ndarray
    s: float
    graph: StefanGraph
    farfield: tuple[float, float]
    source: dict = field(default_factory=dict)

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("xi,H,U\n")
            for row in zip(self.xi, self.H, self.U):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


@dataclass
class InterfaceReport:
    xi_w: float
    xi_i: float
    mushy_width: float
    tol_u: float
    dx: float
    method: str = "linear interpolation between bracketing nodes"

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)


def extract_profile(series, t_ref: float, s: float | None = None) -> Profile:
    """Rescale the snapshot at ``t_ref``: xi = x / t_ref^{1/(2s)}."""
    datum = series.meta.get("initial", {}).get("datum", {})
    if datum.get("type") not in ("riemann", "constant"):
        raise ValueError(f"profiles need Riemann data, got {datum.get('type')!r}")
    if datum.get("type") == "riemann" and abs(datum.get("c", 0.0)) > 1e-12:
        raise ValueError("profiles need the jump at x = 0")
    order = series.order if s is None else s
    k = series.index(t_ref)
    t = series.times[k]
    if t <= 0:
        raise ValueError("profiles need t_ref > 0")
    scale = t ** (-1.0 / (2.0 * order))
    H = np.asarray(series.fields[k], dtype=float)
    return Profile(series.grid.nodes * scale, H, phi_eval(series.graph, H), order, series.graph,
                   (series.farfield.left, series.farfield.right),
                   {"t_ref": t_ref, "t_actual": t, "dx": series.grid.dx})


def profile_from_values(x, H, graph: StefanGraph, s: float, farfield=(0.0, 0.0), **source) -> Profile:
    """Wrap arbitrary samples (synthetic data, or a non-Riemann snapshot with xi = x)."""
    H = np.asarray(H, dtype=float)
    return Profile(np.asarray(x, dtype=float), H, phi_eval(graph, H), s, graph, tuple(farfield), source)


def collapse_error(series, times, K) -> float:
    """L1(K) distance between two rescaled profiles on the earlier profile's xi-grid."""
    t1, t2 = sorted(times)
    for t in (t1, t2):
        series.index(t)  # raises for times outside the series
    p1 = extract_profile(series, t1)
    p2 = extract_profile(series, t2)
    H2 = np.interp(p1.xi, p2.xi, p2.H)
    mask = (p1.xi >= K[0]) & (p1.xi <= K[1])
    if not np.any(mask):
        raise ValueError("K contains no profile samples")
    return float(p1.dxi * np.sum(np.abs(p1.H[mask] - H2[mask])))


def default_tol_u(U) -> float:
    return max(1e-10, 1e-6 * float(np.max(np.abs(U))))


def _crossing(xi, H, j, level):
    """Abscissa where the segment (j, j+1) crosses ``level`` (clamped to the segment)."""
    d = H[j] - H[j + 1]
    frac = 0.5 if d == 0 else np.clip((H[j] - level) / d, 0.0, 1.0)
    return float(xi[j] + frac * (xi[j + 1] - xi[j]))


def detect_interfaces(p: Profile, L: float | None = None, tol_u: float | None = None) -> InterfaceReport:
    """Water interface (last U > tol) and ice interface (first U < -tol).

    For one-phase graphs only the water level exists and xi_i = xi_w.
    """
    lo, hi = p.graph.flat_interval
    if L is not None:
        hi = lo + L if np.isfinite(lo) else L
    tol = default_tol_u(p.U) if tol_u is None else tol_u
    xi, H, U = p.xi, p.H, p.U

    water = np.nonzero(U > tol)[0]
    if water.size == 0 or water[-1] == xi.size - 1:
        raise NoCrossing("profile never drops to the water level inside the window")
    xi_w = _crossing(xi, H, water[-1], hi)

    if p.graph.is_one_phase:
        xi_i = xi_w
    else:
        ice = np.nonzero(U < -tol)[0]
        if ice.size == 0 or ice[0] == 0:
            raise NoCrossing("profile never reaches the ice level inside the window")
        xi_i = _crossing(xi, H, ice[0] - 1, lo)
    width = xi_i - xi_w
    if abs(width) <= tol:
        width = 0.0
    return InterfaceReport(xi_w, xi_i, max(width, 0.0), tol, p.dxi)


def _loglog_slope(x, y) -> float:
    if x.size < 8:
        raise ValueError(f"exponent fit needs at least 8 samples, got {x.size}")
    if np.any(y <= 0):
        raise ValueError("fit window contains non-positive values")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def fit_tail_exponent(p: Profile, level: float, window) -> float:
    """Least-squares slope of log(H - level) against log(xi) for xi in ``window``."""
    a, b = window
    edge = 0.8 * max(abs(p.xi[0]), abs(p.xi[-1]))
    if max(abs(a), abs(b)) > edge:
        raise ValueError(f"fit window {tuple(window)} reaches into the outer 20% of the grid")
    mask = (p.xi >= a) & (p.xi <= b)
    return _loglog_slope(np.abs(p.xi[mask]), p.H[mask] - level)


def fit_boundary_exponent(p: Profile, xi0: float, side_window, L: float | None = None) -> float:
    """Slope of log(H - L) against log(xi0 - xi) for xi0 - xi in ``side_window``.

    The three nodes nearest xi0 are always dropped.
    """
    level = p.graph.L if L is None else L
    d = xi0 - p.xi
    left = np.nonzero(d > 0)[0]
    keep = left[:-3] if left.size > 3 else left[:0]
    keep = keep[(d[keep] >= side_window[0]) & (d[keep] <= side_window[1])]
    return _loglog_slope(d[keep], p.H[keep] - level)


@dataclass
class MassTransfer:
    classification: str
    radii: list
    I_minus: list
    I_plus: list
    increments_minus: list
    increments_plus: list


def _classify(incr) -> str:
    # incr[0] is the core [0, R_1]; the rest are shells [R_{k-1}, R_k]
    incr = np.asarray(incr)
    if incr[0] > 0 and incr[-1] / incr[0] < 0.1:
        return CONVERGENT
    shells = incr[1:]
    if shells.size >= 2 and np.all(shells[1:] >= 0.8 * shells[:-1]):
        return DIVERGENT
    return INCONCLUSIVE


def mass_transfer(p: Profile, b1: float, b2: float, R_list) -> MassTransfer:
    """Truncated mass integrals on both sides of the origin and their growth pattern.

    I-(R) = int_{-R}^0 (b1 - H), I+(R) = int_0^R (H - b2), by trapezoid.
    CONVERGENT when the outermost shell adds less than a tenth of the core
    [0, R_1]; DIVERGENT when the shell increments do not shrink by more than
    20% from one shell to the next; INCONCLUSIVE otherwise.
    """
    R = np.asarray(sorted(R_list), dtype=float)
    if R[-1] > min(-p.xi[0], p.xi[-1]):
        raise ValueError("largest radius lies outside the profile window")
    Im, Ip = [], []
    for r in R:
        neg = (p.xi >= -r) & (p.xi <= 0)
        pos = (p.xi >= 0) & (p.xi <= r)
        Im.append(float(np.trapezoid(b1 - p.H[neg], p.xi[neg])))
        Ip.append(float(np.trapezoid(p.H[pos] - b2, p.xi[pos])))
    inc_m = np.diff(np.concatenate(([0.0], Im)))
    inc_p = np.diff(np.concatenate(([0.0], Ip)))
    cm, cp = _classify(inc_m), _classify(inc_p)
    cls = cm if cm == cp else INCONCLUSIVE
    return MassTransfer(cls, R.tolist(), Im, Ip, inc_m.tolist(), inc_p.tolist())


def sss_residual(p: Profile, st: Stencil, report: InterfaceReport | None = None) -> float:
    """Mean |-(1/2s) xi H' + L U| over interior nodes at least 5 cells from any interface."""
    if abs(st.dx - p.dxi) > 1e-9 * st.dx:
        raise ValueError("stencil spacing differs from the profile spacing")
    g = p.graph
    phi_ff = (float(phi_eval(g, p.farfield[0])), float(phi_eval(g, p.farfield[1])))
    lu = apply(st, p.U, phi_ff)
    dH = np.zeros_like(p.H)
    dH[1:-1] = (p.H[2:] - p.H[:-2]) / (2.0 * p.dxi)
    res = -p.xi * dH / (2.0 * p.s) + lu
    mask = np.zeros(p.xi.size, dtype=bool)
    n = p.xi.size
    mask[max(1, n // 10):n - max(1, n // 10)] = True
    if report is None:
        try:
            report = detect_interfaces(p)
        except NoCrossing:
            report = None
    if report is not None:
        for xi_c in {report.xi_w, report.xi_i}:
            mask &= np.abs(p.xi - xi_c) > 5.0 * p.dxi
    if not np.any(mask):
        return 0.0
    return float(np.mean(np.abs(res[mask])))


def antisymmetry_defect(p: Profile, enthalpy: bool = False) -> float:
    """max |U(xi) + U(-xi)|, or max |H(xi) + H(-xi) - L| off the jump cell."""
    if abs(p.xi[0] + p.xi[-1]) > 1e-9 * p.dxi or not np.allclose(p.xi, -p.xi[::-1], atol=1e-9 * p.dxi):
        raise ValueError("antisymmetry needs a grid symmetric about 0")
    if not enthalpy:
        return float(np.max(np.abs(p.U + p.U[::-1])))
    lo, hi = p.graph.flat_interval
    L = hi - lo if np.isfinite(lo) else hi
    shift = L if p.graph.kind == "two_phase" else 0.0
    off = np.abs(p.xi) > p.dxi
    return float(np.max(np.abs(p.H + p.H[::-1] - shift)[off]))

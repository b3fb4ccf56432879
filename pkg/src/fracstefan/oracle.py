"""Reference solutions that do not go through the finite-difference scheme.

* the fractional heat kernel P_s(x, t) (Cauchy kernel in closed form at s = 1/2,
  Fourier-cosine quadrature otherwise),
* the temperature of the antisymmetric two-phase Riemann problem, which is a
  convolution of the heat kernel with +-P step data,
* adaptive quadrature of (-Delta)^s psi for smooth psi,
* the very weak residual of a computed run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gamma, hyp1f1, roots_jacobi

from .operator import apply, kernel_constant

_GL_ORDER = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
# exp(-t rho^{2s}) < 1e-13 beyond the cutoff
_DECAY_EXPONENT = 30.0
# Gauss-Jacobi block covering the singular end of the second-difference integral
_NEAR_EDGE = 0.25
_NEAR_ORDER = 20
# refuse quadratures that would need more panels than this
_MAX_PANELS = 2_000_000


@dataclass(frozen=True)
class HeatKernelSpec:
    s: float
    quadrature: str = "auto"  # "auto" | "closed_form" | "fourier_cosine"
    tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"fractional order must lie in (0, 1), got {self.s}")
        if self.quadrature not in ("auto", "closed_form", "fourier_cosine"):
            raise ValueError(f"unknown quadrature {self.quadrature!r}")
        if self.quadrature == "closed_form" and self.s != 0.5:
            raise ValueError("a closed-form heat kernel exists only for s = 1/2")

    @property
    def use_closed_form(self) -> bool:
        return self.s == 0.5 and self.quadrature != "fourier_cosine"


def _panels(width: float, rho_max: float, levels: int = 52) -> np.ndarray:
    """Breakpoints: dyadic grading towards 0 below ``width``, uniform above."""
    graded = width * 2.0 ** -np.arange(levels, 0, -1)
    n_uniform = max(1, math.ceil((rho_max - width) / width))
    uniform = np.linspace(width, max(rho_max, 2 * width), n_uniform + 1)
    return np.concatenate(([0.0], graded, uniform))


def _panel_quad(f: Callable[[np.ndarray], np.ndarray], edges: np.ndarray) -> float:
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    pts = (a + half)[:, None] + half[:, None] * _GL_X[None, :]
    vals = f(pts.ravel()).reshape(pts.shape)
    return float(np.sum(half * (vals @ _GL_W)))


def _fourier_integral(g: Callable[[np.ndarray], np.ndarray], s: float, t: float,
                      freq: float, tol: float) -> float:
    """int_0^inf exp(-t rho^{2s}) g(rho) d rho, g oscillating with frequency ``freq``.

    Panel widths are halved until two successive values agree to ``tol``.
    """
    rho_max = (_DECAY_EXPONENT / t) ** (1.0 / (2.0 * s))
    width = min(1.0, rho_max / 4.0, 2.0 / max(freq, 1e-300))
    if rho_max / width > _MAX_PANELS:
        raise RuntimeError(f"heat-kernel quadrature needs more than {_MAX_PANELS} panels")

    def f(r):
        return np.exp(-t * r ** (2.0 * s)) * g(r)

    prev = _panel_quad(f, _panels(width, rho_max))
    for _ in range(12):
        width *= 0.5
        if rho_max / width > _MAX_PANELS:
            raise RuntimeError(f"heat-kernel quadrature needs more than {_MAX_PANELS} panels")
        cur = _panel_quad(f, _panels(width, rho_max))
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise RuntimeError(f"heat-kernel quadrature did not converge (last change {abs(cur - prev):.3g})")


def heat_kernel(spec: HeatKernelSpec, x, t: float):
    """P_s(x, t) = (1/pi) int_0^inf exp(-t rho^{2s}) cos(x rho) d rho."""
    if not t > 0:
        raise ValueError("heat kernel needs t > 0")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if spec.use_closed_form:
        out = t / (math.pi * (t * t + xs * xs))
    else:
        out = np.array([
            _fourier_integral(lambda r, xv=abs(xv): np.cos(xv * r), spec.s, t, abs(xv), spec.tol) / math.pi
            for xv in xs
        ])
    return out[0] if np.ndim(x) == 0 else out


def kernel_at_origin(s: float) -> float:
    """P_s(0, 1) = Gamma(1 + 1/(2s)) / pi."""
    return gamma(1.0 + 1.0 / (2.0 * s)) / math.pi


def kernel_mass(s: float, a: float, tol: float = 1e-10) -> float:
    """int_{-a}^{a} P_s(z, 1) dz for a >= 0."""
    a = abs(float(a))
    if a == 0.0:
        return 0.0
    if s == 0.5:
        return 2.0 / math.pi * math.atan(a)
    # (2/pi) int_0^inf exp(-rho^{2s}) sin(a rho)/rho d rho
    val = _fourier_integral(lambda r: a * np.sinc(a * r / math.pi), s, 1.0, a, tol)
    return 2.0 / math.pi * val


def antisym_exact_u(P: float, s: float, x, t: float):
    """Temperature of the two-phase solution with data L+P (x <= 0), -P (x > 0).

    u(x, t) = -sign(x) P int_{-|xi|}^{|xi|} P_s(z, 1) dz,  xi = x t^{-1/(2s)}.
    """
    if not t > 0:
        raise ValueError("exact solution needs t > 0")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    xi = xs * t ** (-1.0 / (2.0 * s))
    if s == 0.5:
        out = 2.0 * P / math.pi * np.arctan(-xi)
    else:
        out = np.array([-math.copysign(1.0, v) * P * kernel_mass(s, v) if v != 0 else 0.0 for v in xi])
    return out[0] if np.ndim(x) == 0 else out


def slope_at_origin(P: float, s: float) -> float:
    """C = 2 P P_s(0, 1); the exact temperature behaves like -C x near 0 at t = 1."""
    return 2.0 * P * kernel_at_origin(s)


def write_oracle_table(path, P: float, s: float, t: float, x) -> None:
    u = np.atleast_1d(antisym_exact_u(P, s, x, t))
    with open(path, "w") as fh:
        fh.write("x,u_exact\n")
        for xv, uv in zip(np.atleast_1d(x), u):
            fh.write(f"{xv:.17g},{uv:.17g}\n")


# (-Delta)^s of smooth functions ---------------------------------------------


def fractional_laplacian_quad(psi: Callable, x, s: float, reach: float = np.inf,
                              epsabs: float = 1e-13, epsrel: float = 1e-12) -> np.ndarray:
    """c_{1,s} int_0^inf (2 psi(x) - psi(x+z) - psi(x-z)) z^{-1-2s} dz at each x.

    The symmetric second difference removes the principal value. On [0, 1/4]
    the smooth quotient D(z)/z^2 is integrated against z^{1-2s} by Gauss-Jacobi;
    adaptive quadrature takes over beyond that. Past ``reach`` psi(x +- z) is
    taken to vanish and the remaining mass is added in closed form.
    """
    c = kernel_constant(s)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    t, w = roots_jacobi(_NEAR_ORDER, 0.0, 1.0 - 2.0 * s)
    z_near = _NEAR_EDGE * (t + 1.0) / 2.0
    w_near = w * (_NEAR_EDGE / 2.0) ** (2.0 - 2.0 * s)

    out = np.empty_like(xs)
    for i, xv in enumerate(xs):
        p0 = float(psi(xv))

        def weighted(z):
            return (2.0 * p0 - psi(xv + z) - psi(xv - z)) * z ** (-1.0 - 2.0 * s)

        near = float(np.dot(w_near, (2.0 * p0 - psi(xv + z_near) - psi(xv - z_near)) / z_near**2))
        far_lim = max(1.0, reach)
        mid, _ = integrate.quad(weighted, _NEAR_EDGE, 1.0, epsabs=epsabs, epsrel=epsrel, limit=200)
        far = 0.0
        if far_lim > 1.0:
            # psi(x - z) peaks near z = |x| when psi is centred at the origin
            split = min(far_lim, 2.0 * abs(xv) + 4.0)
            pts = [abs(xv)] if 1.0 < abs(xv) < split else None
            far, _ = integrate.quad(weighted, 1.0, split, points=pts, epsabs=epsabs, epsrel=epsrel, limit=400)
            if far_lim > split:
                tail, _ = integrate.quad(weighted, split, far_lim, epsabs=epsabs, epsrel=epsrel, limit=400)
                far += tail
        if np.isfinite(far_lim):
            far += 2.0 * p0 * far_lim ** (-2.0 * s) / (2.0 * s)
        out[i] = c * (near + mid + far)
    return out


def gaussian_fractional_laplacian(x, s: float) -> np.ndarray:
    """(-Delta)^s exp(-x^2) = 4^s Gamma(1/2+s)/Gamma(1/2) 1F1(1/2+s; 1/2; -x^2)."""
    x = np.asarray(x, dtype=float)
    return 4.0**s * gamma(0.5 + s) / math.sqrt(math.pi) * hyp1f1(0.5 + s, 0.5, -x * x)


# very weak formulation ----------------------------------------------------


@dataclass(frozen=True)
class SpaceTimeTest:
    """psi(x, t) = a(x) b(t) with closed-form time derivative.

    ``support`` bounds the x-support of a; b must vanish for t >= T.
    """

    space: Callable[[np.ndarray], np.ndarray]
    time: Callable[[float], float]
    time_deriv: Callable[[float], float]
    support: tuple[float, float]

    def __call__(self, x, t):
        return self.space(x) * self.time(t)

    def dt(self, x, t):
        return self.space(x) * self.time_deriv(t)


def smooth_bump(x, center=0.0, radius=1.0):
    """exp(-1/(1-r^2)) inside |x-center| < radius, 0 outside (C-infinity)."""
    r = (np.asarray(x, dtype=float) - center) / radius
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def bump_test_function(center: float, radius: float, T: float) -> SpaceTimeTest:
    """Smooth bump in x times a C-infinity cutoff in t vanishing at T."""

    def time(t):
        return float(smooth_bump(np.array([t]), 0.0, T)[0]) if t < T else 0.0

    def time_deriv(t):
        if t >= T:
            return 0.0
        r = t / T
        return -2.0 * r / (T * (1.0 - r * r) ** 2) * time(t)

    return SpaceTimeTest(lambda x: smooth_bump(x, center, radius), time, time_deriv,
                         (center - radius, center + radius))


def weak_residual(series, graph, psi: SpaceTimeTest, st) -> float:
    """Space-time quadrature of the very weak identity on a computed run.

    int int (h d_t psi - Phi(h) L psi) dx dt + int h_0 psi(., 0) dx, with the
    discrete operator standing in for (-Delta)^s and the time integral taken by
    the trapezoid rule over the stored snapshots. The contribution of the
    constant far field outside the window is added exactly.
    """
    grid = series.grid
    a, b = grid.window
    lo, hi = psi.support
    if lo <= a + grid.dx or hi >= b - grid.dx:
        raise ValueError("test function support must stay inside the window")
    x = grid.nodes
    dx = grid.dx
    cl, cr = st.farfield_coeffs(grid.n)
    ff = series.farfield
    phi_l, phi_r = float(graph(ff.left)), float(graph(ff.right))

    times = np.asarray(series.times, dtype=float)
    integrand = np.empty(times.size)
    space = psi.space(x)
    lpsi_space = apply(st, space)
    for k, (t, h) in enumerate(zip(times, series.fields)):
        h = np.asarray(h)
        bt, dbt = psi.time(t), psi.time_deriv(t)
        term_h = dbt * np.dot(h, space)
        # Phi(h) times L psi over the lattice: window part plus exact far-field part
        term_phi = bt * (np.dot(graph(h), lpsi_space) - phi_l * np.dot(cl, space) - phi_r * np.dot(cr, space))
        integrand[k] = dx * (term_h - term_phi)
    time_part = float(np.trapezoid(integrand, times)) if times.size > 1 else 0.0
    if times[0] != 0.0:
        raise ValueError("series must start with the initial snapshot")
    initial = dx * float(np.dot(np.asarray(series.fields[0]), space)) * psi.time(0.0)
    return time_part + initial

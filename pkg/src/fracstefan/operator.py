"""Monotone finite-difference discretisation of (-Delta)^s (and of -Delta) in 1-D.

For node b the operator reads

    L psi_b = sum_{0 < |g| <= R} (psi_b - psi_{b+g}) w_|g| + tail terms,

where off-window reads use the constant far field of that side and the
kernel mass beyond R*dx is added analytically. The weights are cell integrals
of the kernel c_{1,s}|z|^{-1-2s}; the singular cell |z| < dx/2 is folded into
w_1 through a second difference.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.special import gammaln


def kernel_constant(s: float) -> float:
    """c_{1,s} = 4^s Gamma(1/2+s) s / (sqrt(pi) Gamma(1-s)), the 1-D normalisation."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order must lie in (0, 1), got {s}")
    return s * math.exp(s * math.log(4.0) + gammaln(0.5 + s) - gammaln(1.0 - s)) / math.sqrt(math.pi)


def _kernel_mass_beyond(c1s, s, r):
    """c1s * int_r^inf z^{-1-2s} dz."""
    return c1s / (2.0 * s) * np.power(r, -2.0 * s)


@dataclass(frozen=True, eq=False)
class Stencil:
    """Weights w_1..w_m (m = min(R_cut, n-1) is decided per grid at apply time)."""

    s: float | None  # None marks the local 3-point Laplacian
    dx: float
    R_cut: int
    c1s: float
    near_corr: float  # second-difference correction folded into w_1
    tail_coeff: float
    _fft_cache: dict = field(default_factory=dict, repr=False)

    @property
    def is_local(self) -> bool:
        return self.s is None

    @property
    def order(self) -> float:
        """Scaling order: s, or 1 for the local operator."""
        return 1.0 if self.s is None else float(self.s)

    def weights(self, m: int | None = None) -> np.ndarray:
        """w_1..w_m (defaults to R_cut)."""
        m = self.R_cut if m is None else min(m, self.R_cut)
        if self.is_local:
            return np.array([1.0 / self.dx**2])[:m]
        g = np.arange(1, m + 1, dtype=float)
        a = (g - 0.5) * self.dx
        # a^{-2s} - (a+dx)^{-2s} written without cancellation
        w = -self.c1s / (2.0 * self.s) * np.power(a, -2.0 * self.s) * np.expm1(
            -2.0 * self.s * np.log1p(self.dx / a))
        if m >= 1:
            w[0] += self.near_corr
        return w

    @property
    def row_sum(self) -> float:
        """Total off-diagonal mass per row, 2*sum(w) + 2*tail."""
        if self.is_local:
            return 2.0 / self.dx**2
        return 2.0 * (float(_kernel_mass_beyond(self.c1s, self.s, 0.5 * self.dx)) + self.near_corr)

    def farfield_coeffs(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-node coefficients multiplying the left / right far-field temperatures."""
        b = np.arange(n, dtype=float)
        if self.is_local:
            cl = np.zeros(n)
            cl[0] = 1.0 / self.dx**2
            return cl, cl[::-1].copy()
        # first off-window neighbour on the left of node b sits at offset b+1
        reach = np.minimum(b, self.R_cut)
        cl = _kernel_mass_beyond(self.c1s, self.s, (reach + 0.5) * self.dx)
        cl[0] += self.near_corr
        return cl, cl[::-1].copy()

    def _kernel_fft(self, n: int):
        hit = self._fft_cache.get(n)
        if hit is not None:
            return hit
        m = min(self.R_cut, n - 1)
        w = self.weights(m)
        nfft = sfft.next_fast_len(n + 2 * m, real=True)
        ker = np.zeros(nfft)
        ker[1:m + 1] = w
        ker[nfft - m:] = w[::-1]
        spec = sfft.rfft(ker)
        cl, cr = self.farfield_coeffs(n)
        hit = (nfft, spec, cl, cr)
        self._fft_cache[n] = hit
        return hit

    def neighbour_sum(self, w: np.ndarray) -> np.ndarray:
        """sum_{0<|g|<=m, in window} w_|g| * v_{b+g}, computed as a circular FFT product."""
        n = w.size
        nfft, spec, _, _ = self._kernel_fft(n)
        if self.is_local:
            out = np.zeros(n)
            out[1:] += w[:-1]
            out[:-1] += w[1:]
            return out / self.dx**2
        return sfft.irfft(sfft.rfft(w, nfft) * spec, nfft)[:n]


def build_stencil(s: float, dx: float, R_cut: int | None = None, n: int | None = None) -> Stencil:
    """Fractional stencil of order s on spacing dx.

    ``R_cut`` defaults to ``n`` (the whole window) when the node count is given,
    otherwise to a radius covering 10^6 cells.
    """
    c1s = kernel_constant(s)
    if not dx > 0:
        raise ValueError("dx must be positive")
    if R_cut is None:
        R_cut = n if n is not None else 10**6
    if R_cut < 2:
        raise ValueError("truncation radius must be at least 2 nodes")
    half = 0.5 * dx
    # int_{|z|<dx/2} z^2/2 |z|^{-1-2s} dz, shared by the two neighbours at distance dx
    near = c1s * half ** (2.0 - 2.0 * s) / ((2.0 - 2.0 * s) * dx * dx)
    tail = float(_kernel_mass_beyond(c1s, s, (R_cut + 0.5) * dx))
    st = Stencil(float(s), float(dx), int(R_cut), c1s, near, tail)
    if np.any(st.weights(min(R_cut, 4096)) < 0):
        raise AssertionError("negative stencil weight")
    return st


def build_local_stencil(dx: float) -> Stencil:
    """(2v_b - v_{b+1} - v_{b-1}) / dx^2 with far-field reads at the window edges."""
    if not dx > 0:
        raise ValueError("dx must be positive")
    return Stencil(None, float(dx), 1, float("nan"), 0.0, 0.0)


def apply(st: Stencil, w, farfield_phi=(0.0, 0.0)) -> np.ndarray:
    """Discrete (-Delta)^s of the nodal temperatures ``w``.

    ``farfield_phi`` are the temperatures of the constant far field on the
    left and on the right.
    """
    w = np.asarray(getattr(w, "values", w), dtype=float)
    n = w.size
    _, _, cl, cr = st._kernel_fft(n)
    out = st.row_sum * w - st.neighbour_sum(w)
    out -= cl * farfield_phi[0]
    out -= cr * farfield_phi[1]
    return out


def apply_dense(st: Stencil, w, farfield_phi=(0.0, 0.0)) -> np.ndarray:
    """Reference O(n^2) evaluation, summing g = 1..R in order for every node."""
    w = np.asarray(getattr(w, "values", w), dtype=float)
    n = w.size
    m = min(st.R_cut, n - 1)
    wts = st.weights(m)
    out = np.zeros(n)
    for b in range(n):
        acc = 0.0
        for g in range(1, m + 1):
            left = w[b - g] if b - g >= 0 else farfield_phi[0]
            right = w[b + g] if b + g < n else farfield_phi[1]
            acc += (w[b] - left) * wts[g - 1] + (w[b] - right) * wts[g - 1]
        if not st.is_local:
            acc += (w[b] - farfield_phi[0]) * st.tail_coeff + (w[b] - farfield_phi[1]) * st.tail_coeff
            # neighbours between m and R_cut are all off-window
            if st.R_cut > m:
                extra_l = _kernel_mass_beyond(st.c1s, st.s, (m + 0.5) * st.dx) - st.tail_coeff
                acc += (w[b] - farfield_phi[0]) * extra_l + (w[b] - farfield_phi[1]) * extra_l
        out[b] = acc
    return out


def consistency_error(st: Stencil, psi, grid, exact=None) -> float:
    """dx * sum_b |L psi_b - (-Delta)^s psi(x_b)| over the window.

    ``psi`` must be (numerically) supported inside the window. The reference
    values come from ``exact`` when supplied, otherwise from adaptive
    quadrature of the singular integral (fractional stencils only).
    """
    x = grid.nodes
    if exact is None:
        if st.is_local:
            raise ValueError("the local stencil needs an explicit exact Laplacian")
        from .oracle import fractional_laplacian_quad

        ref = fractional_laplacian_quad(psi, x, st.s)
    else:
        ref = np.asarray(exact(x), dtype=float)
    got = apply(st, psi(x))
    return float(grid.dx * np.sum(np.abs(got - ref)))


def write_stencil(path_csv, st: Stencil, n: int) -> None:
    """Debug dump: ``gamma,omega`` rows plus a JSON header next to the CSV."""
    m = min(st.R_cut, n - 1)
    w = st.weights(m)
    with open(path_csv, "w") as fh:
        fh.write("gamma,omega\n")
        for g, v in enumerate(w, start=1):
            fh.write(f"{g},{v:.17g}\n")
    header = {"s": st.s, "dx": st.dx, "R_cut": st.R_cut,
              "c1s": None if st.is_local else st.c1s, "row_sum": st.row_sum}
    with open(str(path_csv).rsplit(".", 1)[0] + ".json", "w") as fh:
        json.dump(header, fh, indent=2)

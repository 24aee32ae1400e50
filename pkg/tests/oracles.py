"""Independent oracles used to freeze expected values in the test suite.

Everything in here deliberately avoids the package's own FFT code paths:
trigonometric polynomials are represented as explicit (mode, coefficient)
lists, integrals are done by adaptive quadrature, and DFTs by dense matrix
products.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad


class TrigPoly:
    """Explicit trigonometric polynomial sum_j c_j exp(i k_j omega tau)."""

    def __init__(self, modes, coeffs, period):
        self.modes = np.asarray(modes, dtype=int)
        self.coeffs = np.asarray(coeffs, dtype=np.complex128)
        self.period = float(period)
        self.omega = 2.0 * np.pi / self.period

    @classmethod
    def random(cls, rng, max_mode, period):
        ks = np.arange(-max_mode, max_mode + 1)
        cs = rng.standard_normal(len(ks)) + 1j * rng.standard_normal(len(ks))
        return cls(ks, cs, period)

    def __call__(self, tau):
        return complex(np.sum(self.coeffs * np.exp(1j * self.omega * self.modes * tau)))

    def sample(self, ntau):
        nodes = self.period / ntau * np.arange(ntau)
        return np.asarray([self(t) for t in nodes])

    @property
    def mean(self):
        sel = self.modes == 0
        return complex(self.coeffs[sel].sum()) if sel.any() else 0.0 + 0.0j


def _cquad(f, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        re, _ = quad(lambda x: f(x).real, a, b, **kw)
        im, _ = quad(lambda x: f(x).imag, a, b, **kw)
    return re + 1j * im


_QUAD_OPTS = dict(limit=400, epsabs=1e-13, epsrel=1e-12)


def lowpass_integral_oracle(poly: TrigPoly, mu: float, tau: float) -> complex:
    """The exponentially weighted sliding average of a trig polynomial.

    Evaluates  mu/(e^{mu P}-1) * int_tau^{tau+P} e^{mu(s-tau)} g(s) ds  by
    adaptive quadrature in the overflow-safe form with weight
    w(r) = mu e^{mu(r-P)} / (1 - e^{-mu P}),  r = s - tau in [0, P].
    """
    P = poly.period
    scale = -np.expm1(-mu * P)

    def f(r):
        return mu * np.exp(mu * (r - P)) / scale * poly(tau + r)

    # split off the boundary layer of width ~1/mu near r = P for stiff mu
    cut = max(0.0, P - 30.0 / mu)
    total = 0.0 + 0.0j
    for a, b in ((0.0, cut), (cut, P)):
        if b > a:
            total += _cquad(f, a, b, **_QUAD_OPTS)
    return total


def antiderivative_oracle(poly: TrigPoly, taus) -> np.ndarray:
    """Zero-mean antiderivative of (I - mean)g, straight from the definition.

    Computes  (I - avg) int_0^tau (g(s) - mean g) ds  with adaptive
    quadrature for the primitive; the average of the (periodic) primitive
    is the exact rectangle rule on equispaced samples.
    """
    mean = poly.mean

    def prim(tau):
        if tau == 0.0:
            return 0.0 + 0.0j
        return _cquad(lambda s: poly(s) - mean, 0.0, tau, **_QUAD_OPTS)

    nodes = np.arange(64) * poly.period / 64
    prim_mean = np.mean([prim(t) for t in nodes])
    return np.asarray([prim(t) - prim_mean for t in taus])


def dense_dft_multiplier(values: np.ndarray, x0, x1, symbol) -> np.ndarray:
    """Apply a Fourier multiplier by dense matrix DFT (O(n^2) reference path)."""
    n = values.shape[-1]
    m = np.arange(n)
    k = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    xi = 2.0 * np.pi * k / (x1 - x0)
    fwd = np.exp(-2j * np.pi * np.outer(k, m) / n) / n
    inv = np.exp(2j * np.pi * np.outer(m, k) / n)
    sym = np.asarray([symbol(x) for x in xi], dtype=np.complex128)
    coeffs = values @ fwd.T
    return (coeffs * sym) @ inv.T


def slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])

"""Oscillatory right-hand sides for the two benchmark equations.

Both test problems fit the abstract form

    du/dt = F(t, t/eps, u),     F periodic in the fast argument tau,

after filtering out the stiff linear propagator:

* Klein-Gordon in the weakly relativistic scaling, rewritten as a first
  order system v = (v+, v-) and filtered by exp(-i (t/eps) sqrt(1-eps Lap));
  the fast carrier splits off as a scalar phase exp(i tau) while the
  bounded remainder exp(i t A_eps) stays in slow time, where the shifted
  dispersion symbol a(xi) = (sqrt(1+eps xi^2)-1)/eps obeys 0 <= a <= xi^2/2
  for every eps.

* Cubic Schroedinger with a stiff 1/eps Laplacian on a torus [0, L],
  filtered by exp(-i (t/eps) Lap); the free flow is periodic in tau with
  period L^2/(2 pi), which sets the tau period of the model.

The cubic nonlinearity is gauge invariant, f(e^{is} z) = e^{is} f(z), and
not complex-differentiable; directional derivatives are the real-linear
maps  d(|z|^2 z)[w] = 2|z|^2 w + z^2 conj(w)  carried explicitly.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .phase import oscillation_phases
from .spectral import (
    SpatialField,
    SpatialGrid,
    TauGrid,
    TwoScaleField,
    _fftx,
    _ifftx,
    apply_x_multiplier,
    dealias_two_thirds,
)


def cubic_gauge(z: np.ndarray, coeff) -> np.ndarray:
    """Gauge-invariant cubic nonlinearity coeff * |z|^2 z."""
    return coeff * (z.real**2 + z.imag**2) * z


def cubic_gauge_dir(z: np.ndarray, w: np.ndarray, coeff) -> np.ndarray:
    """Real-linear directional derivative of cubic_gauge at z in direction w."""
    return coeff * (2.0 * (z.real**2 + z.imag**2) * w + z * z * np.conj(w))


class VectorFieldModel(ABC):
    """Oscillatory vector field F(t, tau, u) with filters and derivatives.

    Implementations are immutable after construction and all evaluation
    methods are pure, so instances can be shared freely between workers.
    """

    model_id: str
    period: float
    epsilon: float
    ncomp: int
    grid: SpatialGrid

    @abstractmethod
    def eval_F(self, t: float, U: TwoScaleField) -> TwoScaleField:
        """F(t, tau_j, U_j) on every tau collocation slice."""

    def eval_F_xmodes(self, t: float, xmodes: np.ndarray, taugrid: TauGrid) -> np.ndarray:
        """eval_F on raw x-Fourier coefficients (tau stays collocated).

        Fallback path: transform, evaluate, transform back.  Concrete models
        override this to skip two transforms per call; the integrator keeps
        its state in x-mode space and relies on it.
        """
        U = TwoScaleField(taugrid, self.grid, _ifftx(xmodes))
        return _fftx(self.eval_F(t, U).values)

    @abstractmethod
    def dir_dF(self, t: float, U: TwoScaleField, W: TwoScaleField) -> TwoScaleField:
        """Directional derivative of eval_F at U in direction W (real-linear)."""

    @abstractmethod
    def dt_F(self, t: float, U: TwoScaleField) -> TwoScaleField:
        """Partial derivative of F in slow time at fixed u."""

    @abstractmethod
    def unfilter(self, f: SpatialField, t: float, tau_star=None) -> SpatialField:
        """Map the filtered unknown back to the physical one at time t."""

    @abstractmethod
    def filter(self, f: SpatialField, t: float, tau_star=None) -> SpatialField:
        """Inverse of unfilter (a unitary Fourier multiplier)."""


class NkgModel(VectorFieldModel):
    """Klein-Gordon vector field in filtered first-order form.

    Parameters: eps > 0 (square of the inverse light speed scaling), lam the
    cubic coefficient (nonlinearity lam*|u|^2 u), and the periodic spatial
    grid.  States carry two components (v+, v-); real Klein-Gordon data
    corresponds to v- = conj(v+).
    """

    model_id = "nkg"
    ncomp = 2

    def __init__(self, epsilon: float, lam: float, grid: SpatialGrid, dealias: bool = False):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.epsilon = float(epsilon)
        self.lam = float(lam)
        self.grid = grid
        self.period = 2.0 * np.pi
        self.dealias = dealias
        xi2 = grid.wavenumbers**2
        self._sqrt_sym = np.sqrt(1.0 + self.epsilon * xi2)            # sqrt(1 - eps Lap)
        self._inv_sqrt_sym = 1.0 / self._sqrt_sym                     # (1 - eps Lap)^(-1/2)
        # (sqrt(1+eps xi^2)-1)/eps in the cancellation-free form
        self._shift_sym = xi2 / (1.0 + self._sqrt_sym)
        assert np.all(self._shift_sym <= xi2 / 2.0 + 1e-12)
        self._tau_phase_cache: dict[int, np.ndarray] = {}

    def _tau_phases(self, taugrid: TauGrid) -> np.ndarray:
        tbl = self._tau_phase_cache.get(taugrid.ntau)
        if tbl is None:
            tbl = np.exp(1j * taugrid.nodes)[:, None, None]
            self._tau_phase_cache[taugrid.ntau] = tbl
        return tbl

    def _dealias_mask(self):
        nx = self.grid.nx
        k = np.rint(np.fft.fftfreq(nx, d=1.0 / nx)).astype(int)
        return (np.abs(k) <= nx // 3).astype(float)

    def _rhs_xmodes(self, t, xmodes, taugrid, w_xmodes=None):
        """Vector field (or its derivative) on x-mode input, x-mode output."""
        ph = self._tau_phases(taugrid)
        slow = np.exp(1j * t * self._shift_sym)
        v = _ifftx(xmodes * slow) * ph
        w = 0.5 * (v[:, 0, :] + np.conj(v[:, 1, :]))
        if w_xmodes is None:
            g = cubic_gauge(w, self.lam)
        else:
            vw = _ifftx(w_xmodes * slow) * ph
            zeta = 0.5 * (vw[:, 0, :] + np.conj(vw[:, 1, :]))
            g = cubic_gauge_dir(w, zeta, self.lam)
        G = np.stack([g, np.conj(g)], axis=1)
        G *= np.conj(ph)
        out = _fftx(G)
        out *= 1j * self._inv_sqrt_sym * np.conj(slow)
        if self.dealias:
            out *= self._dealias_mask()
        return out

    def eval_F_xmodes(self, t, xmodes, taugrid):
        return self._rhs_xmodes(t, xmodes, taugrid)

    def eval_F(self, t, U):
        out = self._rhs_xmodes(t, _fftx(U.values), U.taugrid)
        return TwoScaleField(U.taugrid, U.grid, _ifftx(out))

    def dir_dF(self, t, U, W):
        out = self._rhs_xmodes(t, _fftx(U.values), U.taugrid, w_xmodes=_fftx(W.values))
        return TwoScaleField(U.taugrid, U.grid, _ifftx(out))

    def dt_F(self, t, U):
        ph = self._tau_phases(U.taugrid)
        slow = np.exp(1j * t * self._shift_sym)
        Uhat = _fftx(U.values)
        v = _ifftx(Uhat * slow) * ph
        w = 0.5 * (v[:, 0, :] + np.conj(v[:, 1, :]))
        g = cubic_gauge(w, self.lam)
        # direction i*A v, with A the shifted dispersion multiplier
        z = _ifftx(Uhat * (1j * self._shift_sym * slow)) * ph
        zeta = 0.5 * (z[:, 0, :] + np.conj(z[:, 1, :]))
        dg = cubic_gauge_dir(w, zeta, self.lam)
        G = np.stack([g, np.conj(g)], axis=1) * np.conj(ph)
        DG = np.stack([dg, np.conj(dg)], axis=1) * np.conj(ph)
        modes = _fftx(G) * (-1j * self._shift_sym) + _fftx(DG)
        out = 1j * _ifftx(modes * (self._inv_sqrt_sym * np.conj(slow)))
        res = TwoScaleField(U.taugrid, U.grid, out)
        return dealias_two_thirds(res) if self.dealias else res

    # -- filters ----------------------------------------------------------

    def _fast_phase(self, t, tau_star):
        if tau_star is None:
            return float(oscillation_phases(t, self.epsilon, np.array([1.0]))[0])
        return float(tau_star)

    def unfilter(self, f, t, tau_star=None):
        # exp(i (t/eps) sqrt(1-eps Lap)): fast scalar carrier + slow shift
        theta = self._fast_phase(t, tau_star)
        mult = np.exp(1j * (theta + t * self._shift_sym))
        return apply_x_multiplier(f, mult)

    def filter(self, f, t, tau_star=None):
        theta = self._fast_phase(t, tau_star)
        mult = np.exp(-1j * (theta + t * self._shift_sym))
        return apply_x_multiplier(f, mult)

    # -- changes of variables ----------------------------------------------

    def to_first_order(self, phi: SpatialField, gamma: SpatialField) -> SpatialField:
        """Initial (v+, v-) from Klein-Gordon data u(0)=phi, du/dt(0)=gamma/eps.

        v+ = phi - i (1-eps Lap)^(-1/2) gamma and v- its conjugate partner.
        """
        if phi.grid != self.grid or gamma.grid != self.grid:
            raise ValueError("data must live on the model grid")
        smooth = _ifftx(_fftx(gamma.values) * self._inv_sqrt_sym)
        vp = phi.values[0] - 1j * smooth[0]
        vm = np.conj(phi.values[0]) - 1j * np.conj(smooth[0])
        return SpatialField(self.grid, np.stack([vp, vm]))

    def reconstruct(self, v: SpatialField, t: float, tau_star=None, filtered: bool = True):
        """Recover (u, du/dt) from the first-order unknown at time t.

        If `filtered` the input is first rotated back by the dispersive
        carrier.  u = (v+ + conj(v-))/2 and
        du/dt = (i/(2 eps)) sqrt(1-eps Lap) (v+ - conj(v-)).
        """
        if filtered:
            v = self.unfilter(v, t, tau_star)
        vp, vm = v.values[0], v.values[1]
        u = 0.5 * (vp + np.conj(vm))
        diff = vp - np.conj(vm)
        ut = _ifftx(_fftx(diff[None, :]) * self._sqrt_sym)[0] * (0.5j / self.epsilon)
        return SpatialField(self.grid, u[None, :]), SpatialField(self.grid, ut[None, :])


class NlsModel(VectorFieldModel):
    """Cubic Schroedinger vector field on a torus, in the filtered frame.

    gamma(x) enters as grid samples (real-valued); the fast period is fixed
    by the grid length, period = L^2 / (2 pi).
    """

    model_id = "nls"
    ncomp = 1

    def __init__(self, epsilon: float, gamma: SpatialField, dealias: bool = False):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if np.max(np.abs(gamma.values.imag)) > 0.0:
            raise ValueError("gamma must be real-valued")
        self.epsilon = float(epsilon)
        self.grid = gamma.grid
        self.gamma = gamma.values[0].real.copy()
        self.period = self.grid.length**2 / (2.0 * np.pi)
        self.dealias = dealias
        self._xi2 = self.grid.wavenumbers**2
        # (2 pi / L)^2: one tau period advances every mode phase by 2 pi k^2
        self._base_freq = (2.0 * np.pi / self.grid.length) ** 2
        self._ksq = np.rint(self._xi2 / self._base_freq).astype(int)
        self._neg_i_gamma = -1j * self.gamma
        self._flow_cache: dict[int, tuple] = {}

    def _free_flow(self, taugrid: TauGrid) -> tuple:
        """(exp(i tau_j Lap), its conjugate) as (ntau, 1, nx) tables."""
        tbl = self._flow_cache.get(taugrid.ntau)
        if tbl is None:
            fwd = np.exp(-1j * np.outer(taugrid.nodes, self._xi2))[:, None, :]
            tbl = (fwd, np.conj(fwd))
            self._flow_cache[taugrid.ntau] = tbl
        return tbl

    def _dealias_mask(self):
        nx = self.grid.nx
        k = np.rint(np.fft.fftfreq(nx, d=1.0 / nx)).astype(int)
        return (np.abs(k) <= nx // 3).astype(float)

    def _rhs_xmodes(self, t, xmodes, taugrid, w_xmodes=None):
        E, Econj = self._free_flow(taugrid)
        V = _ifftx(xmodes * E)
        if w_xmodes is None:
            mag = V.real**2
            mag += V.imag**2
            g = V
            g *= mag
        else:
            Z = _ifftx(w_xmodes * E)
            g = cubic_gauge_dir(V, Z, 1.0)
        g *= self._neg_i_gamma
        out = _fftx(g)
        out *= Econj
        if self.dealias:
            out *= self._dealias_mask()
        return out

    def eval_F_xmodes(self, t, xmodes, taugrid):
        return self._rhs_xmodes(t, xmodes, taugrid)

    def eval_F(self, t, U):
        out = self._rhs_xmodes(t, _fftx(U.values), U.taugrid)
        return TwoScaleField(U.taugrid, U.grid, _ifftx(out))

    def dir_dF(self, t, U, W):
        out = self._rhs_xmodes(t, _fftx(U.values), U.taugrid, w_xmodes=_fftx(W.values))
        return TwoScaleField(U.taugrid, U.grid, _ifftx(out))

    def dt_F(self, t, U):
        return TwoScaleField.zeros(U.taugrid, U.grid, self.ncomp)

    def _flow_phases(self, t, tau_star):
        """Phases theta * k^2 mod 2pi of exp(i (t/eps) Lap), overflow-safe.

        Reduces the scalar (t/eps) * (2 pi / L)^2 once (double-double), then
        scales by the integer k^2; one full period shifts every phase by an
        exact multiple of 2 pi, so a supplied diagonal phase tau_star can
        stand in for t/eps.
        """
        if tau_star is None:
            theta = float(oscillation_phases(t, self.epsilon, np.array([self._base_freq]))[0])
        else:
            theta = float(np.mod(tau_star, self.period)) * self._base_freq
        return np.mod(theta * self._ksq, 2.0 * np.pi)

    def unfilter(self, f, t, tau_star=None):
        return apply_x_multiplier(f, np.exp(-1j * self._flow_phases(t, tau_star)))

    def filter(self, f, t, tau_star=None):
        return apply_x_multiplier(f, np.exp(1j * self._flow_phases(t, tau_star)))


# ---------------------------------------------------------------------------
# benchmark problem builders


def nkg_benchmark(epsilon: float, nx: int = 200, lam: float = 4.0):
    """Standard Klein-Gordon test case on [-8, 8]: bell-shaped phi, gamma = 0.

    Returns (model, initial filtered state).
    """
    grid = SpatialGrid(-8.0, 8.0, nx)
    model = NkgModel(epsilon, lam, grid)
    x = grid.nodes
    phi = SpatialField(grid, 2.0 / (np.exp(x**2) + np.exp(-(x**2))))
    gamma = SpatialField.zeros(grid)
    v0 = model.to_first_order(phi, gamma)
    return model, v0


def nls_benchmark(epsilon: float, nx: int = 64):
    """Standard Schroedinger test case on [0, 2 pi]: gamma = 2 cos 2x.

    Returns (model, initial state cos x + sin x).
    """
    grid = SpatialGrid(0.0, 2.0 * np.pi, nx)
    x = grid.nodes
    gamma = SpatialField(grid, 2.0 * np.cos(2.0 * x) + 0j)
    model = NlsModel(epsilon, gamma)
    u0 = SpatialField(grid, np.cos(x) + np.sin(x) + 0j)
    return model, u0


def make_benchmark(model_id: str, epsilon: float, nx: int):
    if model_id == "nkg":
        return nkg_benchmark(epsilon, nx)
    if model_id == "nls":
        return nls_benchmark(epsilon, nx)
    raise ValueError(f"unknown model '{model_id}'")

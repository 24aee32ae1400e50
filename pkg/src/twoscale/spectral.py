"""Fourier collocation grids and the diagonal operator algebra.

Two independent periodic directions appear throughout the package: the
spatial variable x on [x0, x1) and the fast variable tau on one period
[0, P).  Fields are stored as collocation values (not coefficients); all
operators below transform on demand, act diagonally on Fourier modes and
transform back.

DFT convention (used consistently everywhere): the forward transform
carries the 1/n factor,

    fhat_k = (1/n) * sum_m f(x_m) exp(-i xi_k x_m),

so that coefficients are mode amplitudes and Parseval reads
sum_k |fhat_k|^2 = (1/n) sum_m |f_m|^2.  Only relative errors are reported
by the harness, which makes results independent of this choice.

Even-grid conventions: the unpaired Nyquist mode is zeroed under the
antisymmetric operators (tau derivative, zero-mean antiderivative) and
treated as a pure cosine under trigonometric interpolation and the
low-pass solves (the real part of the symbol is applied).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

# scipy.fft thread count for batched transforms; 1-D lines are always
# computed by the same kernel so results do not depend on this value.
FFT_WORKERS = 2


def _fftx(values: np.ndarray) -> np.ndarray:
    return _fft.fft(values, axis=-1, workers=FFT_WORKERS)


def _ifftx(values: np.ndarray) -> np.ndarray:
    return _fft.ifft(values, axis=-1, workers=FFT_WORKERS)


def _ffttau(values: np.ndarray) -> np.ndarray:
    return _fft.fft(values, axis=0, workers=FFT_WORKERS)


def _iffttau(values: np.ndarray) -> np.ndarray:
    return _fft.ifft(values, axis=0, workers=FFT_WORKERS)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on [x0, x1) with an even number of points."""

    x0: float
    x1: float
    nx: int

    def __post_init__(self):
        if not self.x1 > self.x0:
            raise ValueError("x1 must exceed x0")
        if self.nx < 4 or self.nx % 2 != 0:
            raise ValueError("nx must be even and >= 4")

    @property
    def length(self) -> float:
        return self.x1 - self.x0

    @property
    def dx(self) -> float:
        return self.length / self.nx

    @property
    def nodes(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def wavenumbers(self) -> np.ndarray:
        """xi_k = 2 pi k / (x1-x0) in FFT ordering (0..n/2-1, -n/2..-1)."""
        return 2.0 * np.pi * _fft.fftfreq(self.nx, d=self.dx)


@dataclass(frozen=True)
class TauGrid:
    """Collocation grid over one period of the fast variable."""

    period: float
    ntau: int

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        if self.ntau < 2 or self.ntau % 2 != 0:
            raise ValueError("ntau must be even and >= 2")

    @property
    def omega(self) -> float:
        """Fundamental frequency 2 pi / period."""
        return 2.0 * np.pi / self.period

    @property
    def nodes(self) -> np.ndarray:
        return self.period / self.ntau * np.arange(self.ntau)

    @property
    def mode_numbers(self) -> np.ndarray:
        """Integer mode indices in FFT ordering."""
        k = np.fft.fftfreq(self.ntau, d=1.0 / self.ntau)
        return np.rint(k).astype(int)


def _as_cvalues(values, shape_hint=None) -> np.ndarray:
    out = np.asarray(values, dtype=np.complex128)
    if shape_hint is not None and out.shape != shape_hint:
        raise ValueError(f"expected shape {shape_hint}, got {out.shape}")
    return out


@dataclass
class SpatialField:
    """Complex function(s) of x: values has shape (ncomp, nx)."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_2d(_as_cvalues(self.values))
        if self.values.shape[-1] != self.grid.nx:
            raise ValueError("values incompatible with grid")

    @property
    def ncomp(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "SpatialField":
        return SpatialField(self.grid, self.values.copy())

    def __add__(self, other: "SpatialField") -> "SpatialField":
        return SpatialField(self.grid, self.values + other.values)

    def __sub__(self, other: "SpatialField") -> "SpatialField":
        return SpatialField(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "SpatialField":
        return SpatialField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    @staticmethod
    def zeros(grid: SpatialGrid, ncomp: int = 1) -> "SpatialField":
        return SpatialField(grid, np.zeros((ncomp, grid.nx), dtype=np.complex128))


@dataclass
class TwoScaleField:
    """Augmented unknown on the tau x space grid: values (ntau, ncomp, nx)."""

    taugrid: TauGrid
    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = _as_cvalues(self.values)
        if self.values.ndim != 3:
            raise ValueError("values must be (ntau, ncomp, nx)")
        if self.values.shape[0] != self.taugrid.ntau:
            raise ValueError("values incompatible with tau grid")
        if self.values.shape[2] != self.grid.nx:
            raise ValueError("values incompatible with spatial grid")

    @property
    def ncomp(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "TwoScaleField":
        return TwoScaleField(self.taugrid, self.grid, self.values.copy())

    def slice_at(self, j: int) -> SpatialField:
        """The tau collocation slice j as a SpatialField."""
        return SpatialField(self.grid, self.values[j].copy())

    def __add__(self, other: "TwoScaleField") -> "TwoScaleField":
        return TwoScaleField(self.taugrid, self.grid, self.values + other.values)

    def __sub__(self, other: "TwoScaleField") -> "TwoScaleField":
        return TwoScaleField(self.taugrid, self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "TwoScaleField":
        return TwoScaleField(self.taugrid, self.grid, self.values * scalar)

    __rmul__ = __mul__

    @staticmethod
    def zeros(taugrid: TauGrid, grid: SpatialGrid, ncomp: int = 1) -> "TwoScaleField":
        return TwoScaleField(
            taugrid, grid, np.zeros((taugrid.ntau, ncomp, grid.nx), dtype=np.complex128)
        )

    @staticmethod
    def from_constant(taugrid: TauGrid, f: SpatialField) -> "TwoScaleField":
        """Broadcast a spatial field to a tau-independent two-scale field."""
        vals = np.broadcast_to(f.values, (taugrid.ntau,) + f.values.shape).copy()
        return TwoScaleField(taugrid, f.grid, vals)


# ---------------------------------------------------------------------------
# x-direction multipliers


def x_multiplier_array(f_or_grid, symbol) -> np.ndarray:
    """Evaluate a symbol (callable of xi, or array) on the grid wavenumbers."""
    grid = f_or_grid if isinstance(f_or_grid, SpatialGrid) else f_or_grid.grid
    if callable(symbol):
        sym = np.asarray(symbol(grid.wavenumbers), dtype=np.complex128)
    else:
        sym = np.asarray(symbol, dtype=np.complex128)
    if sym.shape != (grid.nx,):
        raise ValueError("symbol array must have one value per wavenumber")
    if not np.all(np.isfinite(sym)):
        raise ValueError("non-finite symbol value on the grid")
    return sym


def apply_x_multiplier(f: SpatialField, symbol) -> SpatialField:
    """Apply a Fourier multiplier in x: ifft(symbol(xi) * fft(f)).

    `symbol` may be a callable xi -> complex or a precomputed array of
    length nx in FFT ordering.  Exact on trigonometric polynomials the grid
    resolves.
    """
    sym = x_multiplier_array(f, symbol)
    return SpatialField(f.grid, _ifftx(_fftx(f.values) * sym))


def apply_x_multiplier_two_scale(U: TwoScaleField, symbol) -> TwoScaleField:
    sym = x_multiplier_array(U.grid, symbol)
    return TwoScaleField(U.taugrid, U.grid, _ifftx(_fftx(U.values) * sym))


def x_modes(f: SpatialField) -> np.ndarray:
    """Normalized x-Fourier coefficients, shape (ncomp, nx)."""
    return _fftx(f.values) / f.grid.nx


def resample_x(f: SpatialField, nx: int) -> SpatialField:
    """Spectral resampling to a grid with nx points (pad or truncate modes)."""
    if nx == f.grid.nx:
        return f.copy()
    new_grid = SpatialGrid(f.grid.x0, f.grid.x1, nx)
    old = x_modes(f)
    out = np.zeros((f.ncomp, nx), dtype=np.complex128)
    keep = min(nx, f.grid.nx) // 2
    out[:, :keep] = old[:, :keep]
    out[:, -keep:] = old[:, -keep:]
    return SpatialField(new_grid, _ifftx(out * nx))


# ---------------------------------------------------------------------------
# tau-direction operators (all diagonal in the tau Fourier basis)


def _tau_k_omega(U: TwoScaleField) -> np.ndarray:
    """k*omega per tau mode, shaped for broadcasting over (ntau, ncomp, nx)."""
    k = U.taugrid.mode_numbers.astype(float)
    return (k * U.taugrid.omega)[:, None, None]


def _nyquist_index(ntau: int) -> int:
    return ntau // 2


def _apply_tau_multiplier(U: TwoScaleField, mult: np.ndarray) -> TwoScaleField:
    return TwoScaleField(U.taugrid, U.grid, _iffttau(_ffttau(U.values) * mult))


def tau_average(U: TwoScaleField) -> SpatialField:
    """Projection onto tau-constants: the mean over the collocation nodes.

    The arithmetic mean is the exact rectangle rule for trigonometric
    polynomials, i.e. the zero tau-Fourier mode.
    """
    return SpatialField(U.grid, U.values.mean(axis=0))


def tau_derivative(U: TwoScaleField) -> TwoScaleField:
    """d/dtau, spectrally: mode k -> i k omega; Nyquist mode zeroed."""
    mult = 1j * _tau_k_omega(U)
    mult[_nyquist_index(U.taugrid.ntau)] = 0.0
    return _apply_tau_multiplier(U, mult)


def tau_antiderivative(U: TwoScaleField) -> TwoScaleField:
    """Zero-mean tau-antiderivative: mode k != 0 -> /(i k omega), mode 0 -> 0.

    Right-inverse of tau_derivative on zero-mean fields; annihilates
    tau-constants.  Nyquist mode zeroed as for tau_derivative.
    """
    kw = _tau_k_omega(U)
    mult = np.zeros_like(kw, dtype=np.complex128)
    nz = kw != 0.0
    mult[nz] = 1.0 / (1j * kw[nz])
    mult[_nyquist_index(U.taugrid.ntau)] = 0.0
    return _apply_tau_multiplier(U, mult)


def _lowpass_multiplier(taugrid: TauGrid, mu: float) -> np.ndarray:
    k = taugrid.mode_numbers.astype(float)
    mult = 1.0 / (1.0 + 1j * k * taugrid.omega / mu)
    # unpaired cosine mode: apply the symmetrized (real) symbol
    mult[_nyquist_index(taugrid.ntau)] = mult[_nyquist_index(taugrid.ntau)].real
    return mult[:, None, None]


def tau_lowpass(U: TwoScaleField, mu: float) -> TwoScaleField:
    """Invert (I + d_tau / mu) on periodic fields: mode k -> 1/(1 + i k omega/mu).

    This is the implicit periodic-transport solve at the heart of both time
    steppers; equivalently a first-order low-pass filter in tau with cutoff
    mu.  Equals the stable exponentially-weighted sliding average
    mu/(e^{mu P}-1) * int_tau^{tau+P} e^{mu(s-tau)} g(s) ds on trigonometric
    polynomials, and is nonexpansive in L^2_tau.
    """
    if not (mu > 0.0 and np.isfinite(mu)):
        raise ValueError("mu must be positive and finite")
    return _apply_tau_multiplier(U, _lowpass_multiplier(U.taugrid, mu))


def tau_lowpass_complement(U: TwoScaleField, mu: float) -> TwoScaleField:
    """Apply (I - d_tau / mu): mode k -> 1 - i k omega/mu (Nyquist -> 1).

    Paired with tau_lowpass at the same cutoff this forms the Cayley
    (trapezoidal) transport map whose factors have modulus exactly one.
    """
    if not (mu > 0.0 and np.isfinite(mu)):
        raise ValueError("mu must be positive and finite")
    kw = _tau_k_omega(U)
    mult = 1.0 - 1j * kw / mu
    mult[_nyquist_index(U.taugrid.ntau)] = 1.0
    return _apply_tau_multiplier(U, mult)


def evaluate_at_tau(U: TwoScaleField, tau_star: float) -> SpatialField:
    """Trigonometric interpolation of U at an arbitrary tau in [0, P).

    The Nyquist mode is split symmetrically (pure cosine), so grid nodes are
    reproduced to machine precision.
    """
    ntau = U.taugrid.ntau
    k = U.taugrid.mode_numbers.astype(float)
    theta = U.taugrid.omega * float(tau_star)
    phases = np.exp(1j * k * theta)
    phases[_nyquist_index(ntau)] = np.cos(k[_nyquist_index(ntau)] * theta)
    coeffs = _ffttau(U.values) / ntau
    return SpatialField(U.grid, np.tensordot(phases, coeffs, axes=(0, 0)))


# ---------------------------------------------------------------------------
# norms


def hs_norm(f: SpatialField, s: float) -> float:
    """Sobolev H^s norm: (sum_comp sum_k (1+xi_k^2)^s |fhat_k|^2)^(1/2)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    xi = f.grid.wavenumbers
    w = (1.0 + xi * xi) ** s
    mh = x_modes(f)
    return float(np.sqrt(np.sum(w * np.abs(mh) ** 2)))


def hs_norm_slices(U: TwoScaleField, s: float) -> np.ndarray:
    """H^s_x norm of every tau slice, shape (ntau,)."""
    xi = U.grid.wavenumbers
    w = (1.0 + xi * xi) ** s
    mh = _fftx(U.values) / U.grid.nx
    return np.sqrt(np.sum(w * np.abs(mh) ** 2, axis=(1, 2)))


def max_hs_over_tau(U: TwoScaleField, s: float) -> float:
    return float(hs_norm_slices(U, s).max())


def l2_tau_norm(U: TwoScaleField) -> float:
    """Discrete L^2_tau(L^2_x) norm: mean over tau nodes of the L^2_x norm."""
    sq = np.sum(np.abs(_fftx(U.values) / U.grid.nx) ** 2, axis=(1, 2))
    return float(np.sqrt(sq.mean()))


def dealias_two_thirds(f):
    """Zero all x modes with |k| > nx/3 (optional stress-test filter)."""
    nx = f.grid.nx
    k = np.rint(np.fft.fftfreq(nx, d=1.0 / nx)).astype(int)
    mask = (np.abs(k) <= nx // 3).astype(float)
    if isinstance(f, SpatialField):
        return SpatialField(f.grid, _ifftx(_fftx(f.values) * mask))
    return TwoScaleField(f.taugrid, f.grid, _ifftx(_fftx(f.values) * mask))

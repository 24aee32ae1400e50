"""Experiment driver: (eps, dt) sweeps, error metrics, diagnostics, CSV.

A sweep fixes a model, a scheme and an initial-data order, then runs every
(eps, K) cell with dt = 2^-K * t_final against a cached reference solution
and records the relative Sobolev error at the final time.  Cells are
independent and can execute in a process pool; the CSV is assembled in a
fixed order so identical configurations produce byte-identical files apart
from the wall-clock column.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import spectral
from .initdata import prepare_initial_data
from .integrators import DivergedError, Trajectory, extract_solution, integrate
from .models import NkgModel, make_benchmark
from .reference import (
    DESK_POLICY,
    POLICIES,
    ReferenceSolution,
    build_reference,
    integrate_averaged,
    lift_averaged,
    run_splitting,
)
from .spectral import (
    SpatialField,
    TauGrid,
    TwoScaleField,
    evaluate_at_tau,
    hs_norm,
    max_hs_over_tau,
    resample_x,
    x_modes,
)

DEFAULT_EPS_GRID = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6)
DEFAULT_K_RANGE = tuple(range(6, 13))
FULL_K_RANGE = tuple(range(6, 19))

CSV_HEADER = "model,scheme,init_order,eps,dt,nx,ntau,error_h1,runtime_s"

_MODEL_DEFAULTS = {"nls": dict(nx=64, ntau=2048), "nkg": dict(nx=200, ntau=64)}


@dataclass
class SweepConfig:
    model: str
    scheme: str = "ua2"
    init_order: int = 2
    eps_list: tuple = DEFAULT_EPS_GRID
    k_list: tuple = DEFAULT_K_RANGE
    t_final: float = 0.4
    nx: int = 0          # 0: model default
    ntau: int = 0
    norm_s: float = 1.0
    out: str | None = None
    reference_policy: str = "desk"
    cache_dir: str | None = "ua_cache"

    def __post_init__(self):
        if self.model not in _MODEL_DEFAULTS:
            raise ValueError(f"unknown model '{self.model}'")
        if self.scheme not in ("ua1", "ua2", "strang", "averaged"):
            raise ValueError(f"unknown scheme '{self.scheme}'")
        if not self.eps_list or not all(0 < e <= 1.0 for e in self.eps_list):
            raise ValueError("eps_list entries must lie in (0, 1]")
        if not self.k_list:
            raise ValueError("k_list must be nonempty")
        defaults = _MODEL_DEFAULTS[self.model]
        self.nx = self.nx or defaults["nx"]
        self.ntau = self.ntau or defaults["ntau"]
        self.eps_list = tuple(float(e) for e in self.eps_list)
        self.k_list = tuple(int(k) for k in self.k_list)

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        with open(path) as fh:
            return cls(**json.load(fh))

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)


@dataclass
class ErrorRecord:
    model: str
    scheme: str
    init_order: int
    eps: float
    dt: float
    nx: int
    ntau: int
    error_hs: float      # nan flags a diverged cell
    runtime_s: float

    def csv_row(self) -> str:
        return (
            f"{self.model},{self.scheme},{self.init_order},{float(self.eps)!r},"
            f"{float(self.dt)!r},{self.nx},{self.ntau},{float(self.error_hs)!r},"
            f"{self.runtime_s:.3f}"
        )


def relative_error(u_num: SpatialField, u_ref: SpatialField, s: float) -> float:
    """||u_num - u_ref||_{H^s} / ||u_ref||_{H^s}.

    Fields on different resolutions of the same domain are spectrally
    resampled to the finer grid first.
    """
    if u_num.grid.nx != u_ref.grid.nx:
        nx = max(u_num.grid.nx, u_ref.grid.nx)
        u_num, u_ref = resample_x(u_num, nx), resample_x(u_ref, nx)
    denom = hs_norm(u_ref, s)
    if denom == 0.0:
        raise ValueError("reference field has zero norm")
    return hs_norm(u_num - u_ref, s) / denom


def _solution_field(model, state: SpatialField) -> SpatialField:
    """Project a physical state onto the scalar the error metric compares."""
    if isinstance(model, NkgModel):
        u, _ = model.reconstruct(state, 0.0, filtered=False)
        return u
    return state


def run_single(
    model_id: str,
    scheme: str,
    eps: float,
    n_steps: int,
    t_final: float,
    nx: int,
    ntau: int,
    init_order: int = 2,
) -> SpatialField:
    """One integration; returns the physical state at t_final.

    (v+, v-) for the Klein-Gordon model, the wavefunction for Schroedinger.
    """
    model, state0 = make_benchmark(model_id, eps, nx)
    if scheme in ("ua1", "ua2"):
        taugrid = TauGrid(model.period, ntau)
        U0 = prepare_initial_data(model, state0, init_order, taugrid)
        traj = integrate(model, U0, t_final, n_steps, scheme)
        return extract_solution(model, traj.final_state, t_final, traj.final_tau_star)
    if scheme == "strang":
        final, _ = run_splitting(model, state0, t_final, n_steps)
        return final
    if scheme == "averaged":
        w = integrate_averaged(model, state0, t_final, n_steps, ntau_quad=min(ntau, 512))
        return lift_averaged(model, w, t_final)
    raise ValueError(f"unknown scheme '{scheme}'")


def _run_cell(cfg_dict: dict, eps: float, k: int) -> ErrorRecord:
    cfg = SweepConfig(**cfg_dict)
    model_id, t_final = cfg.model, cfg.t_final
    n_steps = 2**k
    dt = t_final / n_steps
    ref = build_reference(
        model_id, eps, t_final, POLICIES[cfg.reference_policy], cfg.cache_dir
    )
    t0 = time.perf_counter()
    try:
        final = run_single(
            model_id, cfg.scheme, eps, n_steps, t_final, cfg.nx, cfg.ntau, cfg.init_order
        )
        model, _ = make_benchmark(model_id, eps, cfg.nx)
        err = relative_error(
            _solution_field(model, final), _solution_field(model, ref.values), cfg.norm_s
        )
    except DivergedError:
        err = float("nan")
    runtime = time.perf_counter() - t0
    return ErrorRecord(
        model_id, cfg.scheme, cfg.init_order, eps, dt, cfg.nx, cfg.ntau, err, runtime
    )


def _pool_init():
    spectral.FFT_WORKERS = 1


def write_csv(path, records) -> None:
    lines = [CSV_HEADER] + [r.csv_row() for r in records]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_sweep(config: SweepConfig, jobs: int = 1) -> list[ErrorRecord]:
    """Run all (eps, K) cells; returns records ordered by (eps, K).

    References are built (and cached) up front so worker processes only
    read them.  Diverged cells record a nan error and the sweep continues.
    """
    policy = POLICIES[config.reference_policy]
    for eps in config.eps_list:
        build_reference(config.model, eps, config.t_final, policy, config.cache_dir)

    cells = [(eps, k) for eps in config.eps_list for k in config.k_list]
    cfg_dict = asdict(config)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_pool_init) as pool:
            records = list(pool.map(_run_cell, *zip(*[(cfg_dict, e, k) for e, k in cells])))
    else:
        records = [_run_cell(cfg_dict, eps, k) for eps, k in cells]

    if config.out:
        write_csv(config.out, records)
    return records


# ---------------------------------------------------------------------------
# trajectory diagnostics

_CENTRAL_STENCILS = {
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def derivative_diagnostic(trajectory: Trajectory, k: int, s: float):
    """Centered k-th time differences of stored snapshots.

    Returns (times, norms): for each interior snapshot time the max over
    tau of the H^s_x norm of the difference quotient.  Snapshots must be
    uniformly spaced; k in 1..4.
    """
    if k not in _CENTRAL_STENCILS:
        raise ValueError("derivative order must be in 1..4")
    snaps = trajectory.snapshots
    offsets, coeffs = _CENTRAL_STENCILS[k]
    width = max(offsets)
    if len(snaps) < 2 * width + 1:
        raise ValueError(f"need at least {2 * width + 1} snapshots for order {k}")
    ts = np.array([s0 for s0, _, _ in snaps])
    deltas = np.diff(ts)
    if not np.allclose(deltas, deltas[0], rtol=1e-9):
        raise ValueError("snapshots must be uniformly spaced")
    h = deltas[0]
    times, norms = [], []
    for i in range(width, len(snaps) - width):
        acc = sum(c * snaps[i + o][2].values for o, c in zip(offsets, coeffs)) / h**k
        field = TwoScaleField(snaps[i][2].taugrid, snaps[i][2].grid, acc)
        times.append(ts[i])
        norms.append(max_hs_over_tau(field, s))
    return np.array(times), np.array(norms)


def mode_trace(trajectory: Trajectory, modes, tau_star: float = 0.0):
    """|x-Fourier coefficient| of U(t, tau*) for each requested mode index.

    Returns (times, magnitudes) with magnitudes shaped (n_snapshots,
    n_modes).
    """
    modes = list(modes)
    times, rows = [], []
    for t, _, state in trajectory.snapshots:
        coeffs = x_modes(evaluate_at_tau(state, tau_star))
        rows.append([abs(coeffs[0, m]) for m in modes])
        times.append(t)
    return np.array(times), np.array(rows)


def write_trace_file(path, times, magnitudes, modes) -> None:
    header = "# t " + " ".join(f"|u_{m}|" for m in modes)
    lines = [header]
    for t, row in zip(times, magnitudes):
        lines.append(" ".join([f"{t!r}"] + [f"{v!r}" for v in row]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def stroboscopic_check(model, trajectory: Trajectory, reference_samples, s: float = 1.0):
    """Residuals between the tau = 0 slice and the physical solution.

    At times t_k = P k eps the diagonal phase returns to zero, so the
    augmented state's tau = 0 slice must coincide with the solution (the
    filter is trivial there too).  reference_samples is a list of
    (t, SpatialField) pairs; snapshot/sample times are matched within half
    a snapshot spacing.  Returns a list of (t_k, residual) pairs, empty if
    no stroboscopic time is matched.
    """
    if not trajectory.snapshots:
        return []
    stride = model.period * model.epsilon
    t_max = trajectory.final_time
    snap_times = np.array([t for t, _, _ in trajectory.snapshots])
    tol = 0.5 * np.min(np.diff(snap_times)) if len(snap_times) > 1 else 1e-12
    results = []
    k = 0
    while k * stride <= t_max + tol:
        t_k = k * stride
        i = int(np.argmin(np.abs(snap_times - t_k)))
        matches = [(abs(t - t_k), t, f) for t, f in reference_samples]
        if matches and abs(snap_times[i] - t_k) <= tol:
            d, t_ref, f_ref = min(matches, key=lambda m: m[0])
            if d <= tol:
                slice0 = trajectory.snapshots[i][2].slice_at(0)
                results.append((t_k, relative_error(slice0, f_ref, s)))
        k += 1
    return results

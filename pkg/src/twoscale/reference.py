"""Baseline solvers and the persisted high-accuracy reference solutions.

Three independent solution routes live here:

* Strang splitting on the unfiltered systems (exact linear flight in
  Fourier space composed with an exact nonlinear substep), second order
  with an error constant that blows up like 1/eps — the non-uniform
  baseline the uniformly accurate schemes are measured against.

* A fourth-order triple-jump composition of the Strang step.

* The eps -> 0 averaged (limit) models, integrated with classical RK4.

build_reference picks the recipe per stiffness: splitting with dt
proportional to eps for moderate eps, the second-order uniform scheme on
fine grids below that.  Results are persisted in a little-endian binary
format with a checksum; cache writes are write-temp-then-rename.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .initdata import prepare_initial_data
from .integrators import SchemeKind, extract_solution, integrate
from .models import NkgModel, NlsModel, VectorFieldModel, cubic_gauge, make_benchmark
from .phase import oscillation_phases
from .spectral import (
    SpatialField,
    SpatialGrid,
    TauGrid,
    TwoScaleField,
    _fftx,
    _ifftx,
    tau_average,
)

YOSHIDA_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
YOSHIDA_W0 = 1.0 - 2.0 * YOSHIDA_W1

_kinetic_cache: dict = {}


def _nls_kinetic_multiplier(grid: SpatialGrid, dt: float, eps: float) -> np.ndarray:
    """exp(i (dt/2) Lap / eps) as an x-multiplier with reduced phases."""
    key = ("nls", grid.x0, grid.x1, grid.nx, dt, eps)
    mult = _kinetic_cache.get(key)
    if mult is None:
        base = (2.0 * np.pi / grid.length) ** 2
        ksq = np.rint(grid.wavenumbers**2 / base).astype(int)
        theta = float(oscillation_phases(dt / 2.0, eps, np.array([base]))[0])
        mult = np.exp(-1j * np.mod(theta * ksq, 2.0 * np.pi))
        _kinetic_cache[key] = mult
    return mult


def _nkg_kinetic_multiplier(grid: SpatialGrid, dt: float, eps: float) -> np.ndarray:
    """exp(i (dt/2) sqrt(1 - eps Lap) / eps): fast scalar carrier + slow shift."""
    key = ("nkg", grid.x0, grid.x1, grid.nx, dt, eps)
    mult = _kinetic_cache.get(key)
    if mult is None:
        xi2 = grid.wavenumbers**2
        shift = xi2 / (1.0 + np.sqrt(1.0 + eps * xi2))
        theta = float(oscillation_phases(dt / 2.0, eps, np.array([1.0]))[0])
        mult = np.exp(1j * (theta + (dt / 2.0) * shift))
        _kinetic_cache[key] = mult
    return mult


def strang_step_nls(u: SpatialField, dt: float, eps: float, gamma: np.ndarray) -> SpatialField:
    """Half free flight, exact cubic phase rotation, half free flight.

    The potential substep is exact because |u| is pointwise invariant under
    du/dt = -i gamma |u|^2 u.  Every substep is an isometry of L^2, so the
    discrete norm is conserved to rounding.  dt may be negative (the step
    is time-reversible), which the fourth-order composition relies on.
    """
    kin = _nls_kinetic_multiplier(u.grid, dt, eps)
    vals = _ifftx(_fftx(u.values) * kin)
    vals = vals * np.exp(-1j * gamma * np.abs(vals) ** 2 * dt)
    return SpatialField(u.grid, _ifftx(_fftx(vals) * kin))


def strang_step_nkg(v: SpatialField, dt: float, eps: float, lam: float) -> SpatialField:
    """Strang step for the first-order Klein-Gordon system.

    The middle substep integrates i dv/dt = -(1-eps Lap)^(-1/2) f(v)
    exactly: the combination w = (v+ + conj(v-))/2 is a constant of that
    flow, so both components advance linearly with the frozen forcing.
    """
    grid = v.grid
    kin = _nkg_kinetic_multiplier(grid, dt, eps)
    smooth = 1.0 / np.sqrt(1.0 + eps * grid.wavenumbers**2)
    vals = _ifftx(_fftx(v.values) * kin)
    w = 0.5 * (vals[0] + np.conj(vals[1]))
    g = cubic_gauge(w, lam)
    forcing = _ifftx(_fftx(np.stack([g, np.conj(g)])) * smooth)
    vals = vals + 1j * dt * forcing
    return SpatialField(grid, _ifftx(_fftx(vals) * kin))


def yoshida4_step(base_step, state, dt: float):
    """Triple-jump composition of a symmetric second-order one-step map."""
    state = base_step(state, YOSHIDA_W1 * dt)
    state = base_step(state, YOSHIDA_W0 * dt)
    return base_step(state, YOSHIDA_W1 * dt)


def splitting_step(model: VectorFieldModel, state: SpatialField, dt: float) -> SpatialField:
    """The model-appropriate Strang step on the unfiltered unknown."""
    if isinstance(model, NlsModel):
        return strang_step_nls(state, dt, model.epsilon, model.gamma)
    if isinstance(model, NkgModel):
        return strang_step_nkg(state, dt, model.epsilon, model.lam)
    raise TypeError(f"no splitting step for {type(model).__name__}")


def run_splitting(model, state, t_final, n_steps, fourth_order=False, sample_times=None):
    """Iterate the Strang (or Yoshida-composed) step; optionally record samples.

    sample_times must be a subset of the step grid; returns (final_state,
    samples) with samples a list of (t, state) pairs.
    """
    dt = t_final / n_steps
    base = lambda s, h: splitting_step(model, s, h)
    wanted = [] if sample_times is None else sorted(sample_times)
    samples = []
    for n in range(n_steps):
        state = yoshida4_step(base, state, dt) if fourth_order else base(state, dt)
        t = (n + 1) * dt
        while wanted and wanted[0] <= t + dt * 1e-9:
            samples.append((t, state.copy()))
            wanted.pop(0)
    return state, samples


# ---------------------------------------------------------------------------
# averaged (limit) models


def averaged_rhs(model: VectorFieldModel, w: SpatialField, ntau_quad: int = 64) -> SpatialField:
    """Right-hand side of the eps -> 0 averaged equation (rectangle rule).

    Schroedinger: the tau-average of the filtered vector field (which is
    already eps-free).  Klein-Gordon: -i(-Lap/2 w + fast-phase average of
    the nonlinearity); no eps enters either expression.
    """
    taugrid = TauGrid(model.period, ntau_quad)
    if isinstance(model, NlsModel):
        return tau_average(model.eval_F(0.0, TwoScaleField.from_constant(taugrid, w)))
    if isinstance(model, NkgModel):
        phases = np.exp(1j * taugrid.nodes)[:, None]
        vp = phases * w.values[0][None, :]
        vm = phases * w.values[1][None, :]
        wmid = 0.5 * (vp + np.conj(vm))
        g = cubic_gauge(wmid, model.lam)
        avg_p = (np.conj(phases) * g).mean(axis=0)
        avg_m = (np.conj(phases) * np.conj(g)).mean(axis=0)
        avg = np.stack([avg_p, avg_m])
        half_lap = _ifftx(_fftx(w.values) * (0.5 * model.grid.wavenumbers**2))
        return SpatialField(model.grid, -1j * (half_lap + avg))
    raise TypeError(f"no averaged model for {type(model).__name__}")


def integrate_averaged(
    model: VectorFieldModel,
    w0: SpatialField,
    t_final: float,
    n_steps: int = 4096,
    ntau_quad: int = 64,
) -> SpatialField:
    """Classical RK4 on the averaged equation; returns w(t_final).

    n_steps defaults high enough that the temporal error is negligible
    against the O(eps) model error this solution is used to expose.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    dt = t_final / n_steps
    w = w0.copy()
    rhs = lambda f: averaged_rhs(model, f, ntau_quad)
    for n in range(n_steps):
        k1 = rhs(w)
        k2 = rhs(w + (dt / 2) * k1)
        k3 = rhs(w + (dt / 2) * k2)
        k4 = rhs(w + dt * k3)
        w = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(w.values)):
            raise RuntimeError(f"averaged model diverged at step {n + 1}")
    return w


def lift_averaged(model: VectorFieldModel, w: SpatialField, t: float) -> SpatialField:
    """Re-attach the fast carrier: e^{i t/eps} w (Klein-Gordon) or the free
    Schroedinger flow of w, for comparison against references."""
    if isinstance(model, NkgModel):
        theta = float(oscillation_phases(t, model.epsilon, np.array([1.0]))[0])
        return SpatialField(model.grid, np.exp(1j * theta) * w.values)
    return model.unfilter(w, t)


# ---------------------------------------------------------------------------
# reference solutions and their persistence

MAGIC = b"UAREF1\x00\x00"


class CorruptReferenceError(RuntimeError):
    pass


@dataclass
class ReferenceSolution:
    model: str
    eps: float
    t_final: float
    nx: int
    solver: str
    dt_used: float
    values: SpatialField
    checksum: float


def _checksum(values: np.ndarray) -> float:
    interleaved = np.empty(values.shape + (2,), dtype=np.float64)
    interleaved[..., 0] = values.real
    interleaved[..., 1] = values.imag
    return float(np.sum(interleaved))


def write_reference_file(path, ref: ReferenceSolution) -> None:
    """Binary layout: magic, u32 ncomp, u32 nx, f64 x0 x1 eps t_final,
    ncomp*nx (re, im) f64 pairs, f64 checksum.  Little-endian throughout;
    the write is atomic (temp file + rename)."""
    f = ref.values
    payload = np.empty((f.ncomp, f.grid.nx, 2), dtype="<f8")
    payload[..., 0] = f.values.real
    payload[..., 1] = f.values.imag
    blob = MAGIC
    blob += struct.pack("<II", f.ncomp, f.grid.nx)
    blob += struct.pack("<dddd", f.grid.x0, f.grid.x1, ref.eps, ref.t_final)
    blob += payload.tobytes()
    blob += struct.pack("<d", _checksum(f.values))
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def read_reference_file(path) -> ReferenceSolution:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise CorruptReferenceError(f"{path}: bad magic")
    ncomp, nx = struct.unpack_from("<II", blob, 8)
    x0, x1, eps, t_final = struct.unpack_from("<dddd", blob, 16)
    need = 48 + ncomp * nx * 16 + 8
    if len(blob) != need:
        raise CorruptReferenceError(f"{path}: truncated ({len(blob)} != {need})")
    payload = np.frombuffer(blob, dtype="<f8", count=ncomp * nx * 2, offset=48)
    payload = payload.reshape(ncomp, nx, 2)
    values = payload[..., 0] + 1j * payload[..., 1]
    (stored,) = struct.unpack_from("<d", blob, need - 8)
    if stored != _checksum(values):
        raise CorruptReferenceError(f"{path}: checksum mismatch")
    field = SpatialField(SpatialGrid(x0, x1, nx), values)
    return ReferenceSolution(
        model="", eps=eps, t_final=t_final, nx=nx, solver="", dt_used=float("nan"),
        values=field, checksum=stored,
    )


@dataclass(frozen=True)
class ReferenceRecipe:
    solver: str          # "yoshida4" | "ua2"
    nx: int
    ntau: int            # 0 for splitting solvers
    n_steps: int
    init_order: int = 2

    def tag(self) -> str:
        return f"{self.solver}_nx{self.nx}_ntau{self.ntau}_n{self.n_steps}_o{self.init_order}"


@dataclass(frozen=True)
class ResolutionPolicy:
    """How to build references per model and stiffness.

    For eps >= splitting_eps_min the reference is the fourth-order
    composition of the Strang step with dt = eps * t_final / divisor;
    below that the second-order uniform scheme on fine grids.
    """

    name: str
    splitting_eps_min: float
    yoshida_divisor: dict
    ua2_grid: dict  # model -> (nx, ntau, n_steps)

    def recipe(self, model_id: str, eps: float, t_final: float) -> ReferenceRecipe:
        if eps >= self.splitting_eps_min:
            n = int(round(self.yoshida_divisor[model_id] / eps))
            nx = self.ua2_grid[model_id][0]
            return ReferenceRecipe("yoshida4", nx, 0, max(n, 1))
        nx, ntau, n_steps = self.ua2_grid[model_id]
        return ReferenceRecipe("ua2", nx, ntau, n_steps)


# paper-scale recipes (dt = 2 pi / 512000 for the uniform solver)
_PAPER_UA2_STEPS = lambda t_final: int(round(t_final / (2 * np.pi / 512000)))

PAPER_POLICY = ResolutionPolicy(
    name="paper",
    splitting_eps_min=1e-2,
    yoshida_divisor={"nkg": 2000, "nls": 32768},
    ua2_grid={"nkg": (256, 128, _PAPER_UA2_STEPS(0.4)), "nls": (128, 4096, _PAPER_UA2_STEPS(0.4))},
)

DESK_POLICY = ResolutionPolicy(
    name="desk",
    splitting_eps_min=1e-2,
    yoshida_divisor={"nkg": 512, "nls": 2048},
    ua2_grid={"nkg": (200, 64, 16384), "nls": (64, 2048, 16384)},
)

POLICIES = {"paper": PAPER_POLICY, "desk": DESK_POLICY}


def reference_cache_path(cache_dir, model_id, eps, t_final, recipe) -> str:
    fname = f"{model_id}_eps{eps:.6e}_tf{t_final:g}_{recipe.tag()}.uaref"
    return os.path.join(cache_dir, fname)


def compute_reference(model_id: str, eps: float, t_final: float, recipe: ReferenceRecipe) -> ReferenceSolution:
    model, state0 = make_benchmark(model_id, eps, recipe.nx)
    dt = t_final / recipe.n_steps
    if recipe.solver == "yoshida4":
        final, _ = run_splitting(model, state0, t_final, recipe.n_steps, fourth_order=True)
    elif recipe.solver == "ua2":
        taugrid = TauGrid(model.period, recipe.ntau)
        U0 = prepare_initial_data(model, state0, recipe.init_order, taugrid)
        traj = integrate(model, U0, t_final, recipe.n_steps, SchemeKind.UA2)
        final = extract_solution(model, traj.final_state, t_final, traj.final_tau_star)
    else:
        raise ValueError(f"unknown reference solver {recipe.solver}")
    return ReferenceSolution(
        model=model_id, eps=eps, t_final=t_final, nx=recipe.nx, solver=recipe.solver,
        dt_used=dt, values=final, checksum=_checksum(final.values),
    )


def build_reference(
    model_id: str,
    eps: float,
    t_final: float,
    policy: ResolutionPolicy = DESK_POLICY,
    cache_dir: str | None = None,
    force: bool = False,
) -> ReferenceSolution:
    """Fetch-or-compute a reference solution; corrupt cache entries rebuild."""
    recipe = policy.recipe(model_id, eps, t_final)
    path = None
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        path = reference_cache_path(cache_dir, model_id, eps, t_final, recipe)
        if not force and os.path.exists(path):
            try:
                ref = read_reference_file(path)
            except CorruptReferenceError:
                pass
            else:
                ref.model = model_id
                ref.solver = recipe.solver
                ref.dt_used = t_final / recipe.n_steps
                return ref
    ref = compute_reference(model_id, eps, t_final, recipe)
    if path is not None:
        write_reference_file(path, ref)
    return ref

"""Uniformly accurate time steppers on the augmented unknown.

Both schemes treat the stiff 1/eps tau-transport implicitly through the
periodic low-pass solve and the nonlinearity explicitly, so the step size
never needs to resolve 1/eps:

* ua1 (first order):   U_{n+1} = lowpass_mu (U_n + dt F(t_n, U_n)),
  with cutoff mu = eps/dt.

* ua2 (second order):  a midpoint predictor at cutoff 2 mu followed by a
  Cayley (trapezoidal) transport update,
      U_half = lowpass_{2mu} (U_n + dt/2 F(t_n, U_n)),
      U_{n+1} = lowpass_{2mu} ((I - d_tau/(2mu)) U_n + dt F(t_n+dt/2, U_half)).

For F = 0 the ua1 multipliers have modulus <= 1 and the ua2 multipliers
modulus exactly 1, so both maps are nonexpansive in L^2_tau.

The physical solution lives on the diagonal tau = t/eps; the running
diagonal phase is tracked with compensated accumulation (never recomputed
as t/eps, which loses all precision at eps ~ 1e-6).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .models import VectorFieldModel
from .phase import PhaseAccumulator, exact_mod
from .spectral import (
    SpatialField,
    TwoScaleField,
    _fftx,
    _ffttau,
    _ifftx,
    _iffttau,
    _lowpass_multiplier,
    evaluate_at_tau,
    tau_lowpass,
    tau_lowpass_complement,
)


class SchemeKind(str, Enum):
    UA1 = "ua1"
    UA2 = "ua2"


class DivergedError(RuntimeError):
    """Raised when a state stops being finite; carries the failing step."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state detected at step {step}")
        self.step = step


@dataclass
class Trajectory:
    """Integration record: final state plus optional snapshots.

    Snapshots are (t, tau_star, state) triples at a uniform step stride;
    tau_stars[i] is the compensated diagonal phase at times[i].
    """

    times: np.ndarray
    tau_stars: np.ndarray
    final_state: TwoScaleField
    final_tau_star: float
    snapshots: list = field(default_factory=list)

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


def step_ua1(model: VectorFieldModel, U: TwoScaleField, t: float, dt: float) -> TwoScaleField:
    """One first-order step; output is periodic in tau by construction."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    mu = model.epsilon / dt
    return tau_lowpass(U + dt * model.eval_F(t, U), mu)


def step_ua2(model: VectorFieldModel, U: TwoScaleField, t: float, dt: float) -> TwoScaleField:
    """One second-order step (predictor + Cayley transport update)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    nu = 2.0 * model.epsilon / dt
    U_half = tau_lowpass(U + (dt / 2.0) * model.eval_F(t, U), nu)
    stage2 = tau_lowpass_complement(U, nu) + dt * model.eval_F(t + dt / 2.0, U_half)
    return tau_lowpass(stage2, nu)


def _complement_multiplier(taugrid, nu):
    k = taugrid.mode_numbers.astype(float)
    mult = 1.0 - 1j * k * taugrid.omega / nu
    mult[taugrid.ntau // 2] = 1.0
    return mult[:, None, None]


def integrate(
    model: VectorFieldModel,
    U0: TwoScaleField,
    t_final: float,
    n_steps: int,
    scheme: SchemeKind | str = SchemeKind.UA2,
    observers=(),
    snapshot_every: int | None = None,
) -> Trajectory:
    """Run n_steps uniform steps to t_final.

    Observers are callables (step_index, t, tau_star, state) invoked after
    every step with a read-only view of the state; they must not mutate it.
    The loop keeps the tau spectrum of the state alongside the collocation
    values so each ua2 step costs two vector-field evaluations and four
    tau transforms.
    """
    scheme = SchemeKind(scheme)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    dt = t_final / n_steps
    eps = model.epsilon
    taugrid, grid = U0.taugrid, U0.grid

    tracker = PhaseAccumulator(dt, eps, model.period)
    times = np.empty(n_steps + 1)
    tau_stars = np.empty(n_steps + 1)
    times[0], tau_stars[0] = 0.0, 0.0

    snapshots = []
    want_state = bool(observers) or snapshot_every is not None

    def snap(i, t, ts, state):
        if snapshot_every is not None and i % snapshot_every == 0:
            snapshots.append((t, ts, state.copy()))

    snap(0, 0.0, 0.0, U0)

    if scheme is SchemeKind.UA1:
        qinv = _lowpass_multiplier(taugrid, eps / dt)
        comp = None
    else:
        nu = 2.0 * eps / dt
        qinv = _lowpass_multiplier(taugrid, nu)
        comp = _complement_multiplier(taugrid, nu)

    # hybrid state: x-Fourier coefficients, tau collocated (Ux), plus the
    # tau spectrum of the same (Uhat); physical values are materialized only
    # for observers/snapshots and at the end
    Ux = _fftx(U0.values)
    Uhat = _ffttau(Ux)
    for n in range(n_steps):
        t = n * dt
        if scheme is SchemeKind.UA1:
            Fhat = _ffttau(model.eval_F_xmodes(t, Ux, taugrid))
            Fhat *= dt
            Fhat += Uhat
            Fhat *= qinv
            Uhat = Fhat
        else:
            F1 = _ffttau(model.eval_F_xmodes(t, Ux, taugrid))
            F1 *= dt / 2.0
            F1 += Uhat
            F1 *= qinv
            Uh_x = _iffttau(F1)
            F2 = _ffttau(model.eval_F_xmodes(t + dt / 2.0, Uh_x, taugrid))
            F2 *= dt
            Uhat *= comp
            Uhat += F2
            Uhat *= qinv
        Ux = _iffttau(Uhat)
        if not np.all(np.isfinite(Ux)):
            raise DivergedError(n + 1)
        ts = tracker.step()
        t_next = (n + 1) * dt
        times[n + 1], tau_stars[n + 1] = t_next, ts
        if want_state:
            U = TwoScaleField(taugrid, grid, _ifftx(Ux))
            for obs in observers:
                obs(n + 1, t_next, ts, U)
            snap(n + 1, t_next, ts, U)

    final = TwoScaleField(taugrid, grid, _ifftx(Ux))
    return Trajectory(times, tau_stars, final, float(tau_stars[-1]), snapshots)


def extract_solution(
    model: VectorFieldModel, U: TwoScaleField, t: float, tau_star: float | None = None
) -> SpatialField:
    """Physical solution at time t from the augmented state.

    Interpolates the state at the diagonal phase tau* = (t/eps) mod P and
    removes the model filter.  Pass the trajectory's tracked tau_star when
    available; otherwise it is recomputed by exact rational reduction.
    For stroboscopic times t = P k eps the phase is 0 and the extraction
    reads the tau = 0 slice exactly.
    """
    if tau_star is None:
        tau_star = exact_mod(t, model.epsilon, model.period)
    slice_ = evaluate_at_tau(U, tau_star)
    return model.unfilter(slice_, t, tau_star=tau_star)

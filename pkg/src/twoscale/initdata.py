"""Preparation of the augmented initial state.

The augmented problem determines its initial profile over the whole fast
period only up to the single constraint U0(0) = u0.  Choosing the free
part badly leaves time derivatives of order 1/eps^k in the solution and
destroys uniform convergence orders; the constructions here remove the
fast transients order by order:

    order 0:  U0(tau) = u0                                  (uncorrected)
    order 1:  u0 + eps [c1(tau) - c1(0)]
    order 2:  ... + eps^2 [c2(tau) - c2(0)]
              - eps^2 [c1'(tau)[c1(0)] - c1'(0)[c1(0)]]
    order 3:  experimental fixed-point iteration (below)

with the correctors

    c1(tau, u) = A F(0, tau, u),
    c2(tau, u) = A dF[A F] - A^2 (dF[avg F] + dt F),

where A is the zero-mean tau-antiderivative and avg the tau average. Every
order subtracts its own tau = 0 value, so U0(0) = u0 holds to the last bit.

The order-3 construction iterates the defining fixed point
h = eps A F(0, tau, u0 + h) - eps A (d/dt h) three times, supplying the
u- and t-derivatives of the previous iterate by central differences. It
is exposed for experiments (smoother mode traces, bounded fourth
derivatives) but no guarantee beyond O(eps^3) agreement is made.
"""

from __future__ import annotations

from .models import VectorFieldModel
from .spectral import (
    SpatialField,
    TauGrid,
    TwoScaleField,
    tau_antiderivative,
    tau_average,
)

PREPARATION_ORDERS = (0, 1, 2, 3)


def _constant(taugrid: TauGrid, f: SpatialField) -> TwoScaleField:
    return TwoScaleField.from_constant(taugrid, f)


def first_corrector(model: VectorFieldModel, u0: SpatialField, taugrid: TauGrid) -> TwoScaleField:
    """Zero-mean antiderivative of the frozen vector field: A F(0, ., u0)."""
    F = model.eval_F(0.0, _constant(taugrid, u0))
    return tau_antiderivative(F)


def corrector_derivative(
    model: VectorFieldModel, u0: SpatialField, taugrid: TauGrid, w: SpatialField
) -> TwoScaleField:
    """Directional derivative of the first corrector: A dF(0, ., u0)[w]."""
    U = _constant(taugrid, u0)
    return tau_antiderivative(model.dir_dF(0.0, U, _constant(taugrid, w)))


def second_corrector(model: VectorFieldModel, u0: SpatialField, taugrid: TauGrid) -> TwoScaleField:
    """A dF[A F] - A^2 (dF[avg F] + dt F), all frozen at t = 0, base u0."""
    U = _constant(taugrid, u0)
    F = model.eval_F(0.0, U)
    AF = tau_antiderivative(F)
    term1 = tau_antiderivative(model.dir_dF(0.0, U, AF))
    inner = model.dir_dF(0.0, U, _constant(taugrid, tau_average(F))) + model.dt_F(0.0, U)
    term2 = tau_antiderivative(tau_antiderivative(inner))
    return term1 - term2


def _pinned(corr: TwoScaleField) -> TwoScaleField:
    """Subtract the tau = 0 slice so the result vanishes there exactly."""
    return TwoScaleField(corr.taugrid, corr.grid, corr.values - corr.values[0])


def _iterated_corrector(model, u0, taugrid, iterations, du_step=1e-5, dt_step=1e-4):
    """Fixed-point iterates of h = eps A F(0,.,u0+h) - eps A (dh/dt).

    The total time derivative of the previous iterate is assembled from a
    central difference in t (skipped for autonomous fields) plus a central
    difference in u along the averaged drift.
    """
    eps = model.epsilon
    autonomous = _is_autonomous(model, u0, taugrid)

    def iterate(t, u, m):
        if m == 0:
            return TwoScaleField.zeros(taugrid, u.grid, model.ncomp)
        h_prev = iterate(t, u, m - 1)
        base = TwoScaleField(taugrid, u.grid, _constant(taugrid, u).values + h_prev.values)
        F = model.eval_F(t, base)
        h = eps * tau_antiderivative(F)
        if m >= 2:
            drift = tau_average(F)
            hp = iterate(t, u + du_step * drift, m - 1)
            hm = iterate(t, u - du_step * drift, m - 1)
            dot = (hp - hm) * (1.0 / (2.0 * du_step))
            if not autonomous:
                hp_t = iterate(t + dt_step, u, m - 1)
                hm_t = iterate(t - dt_step, u, m - 1)
                dot = dot + (hp_t - hm_t) * (1.0 / (2.0 * dt_step))
            h = h - eps * tau_antiderivative(dot)
        return h

    return iterate(0.0, u0, iterations)


def _is_autonomous(model, u0, taugrid):
    probe = model.dt_F(0.123, _constant(taugrid, u0))
    return float(abs(probe.values).max()) == 0.0


def _iterated_initial_data(model, u0, taugrid, iterations=3):
    """Order-3 data: expand around the slow average, then pin at tau = 0.

    The corrector must be based at the tau-average of the prepared state
    (solved from the compatibility ubar + H(0; ubar) = u0 by fixed point),
    not at u0 itself; basing at u0 misses the quadratic cross term and
    degrades the preparation by one full order.
    """
    ubar = u0
    for _ in range(iterations):
        h0 = _iterated_corrector(model, ubar, taugrid, iterations).slice_at(0)
        ubar = u0 - h0
    corr = _iterated_corrector(model, ubar, taugrid, iterations)
    vals = ubar.values[None] + corr.values
    defect = u0.values - vals[0]          # O(eps^4) residual, tau-independent
    return TwoScaleField(taugrid, u0.grid, vals + defect[None])


def prepare_initial_data(
    model: VectorFieldModel, u0: SpatialField, order: int, taugrid: TauGrid
) -> TwoScaleField:
    """Augmented initial state at the requested correction order.

    Always satisfies evaluate_at_tau(U0, 0) = u0 to machine precision; the
    corrections are applied for every eps (the formulas are regular in eps,
    including eps >= 1).
    """
    if order not in PREPARATION_ORDERS:
        raise ValueError(f"unsupported preparation order {order}")
    eps = model.epsilon
    U = _constant(taugrid, u0)
    if order == 0:
        return U
    if order >= 3:
        return _iterated_initial_data(model, u0, taugrid, iterations=3)
    c1_full = first_corrector(model, u0, taugrid)
    U = U + eps * _pinned(c1_full)
    if order == 2:
        c2 = _pinned(second_corrector(model, u0, taugrid))
        cross = _pinned(corrector_derivative(model, u0, taugrid, c1_full.slice_at(0)))
        U = U + eps * eps * (c2 - cross)
    return U

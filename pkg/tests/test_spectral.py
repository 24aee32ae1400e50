"""Operator algebra of the spectral core.

Derived expectations come from closed-form mode algebra or from the
independent oracles in oracles.py (adaptive quadrature, dense DFT).
"""

import numpy as np
import pytest

from oracles import TrigPoly, antiderivative_oracle, dense_dft_multiplier, lowpass_integral_oracle
from twoscale.spectral import (
    SpatialField,
    SpatialGrid,
    TauGrid,
    TwoScaleField,
    apply_x_multiplier,
    evaluate_at_tau,
    hs_norm,
    hs_norm_slices,
    l2_tau_norm,
    resample_x,
    tau_antiderivative,
    tau_average,
    tau_derivative,
    tau_lowpass,
    tau_lowpass_complement,
    x_modes,
)

GRID = SpatialGrid(0.0, 2 * np.pi, 16)
TAU = TauGrid(2 * np.pi, 16)


def random_field(rng, grid=GRID, ncomp=1):
    shape = (ncomp, grid.nx)
    return SpatialField(grid, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_two_scale(rng, taugrid=TAU, grid=GRID, ncomp=1, max_mode=None):
    """Random field built from explicit tau modes; Nyquist mode always zero."""
    if max_mode is None:
        max_mode = taugrid.ntau // 2 - 1
    vals = np.zeros((taugrid.ntau, ncomp, grid.nx), dtype=np.complex128)
    taus = taugrid.nodes
    for k in range(-max_mode, max_mode + 1):
        amp = rng.standard_normal((ncomp, grid.nx)) + 1j * rng.standard_normal((ncomp, grid.nx))
        vals += np.exp(1j * k * taugrid.omega * taus)[:, None, None] * amp
    return TwoScaleField(taugrid, grid, vals)


class TestGridValidation:
    def test_rejects_odd_or_tiny_nx(self):
        with pytest.raises(ValueError):
            SpatialGrid(0.0, 1.0, 15)
        with pytest.raises(ValueError):
            SpatialGrid(0.0, 1.0, 2)
        with pytest.raises(ValueError):
            SpatialGrid(1.0, 0.0, 16)

    def test_rejects_bad_taugrid(self):
        with pytest.raises(ValueError):
            TauGrid(0.0, 8)
        with pytest.raises(ValueError):
            TauGrid(1.0, 7)

    def test_wavenumbers_symmetric_range(self):
        g = SpatialGrid(0.0, 2 * np.pi, 8)
        assert np.allclose(np.sort(g.wavenumbers), [-4, -3, -2, -1, 0, 1, 2, 3])


class TestXMultiplier:
    def test_identity_symbol(self):
        rng = np.random.default_rng(0)
        f = random_field(rng, ncomp=2)
        out = apply_x_multiplier(f, lambda xi: np.ones_like(xi))
        assert np.max(np.abs(out.values - f.values)) < 1e-13

    def test_free_schrodinger_semigroup_single_mode(self):
        # e^{i theta Laplacian} e^{ix} = e^{-i theta} e^{ix}
        theta = 0.37
        x = GRID.nodes
        f = SpatialField(GRID, np.exp(1j * x))
        out = apply_x_multiplier(f, lambda xi: np.exp(1j * theta * (-(xi**2))))
        want = np.exp(-1j * theta) * np.exp(1j * x)
        assert np.max(np.abs(out.values[0] - want)) < 1e-13

    def test_free_schrodinger_matches_dense_dft(self):
        rng = np.random.default_rng(1)
        f = random_field(rng)
        sym = lambda xi: np.exp(1j * 0.25 * (-(xi**2)))
        out = apply_x_multiplier(f, sym)
        want = dense_dft_multiplier(f.values, GRID.x0, GRID.x1, lambda s: np.exp(-0.25j * s * s))
        assert np.max(np.abs(out.values - want)) < 1e-12

    def test_sqrt_shift_symbol_kills_constants(self):
        eps = 0.3
        f = SpatialField(GRID, np.full(GRID.nx, 2.0 - 1.0j))
        out = apply_x_multiplier(f, lambda xi: (np.sqrt(1 + eps * xi**2) - 1) / eps)
        assert np.max(np.abs(out.values)) < 1e-14

    def test_inverse_symbol_roundtrip(self):
        rng = np.random.default_rng(2)
        f = random_field(rng)
        sym = lambda xi: 1.0 / np.sqrt(1 + 0.1 * xi**2)
        inv = lambda xi: np.sqrt(1 + 0.1 * xi**2)
        out = apply_x_multiplier(apply_x_multiplier(f, sym), inv)
        assert np.max(np.abs(out.values - f.values)) < 1e-12

    def test_nonfinite_symbol_rejected(self):
        f = SpatialField(GRID, np.ones(GRID.nx))
        with pytest.raises(ValueError):
            apply_x_multiplier(f, lambda xi: np.where(xi == 0, np.inf, 1.0))


class TestTauAverage:
    def test_fixes_constants(self):
        rng = np.random.default_rng(3)
        f = random_field(rng)
        U = TwoScaleField.from_constant(TAU, f)
        out = tau_average(U)
        assert np.max(np.abs(out.values - f.values)) < 1e-14

    def test_kills_zero_mean_mode(self):
        g = np.sin(GRID.nodes)
        vals = np.sin(2 * np.pi * TAU.nodes / TAU.period)[:, None, None] * g[None, None, :]
        out = tau_average(TwoScaleField(TAU, GRID, vals))
        assert np.max(np.abs(out.values)) < 1e-14

    def test_linearity(self):
        g = np.cos(GRID.nodes)
        vals = (3.0 + np.exp(1j * TAU.omega * TAU.nodes))[:, None, None] * g[None, None, :]
        out = tau_average(TwoScaleField(TAU, GRID, vals))
        assert np.max(np.abs(out.values - 3.0 * g)) < 1e-13


class TestTauDerivative:
    def test_constant_maps_to_zero(self):
        rng = np.random.default_rng(4)
        U = TwoScaleField.from_constant(TAU, random_field(rng))
        assert np.max(np.abs(tau_derivative(U).values)) < 1e-13

    def test_single_mode(self):
        g = np.exp(1j * GRID.nodes)
        vals = np.exp(1j * TAU.omega * TAU.nodes)[:, None, None] * g[None, None, :]
        out = tau_derivative(TwoScaleField(TAU, GRID, vals))
        want = 1j * TAU.omega * vals
        assert np.max(np.abs(out.values - want)) < 1e-13

    def test_skew_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            U = random_two_scale(rng)
            dU = tau_derivative(U)
            inner = np.mean(np.sum(dU.values * np.conj(U.values), axis=(1, 2)))
            assert abs(inner.real) < 1e-11 * np.max(np.abs(U.values)) ** 2


class TestTauAntiderivative:
    def test_single_mode_divides_by_ik_omega(self):
        k = 3
        g = np.cos(GRID.nodes)
        vals = np.exp(1j * k * TAU.omega * TAU.nodes)[:, None, None] * g[None, None, :]
        out = tau_antiderivative(TwoScaleField(TAU, GRID, vals))
        want = vals / (1j * k * TAU.omega)
        assert np.max(np.abs(out.values - want)) < 1e-13

    def test_annihilates_constants(self):
        rng = np.random.default_rng(6)
        U = TwoScaleField.from_constant(TAU, random_field(rng))
        assert np.max(np.abs(tau_antiderivative(U).values)) < 1e-13

    def test_derivative_of_antiderivative_is_mean_free_part(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            U = random_two_scale(rng)
            lhs = tau_derivative(tau_antiderivative(U))
            mean = tau_average(U)
            want = U.values - mean.values[None]
            assert np.max(np.abs(lhs.values - want)) < 1e-12 * max(1.0, np.max(np.abs(U.values)))

    def test_average_of_antiderivative_is_zero(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            U = random_two_scale(rng)
            out = tau_average(tau_antiderivative(U))
            assert np.max(np.abs(out.values)) < 1e-12 * max(1.0, np.max(np.abs(U.values)))

    @pytest.mark.parametrize("period", [2 * np.pi, 0.9])
    def test_matches_quadrature_oracle(self, period):
        rng = np.random.default_rng(9)
        taug = TauGrid(period, 16)
        poly = TrigPoly.random(rng, max_mode=5, period=period)
        vals = np.broadcast_to(poly.sample(16)[:, None, None], (16, 1, GRID.nx)).copy()
        out = tau_antiderivative(TwoScaleField(taug, GRID, vals))
        want = antiderivative_oracle(poly, taug.nodes)
        assert np.max(np.abs(out.values[:, 0, 0] - want)) < 1e-9


class TestTauLowpass:
    def test_fixes_constants(self):
        rng = np.random.default_rng(10)
        U = TwoScaleField.from_constant(TAU, random_field(rng))
        for mu in (1e-3, 1.0, 1e3):
            out = tau_lowpass(U, mu)
            assert np.max(np.abs(out.values - U.values)) < 1e-13

    def test_single_mode_analytic_factor(self):
        mu = 0.7
        vals = np.exp(1j * TAU.omega * TAU.nodes)[:, None, None] * np.ones((1, GRID.nx))
        out = tau_lowpass(TwoScaleField(TAU, GRID, vals), mu)
        want = vals * (mu / (mu + 1j * TAU.omega))
        assert np.max(np.abs(out.values - want)) < 1e-13

    @pytest.mark.parametrize("mu", [1e-3, 1.0, 1e3])
    def test_matches_integral_formula(self, mu):
        # spectral formula vs the exponentially weighted sliding average
        rng = np.random.default_rng(11)
        poly = TrigPoly.random(rng, max_mode=5, period=TAU.period)
        vals = np.broadcast_to(poly.sample(TAU.ntau)[:, None, None], (TAU.ntau, 1, GRID.nx)).copy()
        out = tau_lowpass(TwoScaleField(TAU, GRID, vals), mu)
        for j in (0, 3, 11):
            want = lowpass_integral_oracle(poly, mu, TAU.nodes[j])
            assert abs(out.values[j, 0, 0] - want) < 1e-10

    def test_nonexpansive_in_sup_sobolev_norm(self):
        # sup over tau of the trig interpolant; the input sup is sampled much
        # finer than the output sup so the discrete comparison cannot flip by
        # sampling bias alone
        rng = np.random.default_rng(12)
        coarse = np.linspace(0.0, TAU.period, 65)[:-1]
        fine = np.linspace(0.0, TAU.period, 1025)[:-1]
        for mu in (1e-3, 1.0, 1e3):
            U = random_two_scale(rng)
            out = tau_lowpass(U, mu)
            sup_in = max(hs_norm(evaluate_at_tau(U, t), 1.0) for t in fine)
            sup_out = max(hs_norm(evaluate_at_tau(out, t), 1.0) for t in coarse)
            assert sup_out <= sup_in * (1 + 1e-9)

    def test_rejects_nonpositive_mu(self):
        U = TwoScaleField.zeros(TAU, GRID)
        with pytest.raises(ValueError):
            tau_lowpass(U, 0.0)
        with pytest.raises(ValueError):
            tau_lowpass(U, -1.0)


class TestLowpassComplement:
    def test_fixes_constants(self):
        rng = np.random.default_rng(13)
        U = TwoScaleField.from_constant(TAU, random_field(rng))
        out = tau_lowpass_complement(U, 2.0)
        assert np.max(np.abs(out.values - U.values)) < 1e-13

    def test_single_mode_factor(self):
        nu = 2 * 0.8
        vals = np.exp(1j * TAU.omega * TAU.nodes)[:, None, None] * np.ones((1, GRID.nx))
        out = tau_lowpass_complement(TwoScaleField(TAU, GRID, vals), nu)
        want = vals * (1 - 1j * TAU.omega / nu)
        assert np.max(np.abs(out.values - want)) < 1e-13

    def test_cayley_composition_is_isometry(self):
        # || (2 lowpass(2mu) - I) g ||_2 = ||g||_2
        rng = np.random.default_rng(14)
        for mu in (0.01, 1.0, 50.0):
            U = random_two_scale(rng)
            out = 2.0 * tau_lowpass(U, 2 * mu) - U
            assert abs(l2_tau_norm(out) - l2_tau_norm(U)) < 1e-12 * l2_tau_norm(U)


class TestLowpassEstimates:
    """Contractivity family ||((1+b) lowpass - b I) g|| <= ||g||."""

    @pytest.mark.parametrize("beta", [-1.0, -0.5, 0.0, 0.5, 1.0])
    def test_family_is_nonexpansive(self, beta):
        rng = np.random.default_rng(15)
        mu = 3.0
        for _ in range(20):
            U = random_two_scale(rng)
            out = (1 + beta) * tau_lowpass(U, mu) - beta * U
            n_out, n_in = l2_tau_norm(out), l2_tau_norm(U)
            assert n_out <= n_in * (1 + 1e-12)
            if abs(beta) == 1.0:
                assert abs(n_out - n_in) < 1e-12 * n_in

    def test_derivative_of_lowpass_bound(self):
        rng = np.random.default_rng(16)
        for mu in (0.1, 1.0, 10.0):
            U = random_two_scale(rng)
            out = tau_derivative(tau_lowpass(U, mu))
            assert l2_tau_norm(out) <= 2 * mu * l2_tau_norm(U) * (1 + 1e-12)


class TestEvaluateAtTau:
    def test_reproduces_grid_nodes(self):
        rng = np.random.default_rng(17)
        U = random_two_scale(rng, ncomp=2)
        for j in (0, 1, 7, 15):
            out = evaluate_at_tau(U, TAU.nodes[j])
            assert np.max(np.abs(out.values - U.values[j])) < 1e-12

    def test_single_mode_at_third_period(self):
        g = np.exp(1j * GRID.nodes)
        vals = np.exp(1j * TAU.omega * TAU.nodes)[:, None, None] * g[None, None, :]
        out = evaluate_at_tau(TwoScaleField(TAU, GRID, vals), TAU.period / 3)
        want = np.exp(2j * np.pi / 3) * g
        assert np.max(np.abs(out.values[0] - want)) < 1e-13

    def test_constant_field_any_taustar(self):
        rng = np.random.default_rng(18)
        f = random_field(rng)
        U = TwoScaleField.from_constant(TAU, f)
        out = evaluate_at_tau(U, 1.2345)
        assert np.max(np.abs(out.values - f.values)) < 1e-13


class TestHsNorm:
    def test_constant_function(self):
        f = SpatialField(GRID, np.ones(GRID.nx))
        assert abs(hs_norm(f, 1.0) - 1.0) < 1e-14

    def test_single_mode_weight(self):
        f = SpatialField(GRID, np.exp(1j * GRID.nodes))
        assert abs(hs_norm(f, 1.0) - np.sqrt(2.0)) < 1e-13

    def test_zero_field(self):
        assert hs_norm(SpatialField.zeros(GRID), 2.0) == 0.0

    def test_parseval_at_s_zero(self):
        rng = np.random.default_rng(19)
        f = random_field(rng, ncomp=2)
        grid_sum = np.sqrt(np.sum(np.abs(f.values) ** 2) / GRID.nx)
        assert abs(hs_norm(f, 0.0) - grid_sum) < 1e-12

    def test_rejects_negative_s(self):
        with pytest.raises(ValueError):
            hs_norm(SpatialField.zeros(GRID), -1.0)


class TestResample:
    def test_upsample_preserves_modes(self):
        f = SpatialField(GRID, np.exp(2j * GRID.nodes) + 0.5)
        up = resample_x(f, 32)
        x = up.grid.nodes
        assert np.max(np.abs(up.values[0] - (np.exp(2j * x) + 0.5))) < 1e-12

    def test_down_then_up_identity_for_resolved_field(self):
        f = SpatialField(GRID, np.exp(1j * GRID.nodes) + np.exp(-3j * GRID.nodes))
        back = resample_x(resample_x(f, 8), 16)
        assert np.max(np.abs(back.values - f.values)) < 1e-12

    def test_mode_indexing_after_resample(self):
        f = SpatialField(GRID, np.exp(5j * GRID.nodes))
        up = resample_x(f, 64)
        coeffs = x_modes(up)
        assert abs(coeffs[0, 5] - 1.0) < 1e-12

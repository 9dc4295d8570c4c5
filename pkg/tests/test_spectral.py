"""Spectral core: transforms, multiplier operators, dealiasing, norms."""

import math

import numpy as np
import pytest

from bq2d.spectral import (
    FlowParams,
    GridSpec,
    PhysicalField,
    SpectralField,
    biot_savart,
    constant_field,
    coordinates,
    dealias,
    field_from_function,
    fractional_laplacian,
    grad,
    l2_norm_spectral,
    lp_norm,
    perp_grad,
    random_band_field,
    random_band_spectral,
    riesz_alpha,
    to_physical,
    to_spectral,
    v_from_theta,
    wavevectors,
)

G16 = GridSpec(16)
G32 = GridSpec(32)


def sin_field(grid, fn):
    return field_from_function(grid, fn)


class TestGridAndFields:
    def test_grid_invariants(self):
        with pytest.raises(ValueError):
            GridSpec(6)
        with pytest.raises(ValueError):
            GridSpec(9)
        with pytest.raises(ValueError):
            GridSpec(16, side_length=-1.0)
        with pytest.raises(ValueError):
            GridSpec(16, dealias_fraction=0.0)

    def test_nonfinite_rejected(self):
        bad = np.zeros((16, 16))
        bad[3, 4] = np.nan
        with pytest.raises(ValueError):
            PhysicalField(G16, bad)

    def test_flow_params_critical(self):
        FlowParams(1.0, 1.0, 0.85, 1.0 - 0.85, critical=True)
        with pytest.raises(ValueError):
            FlowParams(1.0, 1.0, 0.9, 0.2, critical=True)


class TestTransforms:
    def test_constant_field_mean_mode_only(self):
        fh = to_spectral(constant_field(G16, 3.5))
        assert abs(fh.coeffs[0, 0] - 3.5) < 1e-14
        rest = fh.coeffs.copy()
        rest[0, 0] = 0.0
        assert np.abs(rest).max() < 1e-14

    def test_single_mode_two_coefficients(self):
        fh = to_spectral(sin_field(G16, lambda x1, x2: np.sin(x1)))
        nz = np.argwhere(np.abs(fh.coeffs) > 1e-12)
        assert sorted(map(tuple, nz)) == [(1, 0), (15, 0)]

    def test_round_trip_random(self):
        rng = np.random.default_rng(0)
        f = PhysicalField(G32, rng.standard_normal((32, 32)))
        back = to_physical(to_spectral(f))
        assert np.abs(back.values - f.values).max() <= 1e-13 * np.abs(f.values).max()

    def test_parseval(self):
        rng = np.random.default_rng(1)
        f = random_band_field(G32, 1, 10, rng)
        a = lp_norm(f, 2)
        b = l2_norm_spectral(to_spectral(f))
        assert abs(a - b) <= 1e-12 * a


class TestFractionalLaplacian:
    def test_eigenfunction(self):
        alpha = 0.7
        fh = to_spectral(sin_field(G32, lambda x1, x2: np.cos(2 * x2)))
        out = to_physical(fractional_laplacian(fh, alpha))
        expect = 2.0**alpha * np.cos(2 * coordinates(G32)[1])
        assert np.abs(out.values - expect).max() < 1e-12

    def test_constant_negative_order_is_zero(self):
        fh = to_spectral(constant_field(G16, 4.0))
        out = fractional_laplacian(fh, 0.5)
        assert np.abs(out.coeffs).max() == 0.0

    def test_mixed_modes_negative_order(self):
        f = sin_field(G32, lambda x1, x2: np.sin(x1) + np.sin(4 * x2))
        out = to_physical(fractional_laplacian(to_spectral(f), -0.5))
        x1, x2 = coordinates(G32)
        expect = np.sin(x1) + 0.5 * np.sin(4 * x2)
        assert np.abs(out.values - expect).max() < 1e-13

    def test_semigroup_property(self):
        rng = np.random.default_rng(2)
        fh = random_band_spectral(G32, 1, 10, rng)
        a = fractional_laplacian(fractional_laplacian(fh, 0.3), 0.45)
        b = fractional_laplacian(fh, 0.75)
        scale = np.abs(b.coeffs).max()
        assert np.abs(a.coeffs - b.coeffs).max() <= 1e-12 * scale

    def test_order_zero_identity(self):
        rng = np.random.default_rng(3)
        fh = random_band_spectral(G16, 1, 5, rng)
        out = fractional_laplacian(fh, 0.0)
        assert np.array_equal(out.coeffs, fh.coeffs)


class TestRiesz:
    def test_unit_mode(self):
        out = to_physical(riesz_alpha(to_spectral(sin_field(G16, lambda x1, x2: np.sin(x1))), 0.6))
        expect = np.cos(coordinates(G16)[0])
        assert np.abs(out.values - expect).max() < 1e-13

    def test_transverse_mode_annihilated(self):
        out = riesz_alpha(to_spectral(sin_field(G16, lambda x1, x2: np.sin(x2))), 0.6)
        assert np.abs(out.coeffs).max() < 1e-15

    def test_mode_two(self):
        out = to_physical(
            riesz_alpha(to_spectral(sin_field(G32, lambda x1, x2: np.sin(2 * x1))), 0.5)
        )
        expect = math.sqrt(2.0) * np.cos(2 * coordinates(G32)[0])
        assert np.abs(out.values - expect).max() < 1e-12

    def test_output_real(self):
        rng = np.random.default_rng(4)
        fh = random_band_spectral(G32, 1, 8, rng)
        out = riesz_alpha(fh, 0.9)
        raw = np.fft.ifft2(out.coeffs) * G32.n**2
        assert np.abs(raw.imag).max() < 1e-12 * max(np.abs(raw.real).max(), 1e-300)

    def test_alpha_range(self):
        fh = to_spectral(constant_field(G16, 1.0))
        with pytest.raises(ValueError):
            riesz_alpha(fh, 1.5)


class TestBiotSavart:
    def test_single_mode(self):
        u1, u2 = biot_savart(to_spectral(sin_field(G32, lambda x1, x2: np.sin(x1))))
        assert np.abs(to_physical(u1).values).max() < 1e-14
        expect = -np.cos(coordinates(G32)[0])
        assert np.abs(to_physical(u2).values - expect).max() < 1e-13

    def test_zero(self):
        u1, u2 = biot_savart(to_spectral(constant_field(G16, 0.0)))
        assert np.abs(u1.coeffs).max() == 0.0 and np.abs(u2.coeffs).max() == 0.0

    def test_divergence_free(self):
        rng = np.random.default_rng(5)
        wh = random_band_spectral(G32, 1, 10, rng)
        u1, u2 = biot_savart(wh)
        k1, k2, _ = wavevectors(G32)
        div = 1j * k1 * u1.coeffs + 1j * k2 * u2.coeffs
        assert np.abs(div).max() <= 1e-13 * np.abs(wh.coeffs).max()

    def test_curl_recovers_vorticity(self):
        rng = np.random.default_rng(6)
        wh = random_band_spectral(G32, 1, 10, rng)
        u1, u2 = biot_savart(wh)
        k1, k2, _ = wavevectors(G32)
        curl = 1j * k1 * u2.coeffs - 1j * k2 * u1.coeffs
        assert np.abs(curl - wh.coeffs).max() <= 1e-12 * np.abs(wh.coeffs).max()


class TestVFromTheta:
    def test_single_mode(self):
        v1, v2 = v_from_theta(to_spectral(sin_field(G32, lambda x1, x2: np.sin(x1))), 0.5)
        assert np.abs(to_physical(v1).values).max() < 1e-14
        assert np.abs(to_physical(v2).values - np.sin(coordinates(G32)[0])).max() < 1e-13

    def test_constant_gives_zero(self):
        v1, v2 = v_from_theta(to_spectral(constant_field(G16, 2.0)), 0.3)
        assert np.abs(v1.coeffs).max() == 0.0 and np.abs(v2.coeffs).max() == 0.0

    def test_matches_biot_savart_of_riesz(self):
        rng = np.random.default_rng(7)
        for trial in range(5):
            beta = rng.uniform(0.05, 0.95)
            th = random_band_spectral(G32, 1, 10, rng)
            v1a, v2a = v_from_theta(th, beta)
            v1b, v2b = biot_savart(riesz_alpha(th, 1.0 - beta))
            scale = max(np.abs(v1a.coeffs).max(), np.abs(v2a.coeffs).max())
            assert np.abs(v1a.coeffs - v1b.coeffs).max() <= 1e-12 * scale
            assert np.abs(v2a.coeffs - v2b.coeffs).max() <= 1e-12 * scale

    def test_divergence_free(self):
        rng = np.random.default_rng(8)
        th = random_band_spectral(G32, 1, 10, rng)
        v1, v2 = v_from_theta(th, 0.4)
        k1, k2, _ = wavevectors(G32)
        div = 1j * k1 * v1.coeffs + 1j * k2 * v2.coeffs
        assert np.abs(div).max() <= 1e-13 * max(np.abs(v2.coeffs).max(), 1e-300)


class TestDealiasGradNorms:
    def test_dealias_cutoff_mode(self):
        n = 16
        coeffs = np.zeros((n, n), complex)
        coeffs[n // 2 - 1, 0] = 1.0
        coeffs[(-(n // 2 - 1)) % n, 0] = 1.0
        fh = SpectralField(G16, coeffs)
        assert np.abs(dealias(fh).coeffs).max() == 0.0

    def test_dealias_keeps_low_modes(self):
        # rounding junk beyond the cutoff is zeroed; the retained mode is untouched
        fh = to_spectral(sin_field(G16, lambda x1, x2: np.sin(3 * x1)))
        out = dealias(fh)
        assert out.coeffs[3, 0] == fh.coeffs[3, 0]
        assert np.abs(out.coeffs - fh.coeffs).max() < 1e-15

    def test_grad_and_perp_grad(self):
        fh = to_spectral(sin_field(G32, lambda x1, x2: np.sin(x1) * np.cos(2 * x2)))
        x1, x2 = coordinates(G32)
        g1, g2 = grad(fh)
        assert np.abs(to_physical(g1).values - np.cos(x1) * np.cos(2 * x2)).max() < 1e-12
        assert np.abs(to_physical(g2).values + 2 * np.sin(x1) * np.sin(2 * x2)).max() < 1e-12
        p1, p2 = perp_grad(fh)
        assert np.abs(to_physical(p1).values + to_physical(g2).values).max() < 1e-14
        assert np.abs(to_physical(p2).values - to_physical(g1).values).max() < 1e-14

    def test_lp_norm_sin(self):
        f = sin_field(G32, lambda x1, x2: np.sin(x1))
        assert abs(lp_norm(f, 2) - math.sqrt(2 * math.pi**2)) < 1e-12

    def test_lp_norm_sup(self):
        assert lp_norm(constant_field(G16, 3.0), math.inf) == 3.0

    def test_lp_norm_rejects_small_p(self):
        with pytest.raises(ValueError):
            lp_norm(constant_field(G16, 1.0), 0.5)


class TestTranslationCovariance:
    def test_riesz_and_v_commute_with_shifts(self):
        rng = np.random.default_rng(9)
        th = random_band_field(G32, 1, 8, rng)
        shift = (3, 5)
        shifted = PhysicalField(G32, np.roll(th.values, shift, axis=(0, 1)))
        for op in (
            lambda f: to_physical(riesz_alpha(to_spectral(f), 0.7)).values,
            lambda f: to_physical(v_from_theta(to_spectral(f), 0.3)[1]).values,
        ):
            a = np.roll(op(th), shift, axis=(0, 1))
            b = op(shifted)
            assert np.abs(a - b).max() <= 1e-12 * max(np.abs(a).max(), 1e-300)

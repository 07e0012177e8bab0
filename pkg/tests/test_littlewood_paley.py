"""Cutoff, dyadic blocks, low-pass filters and Besov norms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqgmodes.littlewood_paley import (
    band_project,
    besov_norm,
    chi,
    lowpass,
    phi_q,
    q_max_for,
    shell_project,
    shell_spectrum,
    shell_system,
)
from sqgmodes.spectral import FieldError, from_modes, lebesgue_norm, make_domain, random_field, zero_field
from sqgmodes import validation


class TestChi:
    @pytest.mark.parametrize("x,want", [(0.5, 1.0), (0.0, 1.0), (0.75, 1.0), (1.2, 0.0), (1.0, 0.0), (0.875, 0.5)])
    def test_values(self, x, want):
        assert chi(x) == pytest.approx(want, abs=1e-15)

    def test_negative(self):
        with pytest.raises(FieldError):
            chi(-0.1)

    def test_monotone(self):
        x = np.linspace(0, 2, 2001)
        assert np.all(np.diff(chi(x)) <= 0)


class TestBlocks:
    def test_q_max(self, d64, d128):
        assert q_max_for(d64) == 4
        assert q_max_for(d128) == 5

    def test_unit_mode_in_shell_zero(self, d64):
        assert phi_q(1.0, 0) == 1.0
        th = from_modes(d64, [((1, 0), 0.5)])
        for q in shell_system(d64).shells:
            want = th.coeffs if q == 0 else 0
            assert np.array_equal(shell_project(th, q).coeffs, np.zeros_like(th.coeffs) + want)

    @pytest.mark.parametrize("q", [0, 1, 2, 3, 6])
    def test_support(self, q):
        x = np.linspace(0, 2.0 ** (q + 2), 5001)
        v = phi_q(x, q)
        outside = (x < 0.75 * 2.0**q) | (x > 2.0 ** (q + 1))
        assert np.all(v[outside] == 0)
        assert np.all(v >= 0) and np.all(v <= 1)

    def test_partition_of_unity(self):
        assert validation.partition_of_unity().passed

    def test_truncated_partition_inside_radius(self, d64):
        S = shell_system(d64)
        inside = d64.kmag <= d64.dealias_radius
        total = sum(S.block(q) for q in S.shells)
        assert np.abs(total[inside] - 1).max() <= 1e-12

    @pytest.mark.parametrize("Q", [-1, 0, 1, 3])
    def test_telescoping(self, Q):
        x = np.linspace(0, 40, 4001)
        tele = sum(phi_q(x, q) for q in range(-1, Q + 1))
        assert np.abs(tele - chi(x / 2.0 ** (Q + 1))).max() <= 1e-15

    def test_out_of_range(self, d64):
        with pytest.raises(FieldError):
            shell_project(zero_field(d64), 5)
        with pytest.raises(FieldError):
            phi_q(1.0, -2)

    def test_zero(self, d64):
        assert not np.any(shell_project(zero_field(d64), 2).coeffs)


class TestProjections:
    def test_reconstruction(self):
        assert validation.lp_reconstruction().passed

    def test_lowpass_saturates(self, d64):
        th = random_field(d64, 1, 0.0, (1, 21))
        assert np.array_equal(lowpass(th, q_max_for(d64) + 1).coeffs, th.coeffs)

    def test_lowpass_single_modes(self, d64):
        one = from_modes(d64, [((1, 0), 0.5)])
        eight = from_modes(d64, [((8, 0), 0.5)])
        assert np.array_equal(lowpass(one, 0).coeffs, one.coeffs)
        assert not np.any(lowpass(eight, 0).coeffs)

    @pytest.mark.parametrize("Q", [0, 1, 2])
    def test_lowpass_idempotent_after_widening(self, d64, Q):
        th = random_field(d64, 2, 0.0, (1, 21))
        once = lowpass(th, Q)
        assert np.allclose(lowpass(once, Q + 1).coeffs, once.coeffs, rtol=0, atol=1e-16)

    def test_band_project(self, d64):
        S = shell_system(d64)
        th = random_field(d64, 4, 1.0, (1, 21))
        assert np.allclose(band_project(th, -1, S.q_max).coeffs, th.coeffs, atol=1e-15)
        assert np.array_equal(band_project(th, 2, 2).coeffs, shell_project(th, 2).coeffs)
        for Q in range(-1, S.q_max):
            both = lowpass(th, Q).coeffs + band_project(th, Q + 1, S.q_max).coeffs
            assert np.abs(both - th.coeffs).max() <= 1e-12 * np.abs(th.coeffs).max()

    def test_band_errors(self, d64):
        with pytest.raises(FieldError):
            band_project(zero_field(d64), 3, 2)
        with pytest.raises(FieldError):
            lowpass(zero_field(d64), -2)


class TestBesov:
    def test_cos_single_shell(self, d64):
        th = from_modes(d64, [((1, 0), 0.5)])
        v = besov_norm(th, 0.0, 4.0)
        assert v == pytest.approx(lebesgue_norm(th, 4), rel=1e-14)
        assert round(v, 5) == 0.78254

    def test_zero(self, d64):
        assert besov_norm(zero_field(d64), 0.0, 4.0) == 0

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_l2_overlap_bounds(self, seed):
        d = make_domain(1.0, 64)
        th = random_field(d, seed, 0.5, (1, 21))
        n2 = lebesgue_norm(th, 2)
        v = besov_norm(th, 0.0, 2.0)
        assert 0.7071 * n2 <= v <= n2 * (1 + 1e-12)

    def test_weights(self, d64):
        th = from_modes(d64, [((4, 0), 0.5)])
        # |k| = 4 lies only in shell q = 2, where lambda_2 = 4
        assert besov_norm(th, 1.0, 2.0) == pytest.approx(4.0 * lebesgue_norm(th, 2), rel=1e-13)

    def test_l_below_one(self, d64):
        with pytest.raises(FieldError):
            besov_norm(zero_field(d64), 0.0, 0.5)


class TestSpectrum:
    def test_cos(self, d64):
        spec = dict(shell_spectrum(from_modes(d64, [((1, 0), 0.5)]), 4.0))
        assert list(spec) == list(range(-1, 5))
        assert spec[0] > 0 and all(v == 0 for q, v in spec.items() if q != 0)

    def test_zero(self, d64):
        assert all(v == 0 for _, v in shell_spectrum(zero_field(d64), 2.0))

    def test_white_band(self, d64):
        th = random_field(d64, 9, 0.0, (1, 21))
        spec = dict(shell_spectrum(th, 2.0))
        S = shell_system(d64)
        for q in S.shells:
            touches = np.any((S.block(q) > 0) & (th.coeffs != 0))
            assert (spec[q] > 0) == bool(touches)
        assert spec[-1] == 0 and all(spec[q] > 0 for q in range(0, 5))


class TestLemmas:
    def test_bernstein(self):
        check = validation.bernstein()
        print(check.line(), "spread", round(check.detail["spread"], 3))
        assert check.passed

    def test_coercivity(self):
        check = validation.coercivity()
        print(check.line(), check.detail)
        assert check.passed

    @pytest.mark.parametrize("k,q", [((1, 0), 0), ((3, 0), 1), ((12, 0), 3)])
    def test_single_mode_lower_bound(self, d64, k, q):
        c = from_modes(d64, [(k, 0.5)]).coeffs
        for l in (2.0, 4.0, 6.0):
            for a in (1.2, 1.5, 1.8):
                r = validation.coercivity_ratio(d64, c, q, l, a)
                assert r >= (1.5 * math.pi) ** a * l * (1 - 1e-12)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import toeplitz as dense_toeplitz

from driftgauge import (
    AutocovarianceSequence,
    NoiseModelError,
    NoiseSpec,
    autocovariance,
    build_shaping_filters,
    derive_seed,
    fit_noise_spec,
    psd_of_model,
    resolve_densities,
    synthesize_noise,
    toeplitz_quadratics,
    welch_asd,
)

FS = 100.0
UG = 9.80665e-6


def white_sigma(density, fs=FS):
    # documented density-to-per-sample conversion: variance over the Nyquist band
    return density * math.sqrt(fs / 2.0)


class TestShapingFilters:
    def test_white_only_is_identity_tap(self):
        spec = NoiseSpec(arw_density=1e-3, sample_rate=FS)
        filters = build_shaping_filters(spec, 4)
        assert len(filters) == 1
        assert filters[0].source_kind == "white"
        np.testing.assert_array_equal(filters[0].coefficients, [1.0])

    def test_rrw_is_running_sum(self):
        spec = NoiseSpec(rrw_density=1e-3, sample_rate=FS)
        (flt,) = build_shaping_filters(spec, 3)
        assert flt.source_kind == "rrw"
        np.testing.assert_array_equal(flt.coefficients, [1.0, 1.0, 1.0])

    def test_bias_taps_follow_half_order_recursion(self):
        # hand-evaluated h_k = h_{k-1} (k - 0.5) / k
        spec = NoiseSpec(bias_instability=1e-3, sample_rate=FS)
        (flt,) = build_shaping_filters(spec, 4)
        np.testing.assert_allclose(
            flt.coefficients, [1.0, 0.5, 0.375, 0.3125], rtol=0, atol=1e-15
        )

    def test_all_sources_present(self):
        spec = NoiseSpec(
            arw_density=1e-3, bias_instability=1e-4, rrw_density=1e-5, sample_rate=FS
        )
        kinds = [f.source_kind for f in build_shaping_filters(spec, 8)]
        assert kinds == ["white", "bias_instability", "rrw"]

    def test_rejects_unusable_spec(self):
        spec = NoiseSpec(arw_density=1e-3, sample_rate=FS)
        object.__setattr__(spec, "arw_density", None)  # sidestep validation
        with pytest.raises(NoiseModelError):
            build_shaping_filters(spec, 4)


class TestSpecValidation:
    def test_rejects_negative_density(self):
        with pytest.raises(ValueError):
            NoiseSpec(arw_density=-1.0, sample_rate=FS)

    def test_rejects_empty_description(self):
        with pytest.raises(ValueError):
            NoiseSpec(sample_rate=FS)

    def test_rejects_super_nyquist_psd_point(self):
        with pytest.raises(ValueError):
            NoiseSpec(psd_points=((10.0, 1e-4), (60.0, 1e-5)), sample_rate=FS)

    def test_rejects_unsorted_psd_points(self):
        with pytest.raises(ValueError):
            NoiseSpec(psd_points=((10.0, 1e-4), (1.0, 1e-5)), sample_rate=FS)


class TestSynthesize:
    def test_zero_densities_give_zero_path(self):
        spec = NoiseSpec(
            arw_density=0.0, bias_instability=0.0, rrw_density=0.0, sample_rate=FS
        )
        out = synthesize_noise(spec, 64, seed=3)
        np.testing.assert_array_equal(out.samples, np.zeros(64))

    def test_deterministic_in_seed(self):
        spec = NoiseSpec(arw_density=1e-3, bias_instability=1e-4, sample_rate=FS)
        a = synthesize_noise(spec, 500, seed=11).samples
        b = synthesize_noise(spec, 500, seed=11).samples
        np.testing.assert_array_equal(a, b)
        c = synthesize_noise(spec, 500, seed=12).samples
        assert not np.array_equal(a, c)

    def test_white_sample_variance_matches_density(self):
        density = 2.5e-4
        spec = NoiseSpec(arw_density=density, sample_rate=FS)
        out = synthesize_noise(spec, 10**5, seed=5).samples
        expected = white_sigma(density) ** 2
        assert out.var() == pytest.approx(expected, rel=0.02)

    def test_mean_is_near_zero(self):
        spec = NoiseSpec(arw_density=1e-4, sample_rate=FS)
        out = synthesize_noise(spec, 10**5, seed=9).samples
        assert abs(out.mean()) < 5 * white_sigma(1e-4) / math.sqrt(10**5)

    def test_derive_seed_stable(self):
        assert derive_seed(42, 7) == derive_seed(42, 7)
        assert derive_seed(42, 7) != derive_seed(42, 8)

    def test_psd_only_spec_is_fitted_on_the_fly(self):
        truth = NoiseSpec(arw_density=1e-4, bias_instability=6e-5, sample_rate=FS)
        freqs = np.logspace(-2, 1, 6)
        spec = NoiseSpec(
            psd_points=tuple(zip(freqs, psd_of_model(truth, freqs))), sample_rate=FS
        )
        out = synthesize_noise(spec, 2 * 10**4, seed=13).samples
        # variance should land near the fitted model's, within MC slack
        acov = autocovariance(spec, 2 * 10**4)
        assert out.var() == pytest.approx(acov.r[0], rel=0.2)


class TestAutocovariance:
    def test_white_is_delta(self):
        density = 1e-3
        spec = NoiseSpec(arw_density=density, sample_rate=FS)
        acov = autocovariance(spec, 6)
        sigma2 = white_sigma(density) ** 2
        np.testing.assert_allclose(acov.r, [sigma2, 0, 0, 0, 0, 0], atol=1e-20)
        assert acov.eta == pytest.approx(sigma2)

    def test_rrw_window_triangle(self):
        # driving sigma for rrw is K*sqrt(dt/2); pick K so it is exactly 1
        k_density = math.sqrt(2.0 * FS)
        spec = NoiseSpec(rrw_density=k_density, sample_rate=FS)
        acov = autocovariance(spec, 3)
        np.testing.assert_allclose(acov.r, [3.0, 2.0, 1.0], rtol=1e-12)

    def test_bias_r0_is_tap_power(self):
        # unit driving sigma: B = sqrt(2 ln 2); taps [1, .5, .375, .3125]
        spec = NoiseSpec(bias_instability=math.sqrt(2 * math.log(2)), sample_rate=FS)
        acov = autocovariance(spec, 4)
        assert acov.r[0] == pytest.approx(1.0 + 0.25 + 0.140625 + 0.09765625, rel=1e-12)

    def test_empirical_covariance_matches(self):
        spec = NoiseSpec(
            arw_density=1e-4, bias_instability=5e-5, rrw_density=2e-5, sample_rate=FS
        )
        n, trials = 64, 10**4
        acov = autocovariance(spec, n)
        acc = np.zeros(6)
        for k in range(trials):
            z = synthesize_noise(spec, n, derive_seed(77, k)).samples
            for lag in range(6):
                acc[lag] += np.dot(z[: n - lag], z[lag:]) / (n - lag)
        emp = acc / trials
        assert emp[0] == pytest.approx(acov.r[0], rel=0.05)
        np.testing.assert_allclose(emp[1:6], acov.r[1:6], atol=0.05 * acov.r[0])

    @given(
        st.integers(min_value=1, max_value=40),
        st.floats(min_value=0.0, max_value=1e-3),
        st.floats(min_value=0.0, max_value=1e-3),
        st.floats(min_value=0.0, max_value=1e-3),
    )
    @settings(max_examples=40, deadline=None)
    def test_is_valid_autocovariance(self, n, arw, bi, rrw):
        if arw == bi == rrw == 0.0:
            arw = 1e-6
        spec = NoiseSpec(
            arw_density=arw, bias_instability=bi, rrw_density=rrw, sample_rate=FS
        )
        acov = autocovariance(spec, n)
        assert acov.r[0] >= 0.0
        assert np.all(np.abs(acov.r[1:]) <= acov.r[0] * (1 + 1e-9))
        assert acov.eta >= -1e-12


class TestPsdModel:
    def test_white_is_flat(self):
        spec = NoiseSpec(arw_density=15 * UG, sample_rate=FS)
        asd = psd_of_model(spec, [0.01, 0.1, 1.0, 10.0])
        np.testing.assert_allclose(asd, 15 * UG, rtol=1e-12)

    def test_rrw_slope_halves_per_octave(self):
        spec = NoiseSpec(arw_density=0.0, rrw_density=1e-4, sample_rate=FS)
        asd = psd_of_model(spec, [0.5, 1.0])
        assert asd[1] / asd[0] == pytest.approx(0.5, rel=1e-12)

    def test_bias_slope_is_half_order(self):
        spec = NoiseSpec(arw_density=0.0, bias_instability=1e-4, sample_rate=FS)
        asd = psd_of_model(spec, [0.25, 1.0])
        assert asd[0] / asd[1] == pytest.approx(2.0, rel=1e-12)

    def test_rejects_out_of_band_frequency(self):
        spec = NoiseSpec(arw_density=1e-4, sample_rate=FS)
        with pytest.raises(ValueError):
            psd_of_model(spec, [FS])


class TestFit:
    def test_flat_points_give_pure_white(self):
        density = 60 * UG
        points = [(0.1, density), (1.0, density), (10.0, density)]
        spec = fit_noise_spec(points, sample_rate=FS)
        assert spec.arw_density == pytest.approx(density, rel=1e-6)
        assert spec.bias_instability is None
        assert spec.rrw_density is None

    def test_round_trip_recovers_known_spec(self):
        truth = NoiseSpec(
            arw_density=1e-4, bias_instability=8e-5, rrw_density=3e-5, sample_rate=FS
        )
        freqs = np.logspace(-2, 1, 9)
        points = list(zip(freqs, psd_of_model(truth, freqs)))
        fitted = fit_noise_spec(points, sample_rate=FS)
        assert fitted.arw_density == pytest.approx(truth.arw_density, rel=0.05)
        assert fitted.bias_instability == pytest.approx(truth.bias_instability, rel=0.05)
        assert fitted.rrw_density == pytest.approx(truth.rrw_density, rel=0.05)

    def test_refit_is_projection(self):
        first = fit_noise_spec(
            [(0.01, 700 * UG), (0.1, 200 * UG), (10.0, 150 * UG)], sample_rate=FS
        )
        freqs = [0.01, 0.1, 10.0]
        refit = fit_noise_spec(
            list(zip(freqs, psd_of_model(first, freqs))), sample_rate=FS
        )
        assert refit.arw_density == pytest.approx(first.arw_density, rel=1e-6)
        assert refit.bias_instability == pytest.approx(first.bias_instability, rel=1e-6)
        assert refit.rrw_density == pytest.approx(first.rrw_density, rel=1e-6)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            fit_noise_spec([(1.0, 1e-4)], sample_rate=FS)

    def test_underdetermined_prefers_gentle_slopes(self):
        # two points falling between white and random-walk slopes resolve to
        # white plus bias wander, not an extrapolation-hungry 1/f^2 term
        spec = fit_noise_spec([(10.0, 0.09 * UG), (100.0, 0.03 * UG)], sample_rate=250.0)
        assert spec.rrw_density is None
        assert spec.bias_instability is not None
        np.testing.assert_allclose(
            psd_of_model(spec, [10.0, 100.0]), [0.09 * UG, 0.03 * UG], rtol=1e-5
        )

    def test_single_point_resolves_white(self):
        spec = NoiseSpec(psd_points=((10.0, 0.09 * UG),), sample_rate=FS)
        resolved = resolve_densities(spec)
        assert resolved.arw_density == pytest.approx(0.09 * UG)


def random_autocovariance(rng, n):
    # any tap self-correlation is a valid autocovariance
    taps = rng.standard_normal(rng.integers(1, n + 1))
    corr = np.correlate(taps, taps, mode="full")[taps.size - 1 :]
    r = np.zeros(n)
    r[: corr.size] = corr
    # mix in a white floor so r_0 dominates comfortably
    r[0] += rng.uniform(0.1, 1.0)
    return AutocovarianceSequence.from_lags(r)


class TestToeplitzQuadratics:
    def test_white_closed_forms(self):
        r = AutocovarianceSequence.from_lags([1.0] + [0.0] * 9)
        p_rii_p, q_rnn_q, p_rin_q = toeplitz_quadratics(r, 10, 10)
        assert p_rii_p == 385.0  # sum of k^2, k = 1..10
        assert q_rnn_q == 10.0
        assert p_rin_q == 55.0  # sum of k, k = 1..10

    @pytest.mark.parametrize("n", [1, 2, 7, 50, 200])
    def test_matches_dense_evaluation(self, n):
        rng = np.random.default_rng(1000 + n)
        for _ in range(8):
            acov = random_autocovariance(rng, n)
            i = int(rng.integers(1, n + 1))
            p = np.arange(i, 0, -1, dtype=float)
            q = np.ones(n)
            r_ii = dense_toeplitz(acov.r[:i])
            r_nn = dense_toeplitz(acov.r[:n])
            r_in = r_nn[:i, :]
            expected = (p @ r_ii @ p, q @ r_nn @ q, p @ r_in @ q)
            got = toeplitz_quadratics(acov, i, n)
            np.testing.assert_allclose(got, expected, rtol=1e-10)

    def test_index_bounds(self):
        r = AutocovarianceSequence.from_lags([1.0, 0.0, 0.0])
        with pytest.raises(IndexError):
            toeplitz_quadratics(r, 0, 3)
        with pytest.raises(IndexError):
            toeplitz_quadratics(r, 4, 3)
        with pytest.raises(IndexError):
            toeplitz_quadratics(r, 2, 5)


class TestWelchConsistency:
    def test_white_spec_within_1p5_db(self):
        spec = NoiseSpec(arw_density=15 * UG, sample_rate=FS)
        samples = synthesize_noise(spec, 10**6, seed=21).samples
        freqs, asd = welch_asd(samples, FS, nperseg=16384)
        f_min = FS / 16384
        band = (freqs >= 10 * f_min) & (freqs <= FS / 4)
        model = psd_of_model(spec, freqs[band])
        rms_db = np.sqrt(np.mean((20 * np.log10(asd[band] / model)) ** 2))
        assert rms_db < 1.5

    def test_colored_spec_within_3_db(self):
        spec = NoiseSpec(
            arw_density=150 * UG,
            bias_instability=79 * UG,
            rrw_density=36 * UG,
            sample_rate=FS,
        )
        samples = synthesize_noise(spec, 10**6, seed=22).samples
        freqs, asd = welch_asd(samples, FS, nperseg=16384)
        f_min = FS / 16384
        band = (freqs >= 10 * f_min) & (freqs <= FS / 4)
        model = psd_of_model(spec, freqs[band])
        rms_db = np.sqrt(np.mean((20 * np.log10(asd[band] / model)) ** 2))
        assert rms_db < 3.0

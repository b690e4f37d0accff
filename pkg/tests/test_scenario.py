import math

import numpy as np
import pytest

from driftgauge import (
    DurationDistribution,
    HazardLevel,
    NoiseSpec,
    PeCurve,
    error_variance,
    expected_pe,
    load_catalog,
    load_duration_cdf,
    load_hazards,
    pe_curve,
    sigma_x_for,
)

FS = 100.0
DT = 0.01


def white_spec(per_sample_sigma):
    # invert the density conversion so the per-sample std is exact
    return NoiseSpec(arw_density=per_sample_sigma / math.sqrt(FS / 2.0), sample_rate=FS)


class TestSigmaX:
    def test_white_matches_large_n_closed_form(self):
        # sigma = 0.01 m/s^2 per sample, T = 20 s: sigma_S ~ sqrt(s2 dt^4 n^3/12)
        spec = white_spec(0.01)
        got = sigma_x_for(spec, 20.0, DT, mode="white")
        approx = math.sqrt(2.0) * math.sqrt(0.01**2 * DT**4 * 2000**3 / 12.0)
        assert got == pytest.approx(approx, rel=1e-3)
        assert got == pytest.approx(0.0365, rel=2e-3)

    def test_single_sample_window_uses_exact_sum(self):
        sigma = 0.05
        spec = white_spec(sigma)
        got = sigma_x_for(spec, DT, DT, mode="white")
        # n = 1: variance is sigma^2 dt^4 (1 + 1/4 - 1) = sigma^2 dt^4 / 4
        assert got == pytest.approx(math.sqrt(2.0) * 0.5 * sigma * DT**2, rel=1e-12)

    def test_doubling_duration_scales_three_halves(self):
        spec = white_spec(0.01)
        a = sigma_x_for(spec, 20.0, DT, mode="white")
        b = sigma_x_for(spec, 40.0, DT, mode="white")
        assert b / a == pytest.approx(2.0**1.5, rel=2e-3)

    def test_exact_mode_equals_white_mode_for_white_sensor(self):
        spec = white_spec(0.02)
        for T in (0.5, 5.0, 17.0):
            w = sigma_x_for(spec, T, DT, mode="white")
            e = sigma_x_for(spec, T, DT, mode="exact")
            assert e == pytest.approx(w, rel=1e-9)

    def test_exact_mode_agrees_with_error_variance(self):
        from driftgauge import autocovariance

        spec = load_catalog(sample_rate=FS)["MPU6500"]
        T = 5.0
        n = int(round(T / DT))
        r = autocovariance(spec, n)
        var = error_variance(r, n, dt=DT, with_zupt=True)[-1]
        assert sigma_x_for(spec, T, DT, mode="exact") == pytest.approx(
            math.sqrt(2 * var), rel=1e-9
        )

    def test_sample_rate_mismatch_rejected(self):
        spec = white_spec(0.01)
        with pytest.raises(ValueError):
            sigma_x_for(spec, 10.0, 0.02, mode="white")


class TestPeCurve:
    def test_zero_noise_sensor_flat_zero(self):
        spec = NoiseSpec(arw_density=0.0, sample_rate=FS)
        hazard = HazardLevel("10in50", mu_d=0.05, sigma_d=0.02)
        curve = pe_curve("null", spec, hazard, np.array([1.0, 10.0, 30.0]), DT)
        assert all(p == 0.0 for _, p in curve.points)

    def test_white_mode_curve_nondecreasing(self):
        spec = load_catalog(sample_rate=FS)["MTI-100"]
        hazard = HazardLevel("10in50", mu_d=0.05, sigma_d=0.02)
        curve = pe_curve(
            "MTI-100", spec, hazard, np.arange(1.0, 31.0, 3.0), DT, mode="white"
        )
        pes = [p for _, p in curve.points]
        assert all(b >= a - 1e-15 for a, b in zip(pes, pes[1:]))

    def test_deterministic(self):
        spec = load_catalog(sample_rate=FS)["AXO215"]
        hazard = HazardLevel("2in50", mu_d=0.12, sigma_d=0.05)
        grid = np.array([5.0, 15.0])
        a = pe_curve("AXO215", spec, hazard, grid, DT, mode="exact")
        b = pe_curve("AXO215", spec, hazard, grid, DT, mode="exact")
        assert a.points == b.points

    def test_curve_validation(self):
        with pytest.raises(ValueError):
            PeCurve(sensor="x", hazard="10in50", points=((2.0, 0.1), (1.0, 0.2)))
        with pytest.raises(ValueError):
            PeCurve(sensor="x", hazard="10in50", points=((1.0, 1.5),))


class TestExpectedPe:
    def test_constant_curve(self):
        curve = PeCurve("s", "10in50", points=((1.0, 0.3), (10.0, 0.3)))
        cdf = DurationDistribution(points=((2.0, 0.5), (8.0, 1.0)))
        assert expected_pe(curve, cdf) == pytest.approx(0.3)

    def test_point_mass(self):
        curve = PeCurve("s", "10in50", points=((0.0, 0.0), (100.0, 1.0)))
        cdf = DurationDistribution(points=((25.0, 1.0),))
        assert expected_pe(curve, cdf) == pytest.approx(0.25)

    def test_two_point_hand_sum(self):
        # pe(T) = T/100: 0.5 * 0.1 + 0.5 * 0.3
        curve = PeCurve("s", "10in50", points=((0.0, 0.0), (100.0, 1.0)))
        cdf = DurationDistribution(points=((10.0, 0.5), (30.0, 1.0)))
        assert expected_pe(curve, cdf) == pytest.approx(0.2)

    def test_clamped_extrapolation(self):
        curve = PeCurve("s", "10in50", points=((10.0, 0.1), (20.0, 0.2)))
        cdf = DurationDistribution(points=((1.0, 0.5), (50.0, 1.0)))
        assert expected_pe(curve, cdf) == pytest.approx(0.5 * 0.1 + 0.5 * 0.2)

    def test_bounded_by_curve_range(self):
        curve = PeCurve("s", "10in50", points=((1.0, 0.05), (60.0, 0.4)))
        cdf = load_duration_cdf()
        value = expected_pe(curve, cdf)
        assert 0.05 <= value <= 0.4

    def test_empty_cdf_rejected(self):
        with pytest.raises(ValueError):
            DurationDistribution(points=())

    def test_decreasing_cdf_rejected(self):
        with pytest.raises(ValueError):
            DurationDistribution(points=((1.0, 0.5), (2.0, 0.4)))


class TestDataFiles:
    def test_bundled_hazards(self):
        hazards = load_hazards()
        assert set(hazards) == {"50in50", "10in50", "2in50"}
        for hazard in hazards.values():
            assert hazard.sigma_d > 0

    def test_bundled_duration_cdf(self):
        cdf = load_duration_cdf()
        assert cdf.points[-1][1] == pytest.approx(1.0)

    def test_hazard_name_validated(self):
        with pytest.raises(ValueError):
            HazardLevel("9in50", mu_d=0.1, sigma_d=0.01)

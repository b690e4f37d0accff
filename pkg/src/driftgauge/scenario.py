"""Sensor selection curves: classification error versus shaking duration.

For a duration T the shaking window holds n = T/dt samples, the corrected
displacement error at the end of shaking follows from the noise model, and
two identical sensors measuring adjacent floors give a relative-displacement
error std of sqrt(2) times the single-sensor value.  Feeding that into the
classification matrix yields p_e(T) per sensor and hazard level.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import bundled_data_path
from .classification import (
    DriftThresholds,
    RelativeDisplacementModel,
    conditional_matrix,
)
from .noise import NoiseSpec, autocovariance, resolve_densities, toeplitz_quadratics

__all__ = [
    "HAZARD_NAMES",
    "HazardLevel",
    "DurationDistribution",
    "PeCurve",
    "sigma_x_for",
    "pe_curve",
    "expected_pe",
    "load_hazards",
    "load_duration_cdf",
]

HAZARD_NAMES = ("50in50", "10in50", "2in50")


@dataclass(frozen=True)
class HazardLevel:
    """Peak relative displacement model for one shaking exceedance level."""

    name: str
    mu_d: float
    sigma_d: float

    def __post_init__(self) -> None:
        if self.name not in HAZARD_NAMES:
            raise ValueError(f"hazard name must be one of {HAZARD_NAMES}")
        if not self.sigma_d > 0.0:
            raise ValueError("sigma_d must be > 0")


@dataclass(frozen=True, eq=False)
class DurationDistribution:
    """Empirical CDF of strong-motion duration, as (T seconds, cum prob)."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("duration CDF needs at least one point")
        pts = tuple((float(t), float(p)) for t, p in self.points)
        ts = [t for t, _ in pts]
        ps = [p for _, p in pts]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("durations must be strictly increasing")
        if any(b < a for a, b in zip(ps, ps[1:])):
            raise ValueError("cumulative probabilities must be nondecreasing")
        if ps[0] < 0.0 or ps[-1] > 1.0 or ps[-1] <= 0.0:
            raise ValueError("cumulative probabilities must lie in (0, 1]")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True, eq=False)
class PeCurve:
    """p_e as a function of strong-motion duration for one sensor/hazard."""

    sensor: str
    hazard: str
    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        pts = tuple((float(t), float(p)) for t, p in self.points)
        ts = [t for t, _ in pts]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("duration grid must be strictly increasing")
        if any(not 0.0 <= p <= 1.0 for _, p in pts):
            raise ValueError("pe values must lie in [0, 1]")
        object.__setattr__(self, "points", pts)


def _white_window_variance(sigma: float, n: int, dt: float) -> float:
    # Corrected error variance at the end of an n-sample window for white
    # noise of per-sample std sigma, exact at all n.
    s1 = n * (n + 1) / 2.0
    s2 = n * (n + 1) * (2 * n + 1) / 6.0
    return sigma**2 * dt**4 * (s2 + n**3 / 4.0 - n * s1)


def sigma_x_for(
    spec: NoiseSpec, T: float, dt: float = 0.01, mode: str = "exact"
) -> float:
    """Relative-displacement error std (m) at the end of a T-second window.

    ``white`` keeps only the sensor's flat noise component and uses the
    closed-form window variance; ``exact`` evaluates the full noise model
    through the Toeplitz quadratic forms.  Both apply the correction with
    simplified coefficients and return sqrt(2) times the single-sensor std.
    """
    if T < dt:
        raise ValueError("T must cover at least one sample")
    if abs(spec.sample_rate * dt - 1.0) > 1e-9:
        raise ValueError("spec sample_rate and dt disagree")
    n = max(1, int(round(T / dt)))
    spec = resolve_densities(spec)
    if mode == "white":
        density = spec.arw_density or 0.0
        sigma = density * np.sqrt(spec.sample_rate / 2.0)
        var = _white_window_variance(float(sigma), n, dt)
    elif mode == "exact":
        r = autocovariance(spec, n)
        p_rii_p, q_rnn_q, p_rin_q = toeplitz_quadratics(r, n, n)
        var = (p_rii_p + n**2 / 4.0 * q_rnn_q - n * p_rin_q) * dt**4
    else:
        raise ValueError(f"unknown mode: {mode}")
    return float(np.sqrt(2.0 * max(var, 0.0)))


def pe_curve(
    sensor: str,
    spec: NoiseSpec,
    hazard: HazardLevel,
    t_grid: np.ndarray,
    dt: float = 0.01,
    mode: str = "exact",
    thresholds: DriftThresholds = DriftThresholds(),
    priors: np.ndarray | None = None,
) -> PeCurve:
    """Classification error probability over a duration grid."""
    points = []
    for T in np.asarray(t_grid, dtype=float):
        sigma_x = sigma_x_for(spec, T, dt, mode)
        model = RelativeDisplacementModel(
            mu_d=hazard.mu_d, sigma_d=hazard.sigma_d, sigma_x=sigma_x
        )
        matrix = conditional_matrix(model, thresholds, priors=priors)
        points.append((float(T), matrix.pe))
    return PeCurve(sensor=sensor, hazard=hazard.name, points=tuple(points))


def expected_pe(curve: PeCurve, durations: DurationDistribution) -> float:
    """Duration-weighted mean of a pe curve over an empirical CDF.

    Stieltjes sum over the CDF jumps, with the curve interpolated linearly
    and clamped at its ends.
    """
    t_curve = np.array([t for t, _ in curve.points])
    pe_curve_vals = np.array([p for _, p in curve.points])
    ts = np.array([t for t, _ in durations.points])
    cum = np.array([p for _, p in durations.points])
    masses = np.diff(cum, prepend=0.0)
    pe_at = np.interp(ts, t_curve, pe_curve_vals)
    return float(np.dot(pe_at, masses) / cum[-1])


def load_hazards(path: str | Path | None = None) -> dict[str, HazardLevel]:
    """Load hazard drift models from an INI-style file (bundled by default).

    Sections are ``[hazard <name>]`` with keys ``mu_d_m`` and ``sigma_d_m``.
    """
    import configparser

    if path is None:
        path = bundled_data_path("hazards.cfg")
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    hazards: dict[str, HazardLevel] = {}
    for section in parser.sections():
        if not section.startswith("hazard "):
            raise ValueError(f"{path}: unexpected section [{section}]")
        name = section.split(" ", 1)[1]
        keys = set(parser[section])
        if keys != {"mu_d_m", "sigma_d_m"}:
            raise ValueError(f"{path}: [{section}] must define exactly mu_d_m, sigma_d_m")
        hazards[name] = HazardLevel(
            name=name,
            mu_d=parser.getfloat(section, "mu_d_m"),
            sigma_d=parser.getfloat(section, "sigma_d_m"),
        )
    if not hazards:
        raise ValueError(f"{path}: no hazard sections found")
    return hazards


def load_duration_cdf(path: str | Path | None = None) -> DurationDistribution:
    """Load a ``T_seconds,cum_prob`` CSV (bundled synthetic CDF by default)."""
    if path is None:
        path = bundled_data_path("durations.csv")
    points = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if row[0].strip() == "T_seconds":
                continue
            points.append((float(row[0]), float(row[1])))
    return DurationDistribution(points=tuple(points))

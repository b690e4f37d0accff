"""Accelerometer noise models: spectral specs, shaping filters, synthesis.

A sensor's output noise is described by up to three independent Gaussian
sources, each with a canonical one-sided amplitude spectral density (ASD):

* white noise with a flat density ``N``            [m/s^2/sqrt(Hz)]
* a 1/f bias wander quoted as an Allan-floor
  acceleration ``B``, with ASD ``B / sqrt(2*ln2*pi*f)``   [m/s^2/sqrt(Hz)]
* an acceleration random walk with coefficient ``K``,
  ASD ``K / (2*pi*f)``                             [m/s^2/sqrt(Hz)]

Each source is realized as white Gaussian noise pushed through a finite
impulse response shaping filter.  At sample rate ``fs = 1/dt`` the
per-sample driving standard deviations that reproduce the densities above
over the Nyquist band are::

    white:             N * sqrt(fs / 2)
    bias instability:  B / sqrt(2 * ln 2)
    random walk:       K * sqrt(dt / 2)

Synthesized processes are stationary over the requested window: each filter
is truncated at the window length and driven by a white sequence extending
far enough into the past that every output sample sees the full tap history.
The autocovariance of the output is then exactly the density-scaled tap
self-correlation, which is what the displacement error analysis consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import optimize, signal

__all__ = [
    "NoiseModelError",
    "NoiseSpec",
    "ShapingFilter",
    "AutocovarianceSequence",
    "NoiseRealization",
    "build_shaping_filters",
    "synthesize_noise",
    "autocovariance",
    "psd_of_model",
    "fit_noise_spec",
    "resolve_densities",
    "toeplitz_quadratics",
    "derive_seed",
    "welch_asd",
]

_LN2 = math.log(2.0)

# Power PSD of the bias-wander source is B^2 / (2*ln2*pi*f); this constant
# converts an Allan-floor acceleration into the 1/f power coefficient.
BI_PSD_CONSTANT = 2.0 * _LN2 * math.pi


class NoiseModelError(ValueError):
    """Raised when a noise spec cannot support the requested operation."""


@dataclass(frozen=True)
class NoiseSpec:
    """Spectral description of one accelerometer axis.

    Parameters
    ----------
    arw_density : float or None
        White-noise amplitude density in m/s^2/sqrt(Hz).
    bias_instability : float or None
        Allan-floor acceleration of the 1/f component in m/s^2.
    rrw_density : float or None
        Acceleration random-walk coefficient in m/s^2*sqrt(Hz).
    psd_points : tuple of (float, float) or None
        Raw (frequency Hz, density m/s^2/sqrt(Hz)) samples for sensors that
        are specified by a measured or datasheet PSD instead of densities.
        Frequencies must be strictly increasing and lie in (0, fs/2].
    sample_rate : float
        Output data rate in Hz.
    fit_residual_db : float or None
        RMS log-residual (dB) left by :func:`fit_noise_spec`, if this spec
        was produced by a fit.
    """

    arw_density: float | None = None
    bias_instability: float | None = None
    rrw_density: float | None = None
    psd_points: tuple[tuple[float, float], ...] | None = None
    sample_rate: float = 100.0
    fit_residual_db: float | None = None

    def __post_init__(self) -> None:
        if not self.sample_rate > 0.0:
            raise ValueError("sample_rate must be > 0")
        for name in ("arw_density", "bias_instability", "rrw_density"):
            value = getattr(self, name)
            if value is not None and (not math.isfinite(value) or value < 0.0):
                raise ValueError(f"{name} must be finite and >= 0")
        described = any(
            getattr(self, name) is not None
            for name in ("arw_density", "bias_instability", "rrw_density")
        )
        if self.psd_points is not None:
            points = tuple((float(f), float(d)) for f, d in self.psd_points)
            nyquist = self.sample_rate / 2.0
            freqs = [f for f, _ in points]
            if any(f <= 0.0 or f > nyquist for f in freqs):
                raise ValueError("psd_points frequencies must lie in (0, fs/2]")
            if any(b <= a for a, b in zip(freqs, freqs[1:])):
                raise ValueError("psd_points must be strictly increasing in frequency")
            if any(d < 0.0 for _, d in points):
                raise ValueError("psd_points densities must be >= 0")
            object.__setattr__(self, "psd_points", points)
            described = True
        if not described:
            raise ValueError("spec needs at least one density or psd_points")

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate


@dataclass(frozen=True, eq=False)
class ShapingFilter:
    """FIR taps turning unit-variance white noise into one noise source.

    Taps are dimensionless; the white input is scaled by the source's
    per-sample driving sigma before convolution.
    """

    coefficients: np.ndarray
    source_kind: str  # "white" | "bias_instability" | "rrw"

    def __post_init__(self) -> None:
        taps = np.asarray(self.coefficients, dtype=float)
        if taps.size == 0 or not np.all(np.isfinite(taps)):
            raise ValueError("filter taps must be non-empty and finite")
        object.__setattr__(self, "coefficients", taps)
        if self.source_kind not in ("white", "bias_instability", "rrw"):
            raise ValueError(f"unknown source kind: {self.source_kind}")


@dataclass(frozen=True, eq=False)
class AutocovarianceSequence:
    """Autocovariance lags r_0..r_{m-1} of the summed noise, in (m/s^2)^2.

    ``eta`` is the two-sided lag sum r_0 + 2*sum(r_k), truncated at the
    available lags.
    """

    r: np.ndarray
    eta: float

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size == 0:
            raise ValueError("r must be a non-empty 1-D array")
        if not np.all(np.isfinite(r)):
            raise ValueError("autocovariance values must be finite")
        if r[0] < 0.0:
            raise ValueError("r_0 must be >= 0")
        # Allow a hair of numerical slack from FFT-based tap correlation.
        if np.any(np.abs(r[1:]) > r[0] * (1.0 + 1e-9) + 1e-300):
            raise ValueError("invalid autocovariance: |r_k| exceeds r_0")
        if self.eta < -1e-9 * max(r[0], 1.0) * r.size:
            raise ValueError("eta must be >= 0 within tolerance")
        object.__setattr__(self, "r", r)

    @classmethod
    def from_lags(cls, r: Sequence[float]) -> "AutocovarianceSequence":
        r = np.asarray(r, dtype=float)
        eta = float(r[0] + 2.0 * r[1:].sum())
        return cls(r=r, eta=eta)


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    """One synthesized noise path; a pure function of (spec, n, seed)."""

    samples: np.ndarray
    seed: int
    spec: NoiseSpec


def _drive_sigma(spec: NoiseSpec, kind: str) -> float:
    """Per-sample standard deviation of the white noise driving a source."""
    fs = spec.sample_rate
    if kind == "white":
        return float(spec.arw_density) * math.sqrt(fs / 2.0)
    if kind == "bias_instability":
        return float(spec.bias_instability) / math.sqrt(2.0 * _LN2)
    if kind == "rrw":
        return float(spec.rrw_density) * math.sqrt(0.5 / fs)
    raise ValueError(f"unknown source kind: {kind}")


def _half_integrator_taps(n: int) -> np.ndarray:
    # Impulse response of (1 - z^-1)^(-1/2), the standard 1/f generator,
    # truncated at the window length.
    k = np.arange(1, n, dtype=float)
    taps = np.empty(n)
    taps[0] = 1.0
    if n > 1:
        taps[1:] = np.cumprod((k - 0.5) / k)
    return taps


def resolve_densities(spec: NoiseSpec) -> NoiseSpec:
    """Return a spec with component densities populated.

    Specs already carrying densities pass through unchanged.  A spec that
    only has PSD samples is fitted (two or more points) or interpreted as
    white noise at the sampled level (a single point carries no slope
    information).
    """
    if any(
        getattr(spec, name) is not None
        for name in ("arw_density", "bias_instability", "rrw_density")
    ):
        return spec
    points = spec.psd_points
    if points is None or len(points) == 0:
        raise NoiseModelError("spec has no usable noise source")
    if len(points) == 1:
        return replace(spec, arw_density=points[0][1])
    return fit_noise_spec(points, sample_rate=spec.sample_rate)


def _source_slots(spec: NoiseSpec, n: int) -> list[ShapingFilter | None]:
    # Fixed slot order keeps each source on its own RNG stream regardless of
    # which other sources are present.
    slots: list[ShapingFilter | None] = [None, None, None]
    if spec.arw_density is not None:
        slots[0] = ShapingFilter(np.ones(1), "white")
    if spec.bias_instability is not None:
        slots[1] = ShapingFilter(_half_integrator_taps(n), "bias_instability")
    if spec.rrw_density is not None:
        slots[2] = ShapingFilter(np.ones(n), "rrw")
    return slots


def build_shaping_filters(spec: NoiseSpec, n: int) -> list[ShapingFilter]:
    """Build one FIR shaping filter per noise source present in ``spec``.

    White noise is the identity tap, the random walk is a running sum over
    the window, and the bias wander is a half-order fractional integrator
    truncated at ``n`` taps.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = resolve_densities(spec)
    filters = [flt for flt in _source_slots(spec, n) if flt is not None]
    if not filters:
        raise NoiseModelError("spec has no usable noise source")
    return filters


def synthesize_noise(spec: NoiseSpec, n: int, seed: int) -> NoiseRealization:
    """Draw one acceleration-noise path of length ``n``.

    Each source convolves an independent scaled white path with its shaping
    filter in 'valid' mode, so every output sample is driven by the full tap
    history and the path is stationary with the autocovariance reported by
    :func:`autocovariance`.  Output is deterministic in (spec, n, seed) and
    independent across sources.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = resolve_densities(spec)
    children = np.random.SeedSequence(seed).spawn(3)
    out = np.zeros(n)
    for child, flt in zip(children, _source_slots(spec, n)):
        if flt is None:
            continue
        sigma = _drive_sigma(spec, flt.source_kind)
        if sigma == 0.0:
            continue
        rng = np.random.default_rng(child)
        taps = flt.coefficients
        white = rng.standard_normal(n + taps.size - 1) * sigma
        out += signal.fftconvolve(white, taps, mode="valid")
    return NoiseRealization(samples=out, seed=seed, spec=spec)


def autocovariance(spec: NoiseSpec, n: int) -> AutocovarianceSequence:
    """Autocovariance lags 0..n-1 of the synthesized noise process.

    Summed over sources: r_k = sum_j h[j] h[j+k] scaled by each source's
    per-sample driving variance.  The random-walk and bias sources use taps
    truncated at ``n``, which is the stationary-over-the-window convention
    the displacement error analysis assumes.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = resolve_densities(spec)
    r = np.zeros(n)
    if spec.arw_density is not None:
        r[0] += _drive_sigma(spec, "white") ** 2
    if spec.bias_instability is not None:
        taps = _half_integrator_taps(n)
        corr = signal.fftconvolve(taps, taps[::-1], mode="full")[n - 1 :]
        r += _drive_sigma(spec, "bias_instability") ** 2 * corr
    if spec.rrw_density is not None:
        r += _drive_sigma(spec, "rrw") ** 2 * (n - np.arange(n, dtype=float))
    return AutocovarianceSequence.from_lags(r)


def psd_of_model(spec: NoiseSpec, freqs: Sequence[float]) -> np.ndarray:
    """Model amplitude spectral density (m/s^2/sqrt(Hz)) at ``freqs``.

    Component powers add: flat white, 1/f bias wander, 1/f^2 random walk.
    """
    f = np.asarray(freqs, dtype=float)
    if np.any(f <= 0.0) or np.any(f > spec.sample_rate / 2.0):
        raise ValueError("frequencies must lie in (0, sample_rate/2]")
    spec = resolve_densities(spec)
    power = np.zeros_like(f)
    if spec.arw_density is not None:
        power += spec.arw_density**2
    if spec.bias_instability is not None:
        power += spec.bias_instability**2 / (BI_PSD_CONSTANT * f)
    if spec.rrw_density is not None:
        power += (spec.rrw_density / (2.0 * math.pi * f)) ** 2
    return np.sqrt(power)


# Slope-penalty weight for underdetermined fits.  Small enough to leave
# well-determined fits untouched, large enough to break ties in favour of
# the gentlest spectral slopes (extrapolating steep slopes below the data
# band invents low-frequency noise the data does not evidence).
_FIT_PENALTY = 1e-6


def fit_noise_spec(
    psd_points: Sequence[tuple[float, float]],
    sample_rate: float = 100.0,
) -> NoiseSpec:
    """Fit white + 1/f + 1/f^2 densities to sampled PSD amplitudes.

    Least squares on log amplitude over the three canonical slopes, seeded
    with a non-negative linear-space solve.  Components whose fitted density
    is not positive are dropped.  The RMS log residual (dB) is stored on the
    returned spec.

    Parameters
    ----------
    psd_points : sequence of (frequency Hz, amplitude density)
        At least two points with positive frequencies and densities.
    sample_rate : float
        Sample rate recorded on the returned spec; points above its Nyquist
        frequency inform the fit but are not retained on the spec.
    """
    points = sorted((float(f), float(d)) for f, d in psd_points)
    if len(points) < 2:
        raise ValueError("need at least two psd points to fit")
    f = np.array([p[0] for p in points])
    a = np.array([p[1] for p in points])
    if np.any(f <= 0.0) or np.any(a <= 0.0):
        raise ValueError("psd points must have positive frequency and density")
    if np.any(np.diff(f) == 0.0):
        raise ValueError("psd points must have distinct frequencies")

    # Work on normalized powers with unit-scaled columns so the optimizer
    # sees O(1) parameters whatever the physical units.
    y = a**2
    y_scale = y.max()
    basis = np.column_stack([np.ones_like(f), 1.0 / f, 1.0 / f**2])
    col_scale = basis.max(axis=0)
    a_norm = basis / col_scale
    y_norm = y / y_scale
    u0, _ = optimize.nnls(a_norm, y_norm)

    log_y_norm = np.log(y_norm)

    def residuals(u: np.ndarray) -> np.ndarray:
        power = a_norm @ np.maximum(u, 0.0)
        fit_res = 0.5 * (np.log(np.maximum(power, 1e-300)) - log_y_norm)
        slope_pen = [
            _FIT_PENALTY * math.sqrt(max(u[1], 0.0)),
            2.0 * _FIT_PENALTY * math.sqrt(max(u[2], 0.0)),
        ]
        return np.concatenate([fit_res, slope_pen])

    sol = optimize.least_squares(
        residuals, u0, bounds=(0.0, np.inf), xtol=1e-15, ftol=1e-15, gtol=1e-15
    )
    x = np.maximum(sol.x, 0.0) * y_scale / col_scale

    # Drop components that contribute nothing anywhere in the data band
    # (below one part per million of the power, i.e. optimizer dust).
    contributions = basis * x
    total = contributions.sum(axis=1)
    keep = [bool(np.any(c > 1e-6 * total)) for c in contributions.T]

    model_power = basis @ (x * keep)
    resid_db = 10.0 * (np.log10(model_power) - np.log10(y))
    rms_db = float(np.sqrt(np.mean(resid_db**2)))

    nyquist = sample_rate / 2.0
    in_band = tuple(p for p in points if p[0] <= nyquist)
    return NoiseSpec(
        arw_density=math.sqrt(x[0]) if keep[0] else None,
        bias_instability=math.sqrt(x[1] * BI_PSD_CONSTANT) if keep[1] else None,
        rrw_density=2.0 * math.pi * math.sqrt(x[2]) if keep[2] else None,
        psd_points=in_band if in_band else None,
        sample_rate=sample_rate,
        fit_residual_db=rms_db,
    )


def _ramp_autocorrelation(i: int, lags: np.ndarray) -> np.ndarray:
    # Self-correlation of the ramp [i, i-1, ..., 1] at the given lags:
    # sum_{u=1..i-k} u*(u+k) = m(m+1)(2m+1)/6 + k*m(m+1)/2 with m = i-k.
    m = i - lags
    return m * (m + 1.0) * (2.0 * m + 1.0) / 6.0 + lags * m * (m + 1.0) / 2.0


def toeplitz_quadratics(
    r: AutocovarianceSequence, i: int, n: int
) -> tuple[float, float, float]:
    """Quadratic forms P'R_ii P, Q'R_nn Q and P'R_in Q without dense matrices.

    ``P = [i, i-1, ..., 1]`` weights the integration window up to sample
    ``i``; ``Q`` is all ones over the n-sample shaking window.  R matrices
    are Toeplitz in the lags of ``r``.  Runs in O(n).

    Returns
    -------
    (p_rii_p, q_rnn_q, p_rin_q) : tuple of float
    """
    lags = np.asarray(r.r, dtype=float)
    if not 1 <= i <= n:
        raise IndexError(f"sample index i={i} outside 1..{n}")
    if lags.size < n:
        raise IndexError(f"need {n} autocovariance lags, have {lags.size}")
    rn = lags[:n]

    k_i = np.arange(i, dtype=float)
    weights = np.full(i, 2.0)
    weights[0] = 1.0
    p_rii_p = float(np.dot(weights * rn[:i], _ramp_autocorrelation(i, k_i)))

    k_n = np.arange(n, dtype=float)
    q_rnn_q = float(n * rn[0] + 2.0 * np.dot(n - k_n[1:], rn[1:]))

    csum = np.cumsum(rn)
    a = np.arange(1, i + 1)
    row_sums = csum[a - 1] + csum[n - a] - rn[0]
    p_rin_q = float(np.dot(i + 1.0 - a, row_sums))
    return p_rii_p, q_rnn_q, p_rin_q


def derive_seed(master_seed: int, index: int) -> int:
    """Stable per-realization seed so Monte Carlo batches are order-free."""
    state = np.random.SeedSequence((master_seed, index)).generate_state(1, np.uint64)
    return int(state[0])


def welch_asd(
    samples: np.ndarray, sample_rate: float, nperseg: int = 16384
) -> tuple[np.ndarray, np.ndarray]:
    """Welch amplitude spectral density estimate, DC bin dropped.

    Returns (frequencies Hz, ASD in the samples' units per sqrt(Hz)).
    """
    freqs, pxx = signal.welch(samples, fs=sample_rate, nperseg=nperseg)
    return freqs[1:], np.sqrt(pxx[1:])

"""Displacement estimation from acceleration with zero-velocity correction.

Discrete scheme (rectangle rule, sample interval dt)::

    v[i] = sum_{k<=i} a[k] dt
    s[i] = sum_{k<=i} v[k] dt = sum_{k<=i} (i-k+1) a[k] dt^2

The double sum weights sample k by (i-k+1), so the displacement error from
additive noise z is ``P' Z[1:i] dt^2`` with P = [i, i-1, ..., 1].  Shaking
ends at sample n with true velocity zero, making the measured v[n] pure
accumulated noise.  Adding ``c_i * v[n] * dt`` to s[i] cancels part of that
error; the mean-square-optimal coefficient is

    c_i = - (P' R_in Q) / (Q' R_nn Q)

with Q all ones and R the noise autocovariance in Toeplitz layout, which
for stationary noise simplifies to roughly -i^2 / (2n).  The corrected and
uncorrected error variances are evaluated by :func:`error_variance`.

The rectangle rule is load-bearing: the error algebra above depends on the
exact (i-k+1) weights, so no trapezoid upgrade.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .noise import AutocovarianceSequence

__all__ = [
    "EosNotFoundError",
    "AccelTrace",
    "EosDetection",
    "DisplacementEstimate",
    "ZuptCoefficients",
    "remove_bias",
    "double_integrate",
    "detect_eos",
    "zupt_coefficients",
    "apply_zupt",
    "error_variance",
    "read_trace",
    "write_trace",
]

# Uniform-grid tolerance for trace files: 1 ppm of the sample interval.
_JITTER_TOL = 1e-6


class EosNotFoundError(RuntimeError):
    """No end-of-shaking window found; the recording may need extending."""


@dataclass(frozen=True, eq=False)
class AccelTrace:
    """Uniformly sampled single-axis horizontal acceleration, m/s^2."""

    samples: np.ndarray
    dt: float
    bias_removed: bool = False

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("trace needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("trace samples must be finite")
        if not self.dt > 0.0:
            raise ValueError("dt must be > 0")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        """Sample times (k * dt for k = 1..n)."""
        return self.dt * np.arange(1, self.samples.size + 1)


@dataclass(frozen=True)
class EosDetection:
    """End-of-shaking marker.

    ``eos_index`` is the 1-based index of the first sample of the quiet
    window, so the correction window [1, eos_index] ends where true
    velocity first becomes zero.
    """

    eos_index: int
    delta: float
    window_w: float

    def __post_init__(self) -> None:
        if self.eos_index < 1:
            raise ValueError("eos_index must be >= 1")
        if not self.delta > 0.0:
            raise ValueError("delta must be > 0")


@dataclass(frozen=True, eq=False)
class ZuptCoefficients:
    """Correction coefficients c_1..c_n, one per sample of the window."""

    c: np.ndarray
    mode: str  # "exact" | "simplified"

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be a finite 1-D array")
        if self.mode not in ("exact", "simplified"):
            raise ValueError(f"unknown mode: {self.mode}")
        object.__setattr__(self, "c", c)


@dataclass(frozen=True, eq=False)
class DisplacementEstimate:
    """Velocity and displacement series with optional correction and sigmas."""

    velocity: np.ndarray
    displacement: np.ndarray
    dt: float
    displacement_zupt: np.ndarray | None = None
    sigma_s: np.ndarray | None = None
    sigma_s_zupt: np.ndarray | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.velocity, dtype=float)
        s = np.asarray(self.displacement, dtype=float)
        if v.shape != s.shape or v.ndim != 1:
            raise ValueError("velocity and displacement must be equal-length 1-D")
        for name in ("displacement_zupt", "sigma_s", "sigma_s_zupt"):
            arr = getattr(self, name)
            if arr is not None and np.asarray(arr).shape != v.shape:
                raise ValueError(f"{name} length does not match")
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "displacement", s)


def remove_bias(
    trace: AccelTrace, rest_window: float, side: str = "end"
) -> AccelTrace:
    """Subtract the mean of a known-rest window from the whole trace.

    Removes the constant sensor bias together with the constant gravity
    fraction that couples in under the linear-motion assumption.  The rest
    window must cover at least 10 samples at the chosen end.
    """
    m = int(round(rest_window / trace.dt))
    if m < 10:
        raise ValueError("rest window must cover at least 10 samples")
    if m > len(trace):
        raise ValueError("rest window longer than trace")
    if side == "end":
        rest = trace.samples[-m:]
    elif side == "start":
        rest = trace.samples[:m]
    else:
        raise ValueError("side must be 'start' or 'end'")
    return AccelTrace(
        samples=trace.samples - rest.mean(), dt=trace.dt, bias_removed=True
    )


def double_integrate(trace: AccelTrace) -> DisplacementEstimate:
    """Rectangle-rule double integration of a bias-free trace."""
    if not trace.bias_removed:
        raise ValueError("remove the constant bias before integrating")
    v = np.cumsum(trace.samples) * trace.dt
    s = np.cumsum(v) * trace.dt
    return DisplacementEstimate(velocity=v, displacement=s, dt=trace.dt)


def detect_eos(
    trace: AccelTrace, sigma: float, window_w: float = 1.0
) -> EosDetection:
    """Find the first window of length ``window_w`` with |a| below 3*sigma.

    ``sigma`` is the per-sample noise standard deviation of the sensor.
    Returns the detection whose ``eos_index`` is the window start, or raises
    :class:`EosNotFoundError` when no sample window qualifies.
    """
    if not sigma > 0.0:
        raise ValueError("sigma must be > 0")
    if window_w < trace.dt:
        raise ValueError("window_w must cover at least one sample")
    delta = 3.0 * sigma
    w = max(1, int(round(window_w / trace.dt)))
    quiet = np.abs(trace.samples) < delta
    if quiet.size >= w:
        runs = np.convolve(quiet.astype(int), np.ones(w, dtype=int), mode="valid")
        starts = np.nonzero(runs == w)[0]
        if starts.size:
            return EosDetection(
                eos_index=int(starts[0]) + 1, delta=delta, window_w=window_w
            )
    raise EosNotFoundError(
        f"no {window_w} s window below {delta:.3g} m/s^2; extend the recording"
    )


def zupt_coefficients(
    n: int, mode: str = "simplified", r: AutocovarianceSequence | None = None
) -> ZuptCoefficients:
    """Correction coefficients for an n-sample shaking window.

    ``simplified`` returns -i^2/(2n).  ``exact`` minimizes the corrected
    error variance for the given noise autocovariance, which needs ``r``
    with at least n lags.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(1, n + 1, dtype=float)
    if mode == "simplified":
        return ZuptCoefficients(c=-(i**2) / (2.0 * n), mode="simplified")
    if mode != "exact":
        raise ValueError(f"unknown mode: {mode}")
    if r is None:
        raise ValueError("exact mode needs an autocovariance sequence")
    q_rnn_q, p_rin_q = _zupt_quadratics(r, n)
    if q_rnn_q <= 0.0:
        raise ValueError("degenerate noise covariance: Q'R_nnQ <= 0")
    return ZuptCoefficients(c=-p_rin_q / q_rnn_q, mode="exact")


def _zupt_quadratics(
    r: AutocovarianceSequence, n: int
) -> tuple[float, np.ndarray]:
    """Q'R_nnQ and the vector of P'R_inQ for every i = 1..n, in O(n)."""
    lags = np.asarray(r.r, dtype=float)
    if lags.size < n:
        raise IndexError(f"need {n} autocovariance lags, have {lags.size}")
    rn = lags[:n]
    k = np.arange(n, dtype=float)
    q_rnn_q = float(n * rn[0] + 2.0 * np.dot(n - k[1:], rn[1:]))
    csum = np.cumsum(rn)
    a = np.arange(1, n + 1)
    row_sums = csum[a - 1] + csum[n - a] - rn[0]
    # P'R_inQ(i) = sum_{a<=i} (i+1-a) * row_sums[a] via prefix sums.
    s1 = np.cumsum(row_sums)
    s2 = np.cumsum(a * row_sums)
    p_rin_q = (a + 1.0) * s1 - s2
    return q_rnn_q, p_rin_q


def apply_zupt(
    est: DisplacementEstimate, eos: EosDetection, coeffs: ZuptCoefficients
) -> DisplacementEstimate:
    """Apply the correction s_zupt[i] = s[i] + c_i * v[n] * dt over [1, n]."""
    n = eos.eos_index
    if len(coeffs.c) != n or len(est.velocity) != n:
        raise ValueError(
            f"length mismatch: window n={n}, coefficients {len(coeffs.c)}, "
            f"estimate {len(est.velocity)}"
        )
    correction = coeffs.c * (est.velocity[n - 1] * est.dt)
    return replace(est, displacement_zupt=est.displacement + correction)


def error_variance(
    r: AutocovarianceSequence,
    n: int,
    dt: float = 1.0,
    with_zupt: bool = False,
    exact_coefficients: bool = False,
) -> np.ndarray:
    """Analytic displacement error variance at every sample i = 1..n, in m^2.

    Without correction: ``P'R_iiP dt^4``.  With correction the default is
    the simplified-coefficient expression

        (P'R_iiP + i^4/(4n^2) Q'R_nnQ - i^2/n P'R_inQ) dt^4

    while ``exact_coefficients=True`` plugs the optimal coefficient into the
    error quadratic, giving ``(P'R_iiP - (P'R_inQ)^2 / Q'R_nnQ) dt^4``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lags = np.asarray(r.r, dtype=float)
    if lags.size < n:
        raise IndexError(f"need {n} autocovariance lags, have {lags.size}")
    rn = lags[:n]

    p_rii_p = np.empty(n)
    for idx in range(1, n + 1):
        k = np.arange(idx, dtype=float)
        m = idx - k
        rho = m * (m + 1.0) * (2.0 * m + 1.0) / 6.0 + k * m * (m + 1.0) / 2.0
        weights = np.full(idx, 2.0)
        weights[0] = 1.0
        p_rii_p[idx - 1] = np.dot(weights * rn[:idx], rho)

    if not with_zupt:
        return p_rii_p * dt**4

    q_rnn_q, p_rin_q = _zupt_quadratics(r, n)
    i = np.arange(1, n + 1, dtype=float)
    if exact_coefficients:
        if q_rnn_q <= 0.0:
            raise ValueError("degenerate noise covariance: Q'R_nnQ <= 0")
        var = p_rii_p - p_rin_q**2 / q_rnn_q
    else:
        var = p_rii_p + i**4 / (4.0 * n**2) * q_rnn_q - i**2 / n * p_rin_q
    return var * dt**4


def read_trace(path: str | Path) -> AccelTrace:
    """Read a ``t,ax`` CSV trace, validating the time grid to 1 ppm jitter."""
    path = Path(path)
    times: list[float] = []
    accel: list[float] = []
    with path.open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if row[0].strip() == "t":
                continue
            times.append(float(row[0]))
            accel.append(float(row[1]))
    if len(times) < 2:
        raise ValueError(f"{path}: need at least two samples")
    t = np.asarray(times)
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not dt > 0.0:
        raise ValueError(f"{path}: timestamps are not increasing")
    expected = t[0] + dt * np.arange(t.size)
    if np.max(np.abs(t - expected)) > _JITTER_TOL * dt * t.size:
        raise ValueError(f"{path}: time grid jitter exceeds 1 ppm tolerance")
    return AccelTrace(samples=np.asarray(accel), dt=float(dt))


def write_trace(path: str | Path, trace: AccelTrace, comments: list[str] | None = None) -> None:
    """Write a trace as ``t,ax`` CSV with optional ``#`` comment header."""
    lines = [f"# {c}" for c in comments or []]
    lines.append("t,ax")
    for t, a in zip(trace.times, trace.samples):
        lines.append(f"{t:.10g},{a:.12g}")
    Path(path).write_text("\n".join(lines) + "\n")

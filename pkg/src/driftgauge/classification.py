"""Damage-state classification and misclassification probabilities.

A story pair's peak relative displacement D is modeled Gaussian and the
measurement error X as independent zero-mean Gaussian, so labels are
assigned by thresholding |D| (truth) and |D + X| (measurement) at the two
drift limits d0 < d1.  The conditional label matrix is

    P(B=b | B_true=bt) = E[ P(|d + X| in band_b) | d in region_bt ]

where the inner probability is a sum of normal CDF differences over the two
symmetric measured bands and the outer expectation is a truncated-Gaussian
average over the truth region, evaluated by adaptive Gauss-Legendre
quadrature.  The overall error probability weights each row's off-diagonal
mass by the prior of its true state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

__all__ = [
    "QuadratureError",
    "ClassLabel",
    "DriftThresholds",
    "RelativeDisplacementModel",
    "ClassificationMatrix",
    "idr",
    "classify",
    "relative_error_std",
    "conditional_matrix",
    "overall_pe",
]


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved tolerance {achieved:.3g})")
        self.achieved = achieved


class ClassLabel(enum.Enum):
    """Post-event damage state of a building."""

    IO = "IO"  # immediate occupancy
    LS = "LS"  # life safety
    CP = "CP"  # collapse prevention


@dataclass(frozen=True)
class DriftThresholds:
    """Interstory drift ratio limits and the story height mapping them to
    displacement thresholds d0 = idr0*h and d1 = idr1*h (meters)."""

    idr0: float = 0.007
    idr1: float = 0.05
    floor_height: float = 4.0

    def __post_init__(self) -> None:
        if not 0.0 < self.idr0 < self.idr1:
            raise ValueError("need 0 < idr0 < idr1")
        if not self.floor_height > 0.0:
            raise ValueError("floor_height must be > 0")

    @property
    def d0(self) -> float:
        return self.idr0 * self.floor_height

    @property
    def d1(self) -> float:
        return self.idr1 * self.floor_height


@dataclass(frozen=True)
class RelativeDisplacementModel:
    """Gaussian peak relative displacement N(mu_d, sigma_d^2) plus an
    independent zero-mean Gaussian measurement error of std sigma_x."""

    mu_d: float
    sigma_d: float
    sigma_x: float

    def __post_init__(self) -> None:
        if not self.sigma_d > 0.0:
            raise ValueError("sigma_d must be > 0")
        if self.sigma_x < 0.0:
            raise ValueError("sigma_x must be >= 0")


@dataclass(frozen=True, eq=False)
class ClassificationMatrix:
    """Row-stochastic conditional label probabilities and overall error.

    ``p[i, j]`` is P(measured label j | true label i) with rows and columns
    ordered IO, LS, CP.  ``priors`` are P(true label) and ``pe`` the
    prior-weighted probability of any wrong label.
    """

    p: np.ndarray
    priors: np.ndarray
    pe: float

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        priors = np.asarray(self.priors, dtype=float)
        if p.shape != (3, 3) or priors.shape != (3,):
            raise ValueError("expected a 3x3 matrix and 3 priors")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("conditional probabilities must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("rows must sum to 1 within 1e-9")
        if abs(priors.sum() - 1.0) > 1e-12:
            raise ValueError("priors must sum to 1 within 1e-12")
        if not 0.0 <= self.pe <= 1.0:
            raise ValueError("pe must lie in [0, 1]")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "priors", priors)


def idr(disp_lower: float, disp_upper: float, floor_height: float) -> float:
    """Signed interstory drift ratio between two stacked floors."""
    if not floor_height > 0.0:
        raise ValueError("floor_height must be > 0")
    return (disp_upper - disp_lower) / floor_height


def classify(
    peak_abs_relative_disp: float, th: DriftThresholds = DriftThresholds()
) -> ClassLabel:
    """Label a peak |relative displacement|; thresholds assign upward."""
    if peak_abs_relative_disp < 0.0:
        raise ValueError("classification input must be non-negative")
    if peak_abs_relative_disp < th.d0:
        return ClassLabel.IO
    if peak_abs_relative_disp < th.d1:
        return ClassLabel.LS
    return ClassLabel.CP


def relative_error_std(sigma_s1: float, sigma_s2: float) -> float:
    """Error std of the displacement difference of two independent sensors."""
    if sigma_s1 < 0.0 or sigma_s2 < 0.0:
        raise ValueError("sigmas must be >= 0")
    return math.hypot(sigma_s1, sigma_s2)


# 15-point Gauss-Legendre rule on [-1, 1], the panel workhorse.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)
_MAX_DEPTH = 52
# Standardized half-width kept around the nearest point of a truth region;
# the truncated-Gaussian weight is below exp(-1000) at the cut.
_TAIL_SPAN = 45.0


def _gl_panel(fun, a: float, b: float) -> np.ndarray:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    values = fun(mid + half * _GL_NODES)
    return half * (_GL_WEIGHTS @ values)


def _adaptive_vector_quad(fun, a: float, b: float, tol: float) -> np.ndarray:
    """Adaptive bisection with Gauss-Legendre panels on a vector integrand.

    ``fun`` maps an array of nodes to (nodes, components).  The local error
    estimate is whole-panel vs summed half-panels; tolerance halves with
    each split.
    """
    total = np.zeros(fun(np.array([0.5 * (a + b)])).shape[1])
    achieved = 0.0
    stack = [(a, b, tol, 0)]
    while stack:
        lo, hi, loc_tol, depth = stack.pop()
        whole = _gl_panel(fun, lo, hi)
        mid = 0.5 * (lo + hi)
        halves = _gl_panel(fun, lo, mid) + _gl_panel(fun, mid, hi)
        err = float(np.max(np.abs(halves - whole)))
        if err <= loc_tol or hi - lo <= 1e-14 * (abs(lo) + abs(hi) + 1.0):
            total += halves
            achieved += err
            continue
        if depth >= _MAX_DEPTH:
            raise QuadratureError("quadrature did not converge", achieved + err)
        stack.append((lo, mid, loc_tol / 2.0, depth + 1))
        stack.append((mid, hi, loc_tol / 2.0, depth + 1))
    return total


def _truth_priors(model: RelativeDisplacementModel, th: DriftThresholds) -> np.ndarray:
    """P(true label) from the |D| partition of the Gaussian drift model."""
    mu, sd = model.mu_d, model.sigma_d

    def band(lo: float, hi: float) -> float:
        # P(lo <= |D| < hi) as CDF differences over the two signed bands.
        upper = ndtr((hi - mu) / sd) - ndtr((lo - mu) / sd)
        lower = ndtr((-lo - mu) / sd) - ndtr((-hi - mu) / sd)
        return float(upper + lower)

    p_io = band(0.0, th.d0)
    p_ls = band(th.d0, th.d1)
    p_cp = 1.0 - p_io - p_ls
    return np.array([p_io, p_ls, max(p_cp, 0.0)])


def _conditional_row(
    bounds: tuple[float, float],
    model: RelativeDisplacementModel,
    th: DriftThresholds,
    tol: float,
) -> np.ndarray:
    """One matrix row: measured-label probabilities given |D| in ``bounds``.

    Integrates in the standardized variable w = (d - mu)/sigma_d with the
    truncated density rescaled by its value at the region point nearest the
    mean, so deep-tail rows stay well conditioned.
    """
    mu, sd, sx = model.mu_d, model.sigma_d, model.sigma_x
    lo, hi = bounds
    intervals = []
    for d_lo, d_hi in ((lo, hi), (-hi, -lo)):
        w_lo = (d_lo - mu) / sd
        w_hi = -math.inf if d_hi == -math.inf else (d_hi - mu) / sd
        if d_hi == math.inf:
            w_hi = math.inf
        if w_hi > w_lo:
            intervals.append((w_lo, w_hi))
    w_star = min(min(abs(w_lo), abs(w_hi)) if w_lo * w_hi > 0 else 0.0
                 for w_lo, w_hi in intervals)
    w_star_sq = w_star * w_star

    d0, d1 = th.d0, th.d1

    def integrand(w: np.ndarray) -> np.ndarray:
        weight = np.exp(0.5 * (w_star_sq - w * w))
        d = mu + sd * w
        g_io = ndtr((d0 - d) / sx) - ndtr((-d0 - d) / sx)
        g_ls = (
            ndtr((d1 - d) / sx)
            - ndtr((d0 - d) / sx)
            + ndtr((-d0 - d) / sx)
            - ndtr((-d1 - d) / sx)
        )
        return np.column_stack([weight, weight * g_io, weight * g_ls])

    sums = np.zeros(3)
    for w_lo, w_hi in intervals:
        near = min(max(0.0, w_lo), w_hi)
        a = max(w_lo, near - _TAIL_SPAN)
        b = min(w_hi, near + _TAIL_SPAN)
        if b <= a:
            continue
        sums += _adaptive_vector_quad(integrand, a, b, tol)
    mass, int_io, int_ls = sums
    p_io = min(max(int_io / mass, 0.0), 1.0)
    p_ls = min(max(int_ls / mass, 0.0), 1.0 - p_io)
    return np.array([p_io, p_ls, 1.0 - p_io - p_ls])


def conditional_matrix(
    model: RelativeDisplacementModel,
    th: DriftThresholds = DriftThresholds(),
    priors: np.ndarray | None = None,
    tol: float = 1e-11,
) -> ClassificationMatrix:
    """Conditional label matrix P(B | B_true) and overall error probability.

    ``priors`` defaults to the truth-label probabilities implied by the
    drift model itself; pass explicit values to weight an external building
    inventory instead.  A zero measurement error degenerates to the identity
    matrix.  Raises :class:`QuadratureError` if an entry cannot be resolved
    to tolerance.
    """
    if priors is None:
        priors_arr = _truth_priors(model, th)
    else:
        priors_arr = np.asarray(priors, dtype=float)
        if priors_arr.shape != (3,) or abs(priors_arr.sum() - 1.0) > 1e-12:
            raise ValueError("priors must be 3 values summing to 1")

    if model.sigma_x == 0.0:
        p = np.eye(3)
    else:
        regions = ((0.0, th.d0), (th.d0, th.d1), (th.d1, math.inf))
        p = np.vstack(
            [_conditional_row(region, model, th, tol) for region in regions]
        )
    pe = float(np.dot(1.0 - np.diag(p), priors_arr))
    return ClassificationMatrix(p=p, priors=priors_arr, pe=min(max(pe, 0.0), 1.0))


def overall_pe(m: ClassificationMatrix) -> float:
    """Prior-weighted probability of assigning any wrong label."""
    return float(np.dot(1.0 - np.diag(m.p), m.priors))

"""Closed-form and benchmark reflection patterns."""

from __future__ import annotations

import math

import numpy as np

from ..channel import ArrayGeometry, derivative_weights, steering_derivative, steering_irs
from ..metrics import ReflectPattern

RANDOM_PHASES = "RandomPhases"
IDENTITY = "Identity"

ALIGN_COLUMN = "AlignColumn"
SPLIT_ALIGN = "SplitAlign"
DERIVATIVE_ALIGN = "DerivativeAlign"


def los_optimal_phases(theta: float, theta2: float, geom: ArrayGeometry) -> ReflectPattern:
    """Phases aligning ``a(theta2)`` with ``a(theta)`` so that ``|a^T(theta2) Phi^T a(theta)| = N``."""
    n = geom.N
    idx = np.arange(1, n + 1)
    phases = math.pi * (n - 2 * idx + 1) * geom.spacing_ratio * (math.sin(theta) + math.sin(theta2))
    return ReflectPattern.from_phases(phases)


def benchmark_pattern(kind: str, n: int, seed: int = 0) -> ReflectPattern:
    if kind == RANDOM_PHASES:
        rng = np.random.default_rng(seed)
        return ReflectPattern.from_phases(rng.uniform(0.0, 2.0 * math.pi, n))
    if kind == IDENTITY:
        return ReflectPattern(np.ones(n, dtype=complex))
    raise ValueError(f"unknown benchmark pattern {kind!r}")


def appendix_aligned_pattern(kind: str, g_hat: np.ndarray, col: int, theta: float, geom: ArrayGeometry) -> ReflectPattern:
    """Patterns that coherently combine one channel column.

    Parameters
    ----------
    kind : {"AlignColumn", "SplitAlign", "DerivativeAlign"}
        ``AlignColumn`` cancels the phases of ``g_col`` and ``a``.
        ``SplitAlign`` cancels only ``a`` on the first half (0-based
        ``n < N/2``) and both on the second half.  ``DerivativeAlign``
        cancels ``g_col`` and the steering-derivative phases.
    g_hat : ndarray, shape (N, K)
    col : int
        Zero-based column index.
    """
    g_hat = np.asarray(g_hat)
    n = g_hat.shape[0]
    if not 0 <= col < g_hat.shape[1]:
        raise IndexError(f"column {col} out of range for {g_hat.shape[1]} columns")
    g = g_hat[:, col]
    a = steering_irs(theta, n, geom)
    if kind == ALIGN_COLUMN:
        phases = -np.angle(g) - np.angle(a)
    elif kind == SPLIT_ALIGN:
        phases = -np.angle(a)
        half = np.arange(n) >= n / 2.0
        phases = np.where(half, -np.angle(g) - np.angle(a), phases)
    elif kind == DERIVATIVE_ALIGN:
        ad = steering_derivative(theta, n, geom)
        # entries with a zero derivative weight keep the steering phase only
        ad_phase = np.where(derivative_weights(n) != 0, np.angle(ad), np.angle(a))
        phases = -np.angle(g) - ad_phase
    else:
        raise ValueError(f"unknown aligned pattern {kind!r}")
    return ReflectPattern.from_phases(phases)

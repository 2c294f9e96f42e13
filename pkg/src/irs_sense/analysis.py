"""Closed-form bounds, crossover thresholds and scaling fits.

The ``gamma`` quantities are the normalized pattern objectives of the
Rayleigh analysis:

* ``Gamma1``: ``||G_t^T Phi^T a||^2 ||G_r Phi^T a||^2`` (fully-passive SNR)
* ``Gamma2``: ``||G_t^T Phi^T a||^2`` (semi-passive SNR)
* ``Gamma3``: isotropic fully-passive CRB denominator (with ``D1 a``)
* ``Gamma4``: isotropic semi-passive CRB denominator

all on unit-variance channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .channel import derivative_weights

GAMMA1 = "Gamma1"
GAMMA2 = "Gamma2"
GAMMA3 = "Gamma3"
GAMMA4 = "Gamma4"
QUANTITIES = (GAMMA1, GAMMA2, GAMMA3, GAMMA4)

LOS_SNR = "LosSnr"
RAYLEIGH_SNR = "RayleighSnr"

# Rayleigh magnitude with E r^2 = 1
_R_MEAN = math.sqrt(math.pi) / 2.0
_R_M2 = 1.0 - math.pi / 4.0
_R_M3 = 3.0 * math.sqrt(math.pi) / 4.0 - 3.0 * _R_MEAN + 2.0 * _R_MEAN ** 3
_R_M4 = 2.0 - 4.0 * _R_MEAN * (3.0 * math.sqrt(math.pi) / 4.0) + 6.0 * _R_MEAN ** 2 - 3.0 * _R_MEAN ** 4


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float
    quantity: str

    def __post_init__(self):
        if self.lower > self.upper:
            raise AnalysisError(f"{self.quantity}: lower {self.lower} exceeds upper {self.upper}")

    def contains(self, value: float, rel_tol: float = 0.0) -> bool:
        slack = rel_tol * max(abs(self.lower), abs(self.upper))
        return self.lower - slack <= value <= self.upper + slack


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float
    n_range: Tuple[int, int]


def _check_counts(n, m_t, m_r):
    if n < 1 or m_t < 1 or m_r < 1:
        raise AnalysisError("n, m_t and m_r must be >= 1")


def gamma1_lower(n: int, m_t: int, m_r: int) -> float:
    k_min, k_max = min(m_t, m_r), max(m_t, m_r)
    c = math.pi * (n - 1) / 4.0
    return n ** 2 * (c + k_min) * (c + k_max)


def gamma1_upper(n: int, m_t: int, m_r: int) -> float:
    k_min = min(m_t, m_r)
    return n ** 2 * ((m_t + m_r + (1.0 - 3.0 * k_min) / 2.0) * k_min * n ** 2 + 2.0 * k_min * n)


def gamma2_lower(n: int, m_t: int) -> float:
    return math.pi * n * (n - 1) / 4.0 + m_t * n


def gamma2_upper(n: int, m_t: int) -> float:
    return float(m_t * n ** 2)


def gamma3_lower(n: int) -> float:
    pi = math.pi
    return (
        n ** 4 * (n - 4) * (n - 6) / 512.0
        + (n - 1) * n * (n + 1) / 3.0
        * (pi / 8.0 * (n - 3) * (n - 4) + pi ** 2 / 64.0 * (n - 4) * (n - 6) + 2 * n - 1)
        + 2.0 * n ** 5 / 3.0
        + n ** 4 / 32.0 * (4.0 - 5.0 * pi)
    )


def gamma3_upper(n: int, m_t: int, m_r: int) -> float:
    k_min = min(m_t, m_r)
    return 2.0 * n ** 2 * (n ** 2 - 1) / 3.0 * ((m_t + m_r + (1.0 - 3.0 * k_min) / 2.0) * k_min * n ** 2 + 2.0 * k_min * n)


def gamma4_lower(n: int, m_t: int, m_r: int) -> float:
    return math.pi * m_r * n ** 4 / 16.0 + m_r * (m_t - 1) * n ** 2 / 2.0


def gamma4_upper(n: int, m_t: int, m_r: int) -> float:
    return m_t * m_r * (m_r ** 2 - 1) * n ** 2 / 3.0 + m_t * m_r * n ** 2 * (n ** 2 - 1) / 3.0


def _single_element_mean(quantity: str, m_t: int, m_r: int) -> float:
    # N = 1: the phase has no effect and D1 = 0, so the expectation is exact
    if quantity == GAMMA1:
        return float(m_t * m_r + min(m_t, m_r))
    if quantity == GAMMA2:
        return float(m_t)
    if quantity == GAMMA3:
        return 0.0
    return m_t * m_r * (m_r ** 2 - 1) / 3.0


def gamma_bounds(quantity: str, n: int, m_t: int, m_r: int) -> BoundPair:
    """Lower/upper bounds on the expected optimized ``quantity``.

    At ``n = 1`` some printed expressions do not bound the quantity (the
    ``Gamma3`` and ``Gamma4`` lower bounds are positive where the quantity is
    zero, the ``Gamma1`` upper bound falls below ``M_t M_r + K_min`` once
    ``K_min >= 6``); there the pair is widened to contain the exact
    single-element expectation.  All ``n >= 2`` values are the printed ones.
    """
    _check_counts(n, m_t, m_r)
    if quantity == GAMMA1:
        lo, hi = gamma1_lower(n, m_t, m_r), gamma1_upper(n, m_t, m_r)
    elif quantity == GAMMA2:
        lo, hi = gamma2_lower(n, m_t), gamma2_upper(n, m_t)
    elif quantity == GAMMA3:
        lo, hi = gamma3_lower(n), gamma3_upper(n, m_t, m_r)
    elif quantity == GAMMA4:
        lo, hi = gamma4_lower(n, m_t, m_r), gamma4_upper(n, m_t, m_r)
    else:
        raise AnalysisError(f"unknown quantity {quantity!r}")
    if n == 1:
        exact = _single_element_mean(quantity, m_t, m_r)
        lo, hi = min(lo, exact), max(hi, exact)
    return BoundPair(float(lo), float(hi), quantity)


def crossover_threshold(kind: str, l_d: float, m_t: int = 4, m_r: int = 4) -> float:
    """Element count above which the fully-passive SNR wins.

    ``LosSnr`` gives ``1/sqrt(L)``; ``RayleighSnr`` the sufficient condition
    obtained by comparing the fully-passive lower bound with the
    semi-passive upper bound.
    """
    if not 0.0 < l_d <= 1.0:
        raise AnalysisError("l_d must lie in (0, 1]")
    if kind == LOS_SNR:
        return 1.0 / math.sqrt(l_d)
    if kind == RAYLEIGH_SNR:
        k_min, k_max = min(m_t, m_r), max(m_t, m_r)
        s = m_t + m_r
        return 2.0 / math.pi * math.sqrt(s ** 2 + 4.0 * (m_t * m_r / l_d - k_min * k_max)) - 2.0 * s / math.pi + 1.0
    raise AnalysisError(f"unknown threshold kind {kind!r}")


def los_snr_closed_form(arch: str, n, p0: float, alpha2: float, l_d: float, m_t: int, m_r: int, sigma2: float):
    """Optimal LoS SNR: ``P0 |alpha|^2 L^2 M_t M_r N^4 / sigma^2`` (fully) or ``... L ... N^2`` (semi)."""
    from .metrics import FULLY, SEMI

    n = np.asarray(n, dtype=float)
    if arch == FULLY:
        return p0 * alpha2 * l_d ** 2 * m_t * m_r * n ** 4 / sigma2
    if arch == SEMI:
        return p0 * alpha2 * l_d * m_t * m_r * n ** 2 / sigma2
    raise AnalysisError(f"unknown architecture {arch!r}")


def fit_scaling_exponent(points: Sequence[Tuple[float, float]], min_n: float = 0.0) -> ScalingFit:
    """Least-squares slope of ``log10(value)`` against ``log10(n)``.

    Points with ``n < min_n`` are dropped first; pass ``4 * max(M_t, M_r)``
    to keep only the large-N regime.
    """
    pts = [p for p in points if p[0] >= min_n]
    if len(pts) < 4:
        raise AnalysisError("need at least 4 points")
    n = np.array([p[0] for p in pts], dtype=float)
    val = np.array([p[1] for p in pts], dtype=float)
    if np.any(val <= 0) or np.any(n <= 0):
        raise AnalysisError("n and values must be positive")
    if np.any(np.diff(n) <= 0):
        raise AnalysisError("n must be strictly increasing")
    x, y = np.log10(n), np.log10(val)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(float(slope), float(intercept), r2, (int(n[0]), int(n[-1])))


def find_crossover(sweep_fully, sweep_semi, lower_is_better: bool = False) -> Optional[int]:
    """Smallest grid ``n`` from which the fully-passive value stays strictly better.

    Sweeps are sequences of ``(n, value)``.  Use ``lower_is_better`` for CRB
    sweeps.  Returns ``None`` when the fully-passive curve never wins for good.
    """
    f = [(int(n), float(v)) for n, v in sweep_fully]
    s = [(int(n), float(v)) for n, v in sweep_semi]
    if len(f) < 2 or len(s) < 2:
        raise AnalysisError("crossover needs at least two grid points")
    if [n for n, _ in f] != [n for n, _ in s]:
        raise AnalysisError("fully/semi sweeps use different N grids")
    wins = [(vf < vs) if lower_is_better else (vf > vs) for (_, vf), (_, vs) in zip(f, s)]
    if not wins[-1]:
        return None
    k = len(wins) - 1
    while k > 0 and wins[k - 1]:
        k -= 1
    return f[k][0]


# expectations of the aligned constructions on unit-variance Rayleigh channels

def align_column_gain_mean(n: int) -> float:
    """``E|g_i^T Phi^T a|^2`` for the column-aligned pattern: ``N + pi N (N-1) / 4``."""
    return n + math.pi * n * (n - 1) / 4.0


def gamma2_align_column_mean(n: int, m_t: int) -> float:
    """``E ||G_t^T Phi^T a||^2`` for the column-aligned pattern."""
    return math.pi * n * (n - 1) / 4.0 + m_t * n


def gamma1_align_column_printed(n: int, m_t: int, m_r: int) -> float:
    """Product-of-means value used for the fully-passive SNR lower bound."""
    return gamma1_lower(n, m_t, m_r)


def split_align_product_printed(n: int) -> float:
    """Printed closed form for ``E|g_i^T a~|^2 |g_i^T D1 a~|^2`` under the split pattern."""
    pi = math.pi
    return (
        n ** 4 * (n - 4) * (n - 6) / 1024.0
        + (n - 1) * n * (n + 1) / 6.0
        * (pi / 8.0 * (n - 3) * (n - 4) + pi ** 2 / 64.0 * (n - 4) * (n - 6) + 2 * n - 1)
        + n ** 5 / 3.0
        + n ** 4 / 64.0 * (4.0 - 5.0 * pi)
    )


def derivative_align_printed(n: int, m_t: int, m_r: int) -> float:
    """Printed value of ``M_r E||G_t^T Phi^T D1 a||^2`` for the derivative-aligned pattern."""
    return gamma4_lower(n, m_t, m_r)


def derivative_align_exact(n: int, m_t: int, m_r: int) -> float:
    """Exact ``M_r E||G_t^T Phi^T D1 a||^2`` for the derivative-aligned pattern.

    The aligned column contributes ``(pi/4)(sum|d|)^2 + (1 - pi/4) sum d^2``
    and every other column ``sum d^2``.
    """
    d = derivative_weights(n)
    s1, s2 = float(np.sum(np.abs(d))), float(np.sum(d ** 2))
    return m_r * (math.pi / 4.0 * s1 ** 2 + (1.0 - math.pi / 4.0) * s2 + (m_t - 1) * s2)


def split_align_product_exact(n: int) -> float:
    """Exact ``E|X|^2 |Y|^2`` with ``X = g^T a~`` and ``Y = g^T D1 a~`` for the split pattern.

    On the first half (0-based ``n < N/2``) the terms are circular Gaussian,
    on the second half they are Rayleigh magnitudes; the moments follow from
    independence across elements.
    """
    d = derivative_weights(n)
    first = np.arange(n) < n / 2.0
    df, dg = d[first], d[~first]
    s_ss, s_tt, s_st = float(first.sum()), float(np.sum(df ** 2)), float(np.sum(df))
    a = np.ones(dg.size)
    b = dg
    alpha, beta = _R_MEAN * a.sum(), _R_MEAN * b.sum()
    saa, sbb, sab = float(np.sum(a * a)), float(np.sum(b * b)), float(np.sum(a * b))
    e_a2 = alpha ** 2 + _R_M2 * saa
    e_b2 = beta ** 2 + _R_M2 * sbb
    e_ab = alpha * beta + _R_M2 * sab
    e_uw2 = _R_M3 * float(np.sum(a * b * b))
    e_u2w = _R_M3 * float(np.sum(a * a * b))
    e_u2w2 = _R_M2 ** 2 * (saa * sbb + 2.0 * sab ** 2) + (_R_M4 - 3.0 * _R_M2 ** 2) * float(np.sum(a * a * b * b))
    e_a2b2 = (
        alpha ** 2 * beta ** 2 + alpha ** 2 * _R_M2 * sbb + 4.0 * alpha * beta * _R_M2 * sab
        + 2.0 * alpha * e_uw2 + beta ** 2 * _R_M2 * saa + 2.0 * beta * e_u2w + e_u2w2
    )
    return (s_ss * s_tt + s_st ** 2) + s_ss * e_b2 + e_a2 * s_tt + e_a2b2 + 2.0 * s_st * e_ab

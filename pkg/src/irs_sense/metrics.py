"""Sensing SNR, DoA CRB and detection probability for both IRS architectures.

Notation: ``p_t = G_t^T Phi^T a``, ``p_r = G_r Phi^T a`` and dotted versions
use the steering derivative.  ``x = p_t^H R^T p_t`` is the transmit beam
pattern toward the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special, stats

from .channel import ChannelRealization, steering_irs

FULLY = "FullyPassive"
SEMI = "SemiPassive"
ARCHS = (FULLY, SEMI)

# relative guard for Fisher denominators lost to cancellation
_REL_DEN_TOL = 1e-10
_ABS_DEN_TOL = 1e-18


class MetricValidationError(ValueError):
    pass


class UnboundedCrbError(ArithmeticError):
    """Fisher information about the DoA is (numerically) singular."""


@dataclass
class ReflectPattern:
    """Unit-modulus reflection coefficients (diagonal of Phi)."""

    v: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex).ravel()
        if self.v.size < 1:
            raise MetricValidationError("empty reflection pattern")
        if np.max(np.abs(np.abs(self.v) - 1.0)) > 1e-10:
            raise MetricValidationError("reflection coefficients must have unit modulus")

    @classmethod
    def from_phases(cls, phases) -> "ReflectPattern":
        return cls(np.exp(1j * np.asarray(phases, dtype=float)))

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.v)

    @property
    def n(self) -> int:
        return self.v.size


@dataclass
class TransmitCovariance:
    r: np.ndarray
    power_budget: float

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=complex)
        if self.r.ndim != 2 or self.r.shape[0] != self.r.shape[1]:
            raise MetricValidationError("covariance must be square")
        if self.power_budget <= 0:
            raise MetricValidationError("power budget must be positive")
        scale = max(self.power_budget, 1e-300)
        if np.max(np.abs(self.r - self.r.conj().T)) > 1e-9 * scale:
            raise MetricValidationError("covariance must be Hermitian")
        self.r = 0.5 * (self.r + self.r.conj().T)
        if np.linalg.eigvalsh(self.r)[0] < -1e-9 * scale:
            raise MetricValidationError("covariance must be PSD")
        if np.trace(self.r).real > self.power_budget * (1 + 1e-9):
            raise MetricValidationError("covariance exceeds the power budget")

    @property
    def m_t(self) -> int:
        return self.r.shape[0]


@dataclass(frozen=True)
class SensingSpec:
    sigma2: float
    t_symbols: int = 256
    p_fa: float = 1e-2

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise MetricValidationError("sigma2 must be positive")
        if int(self.t_symbols) < 1:
            raise MetricValidationError("t_symbols must be >= 1")
        if not 0.0 < self.p_fa < 1.0:
            raise MetricValidationError("p_fa must lie in (0, 1)")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def isotropic_covariance(m_t: int, p0: float) -> TransmitCovariance:
    return TransmitCovariance(np.eye(m_t, dtype=complex) * (p0 / m_t), p0)


def _check_arch(arch: str) -> None:
    if arch not in ARCHS:
        raise MetricValidationError(f"unknown architecture {arch!r}")


def _as_v(v) -> np.ndarray:
    return v.v if isinstance(v, ReflectPattern) else np.asarray(v, dtype=complex)


@dataclass
class EffectiveVectors:
    p_t: np.ndarray
    p_r: np.ndarray
    pd_t: np.ndarray
    pd_r: np.ndarray


def effective_vectors(v, ch: ChannelRealization) -> EffectiveVectors:
    vv = _as_v(v)
    if vv.size != ch.n:
        raise MetricValidationError(f"pattern length {vv.size} does not match N={ch.n}")
    a = ch.steering() * vv
    ad = ch.steering_dot() * vv
    return EffectiveVectors(
        p_t=ch.g_t.T @ a, p_r=ch.g_r @ a, pd_t=ch.g_t.T @ ad, pd_r=ch.g_r @ ad
    )


def _quad(u: np.ndarray, r: np.ndarray, w: np.ndarray) -> complex:
    # u^H R^T w
    return complex(np.vdot(u, r.T @ w))


def _check_r(r: TransmitCovariance, ch: ChannelRealization) -> np.ndarray:
    rr = r.r if isinstance(r, TransmitCovariance) else np.asarray(r, dtype=complex)
    if rr.shape != (ch.m_t, ch.m_t):
        raise MetricValidationError(f"covariance shape {rr.shape} does not match M_t={ch.m_t}")
    return rr


def transmit_pattern(r, v, ch: ChannelRealization) -> float:
    """``a^T Phi G_t R G_t^H Phi^H a^*``."""
    rr = _check_r(r, ch)
    ev = effective_vectors(v, ch)
    return max(_quad(ev.p_t, rr, ev.p_t).real, 0.0)


def snr(arch: str, r, v, ch: ChannelRealization, spec: SensingSpec) -> float:
    """Per-symbol sensing SNR after matched filtering."""
    _check_arch(arch)
    rr = _check_r(r, ch)
    ev = effective_vectors(v, ch)
    x = max(_quad(ev.p_t, rr, ev.p_t).real, 0.0)
    recv = float(np.vdot(ev.p_r, ev.p_r).real) if arch == FULLY else float(ch.m_r)
    return abs(ch.alpha) ** 2 * recv * x / spec.sigma2


def mrt_covariance(v, ch: ChannelRealization, p0: float) -> TransmitCovariance:
    """Rank-one covariance matched to the effective BS-target channel."""
    ev = effective_vectors(v, ch)
    nrm2 = float(np.vdot(ev.p_t, ev.p_t).real)
    if nrm2 <= 0.0:
        raise MetricValidationError("effective transmit channel is zero")
    r = p0 * np.outer(ev.p_t.conj(), ev.p_t) / nrm2
    r = 0.5 * (r + r.conj().T)
    return TransmitCovariance(r, p0)


def _crb_terms(arch: str, rr: np.ndarray, ev: EffectiveVectors, ch: ChannelRealization):
    x = _quad(ev.p_t, rr, ev.p_t).real
    y = _quad(ev.pd_t, rr, ev.pd_t).real
    z = _quad(ev.p_t, rr, ev.pd_t)
    if arch == FULLY:
        rn = float(np.vdot(ev.p_r, ev.p_r).real)
        rdn = float(np.vdot(ev.pd_r, ev.pd_r).real)
        cross = abs(np.vdot(ev.pd_r, ev.p_r)) ** 2
    else:
        b = ch.sensor_steering()
        bd = ch.sensor_steering_dot()
        rn = float(np.vdot(b, b).real)
        rdn = float(np.vdot(bd, bd).real)
        cross = abs(np.vdot(bd, b)) ** 2
    return x, y, z, rn, rdn, cross


def _crb_from_den(den: float, ref: float, ch: ChannelRealization, spec: SensingSpec) -> float:
    if not np.isfinite(den) or den <= _ABS_DEN_TOL or den <= _REL_DEN_TOL * ref:
        raise UnboundedCrbError(
            "DoA Fisher information is singular; the CRB is unbounded "
            "(needs rank(G_t) >= 2, rank(G_r) >= 2 or more sensors)"
        )
    return spec.sigma2 / (2.0 * spec.t_symbols * abs(ch.alpha) ** 2) / den


def crb_denominator(arch: str, r, v, ch: ChannelRealization, approx: bool = False) -> float:
    _check_arch(arch)
    rr = _check_r(r, ch)
    ev = effective_vectors(v, ch)
    x, y, z, rn, rdn, cross = _crb_terms(arch, rr, ev, ch)
    if approx:
        return x * rdn + rn * y
    if x <= 0.0 or rn <= 0.0:
        return 0.0
    return x * (rdn - cross / rn) + rn * (y - abs(z) ** 2 / x)


def crb(arch: str, r, v, ch: ChannelRealization, spec: SensingSpec) -> float:
    """Exact DoA CRB including the cross-coupling corrections."""
    _check_arch(arch)
    rr = _check_r(r, ch)
    ev = effective_vectors(v, ch)
    x, y, z, rn, rdn, cross = _crb_terms(arch, rr, ev, ch)
    ref = x * rdn + rn * y
    if x <= 0.0 or rn <= 0.0:
        raise UnboundedCrbError("zero signal power toward the target")
    den = x * (rdn - cross / rn) + rn * (y - abs(z) ** 2 / x)
    return _crb_from_den(den, ref, ch, spec)


def crb_approx(arch: str, r, v, ch: ChannelRealization, spec: SensingSpec) -> float:
    """CRB with the cross-coupling corrections dropped (never above :func:`crb`)."""
    _check_arch(arch)
    rr = _check_r(r, ch)
    ev = effective_vectors(v, ch)
    x, y, _z, rn, rdn, _cross = _crb_terms(arch, rr, ev, ch)
    den = x * rdn + rn * y
    return _crb_from_den(den, den, ch, spec)


def marcum_q1(a: float, b: float) -> float:
    """First-order Marcum Q-function via its Poisson-mixture series.

    ``Q1(a, b) = sum_k Pois(k; a^2/2) * P(Pois(b^2/2) <= k)``; the sum runs
    over the Poisson bulk where the omitted mass is below 1e-14.
    """
    a = float(a)
    b = float(b)
    if a < 0 or b < 0:
        raise MetricValidationError("Marcum Q arguments must be nonnegative")
    if b == 0.0:
        return 1.0
    lam_a = 0.5 * a * a
    lam_b = 0.5 * b * b
    if lam_a == 0.0:
        return math.exp(-lam_b)
    lo = int(stats.poisson.ppf(1e-16, lam_a))
    hi = int(stats.poisson.isf(1e-16, lam_a)) + 1
    k = np.arange(max(lo, 0), hi + 1)
    w = stats.poisson.pmf(k, lam_a)
    cdf_b = special.gammaincc(k + 1.0, lam_b)  # P(Pois(lam_b) <= k)
    val = float(np.sum(w * cdf_b))
    return min(max(val, 0.0), 1.0)


def detection_threshold(p_fa: float) -> float:
    """Threshold argument ``sqrt(2 ln(1/p_fa))`` of the Marcum function."""
    return math.sqrt(2.0 * math.log(1.0 / p_fa))


def detection_from_snr(t_snr: float, p_fa: float) -> float:
    """Detection probability for an aggregate SNR ``T * SNR``."""
    return marcum_q1(math.sqrt(2.0 * max(t_snr, 0.0)), detection_threshold(p_fa))


def detection_probability(arch: str, r, v, ch: ChannelRealization, spec: SensingSpec) -> float:
    s = snr(arch, r, v, ch, spec)
    return detection_from_snr(spec.t_symbols * s, spec.p_fa)


def _mean_matrix(arch: str, theta: float, alpha: complex, v: np.ndarray, ch: ChannelRealization) -> np.ndarray:
    # noise-free response matrix M with y(t) = M x(t)
    geom = ch.array_geometry()
    a = steering_irs(theta, ch.n, geom) * v
    p_t = ch.g_t.T @ a
    if arch == FULLY:
        left = ch.g_r @ a
    else:
        left = steering_irs(theta, ch.m_r, geom)
    return alpha * np.outer(left, p_t)


def fisher_numeric(arch: str, r, v, ch: ChannelRealization, spec: SensingSpec, fd_step: float = 1e-6) -> np.ndarray:
    """Fisher information for ``(theta, Re alpha, Im alpha)`` by finite differences.

    Uses ``F_ij = (2T / sigma^2) Re tr(dM_j R dM_i^H)`` for the model
    ``y(t) = M x(t) + n(t)`` with sample covariance of ``x`` equal to ``R``.
    """
    _check_arch(arch)
    if fd_step <= 0:
        raise MetricValidationError("fd_step must be positive")
    rr = _check_r(r, ch)
    vv = _as_v(v)
    th, al = ch.theta, complex(ch.alpha)
    h_a = fd_step * max(abs(al), 1e-300)
    derivs = [
        (_mean_matrix(arch, th + fd_step, al, vv, ch) - _mean_matrix(arch, th - fd_step, al, vv, ch)) / (2 * fd_step),
        (_mean_matrix(arch, th, al + h_a, vv, ch) - _mean_matrix(arch, th, al - h_a, vv, ch)) / (2 * h_a),
        (_mean_matrix(arch, th, al + 1j * h_a, vv, ch) - _mean_matrix(arch, th, al - 1j * h_a, vv, ch)) / (2 * h_a),
    ]
    f = np.empty((3, 3))
    scale = 2.0 * spec.t_symbols / spec.sigma2
    for i in range(3):
        for j in range(3):
            f[i, j] = scale * np.real(np.trace(derivs[j] @ rr @ derivs[i].conj().T))
    return f


def crb_from_fisher(f: np.ndarray) -> float:
    """Inverse of the Schur complement of the DoA entry."""
    f_aa = f[1:, 1:]
    f_ta = f[0, 1:]
    schur = f[0, 0] - f_ta @ np.linalg.solve(f_aa, f_ta)
    return 1.0 / schur


def _orthogonal_symbols(r: np.ndarray, t: int) -> np.ndarray:
    # X with X X^H / T = R exactly, built from DFT rows
    m = r.shape[0]
    if t < m:
        raise MetricValidationError("need T >= M_t for an exact sample covariance")
    w, q = np.linalg.eigh(r)
    root = (q * np.sqrt(np.clip(w, 0, None))) @ q.conj().T
    k = np.arange(t)
    dft = np.exp(-2j * np.pi * np.outer(np.arange(m), k) / t)
    return root @ dft


def simulate_glrt(
    arch: str,
    r,
    v,
    ch: ChannelRealization,
    spec: SensingSpec,
    trials: int = 10000,
    seed: int = 0,
    target_present: bool = True,
    chunk: int = 500,
) -> float:
    """Empirical GLRT decision rate with the DoA known.

    Decides "present" when ``|u^H y|^2 / ||u||^2 > sigma^2 ln(1/p_fa)`` where
    ``u`` stacks the noise-free echo over T symbols.
    """
    _check_arch(arch)
    rr = _check_r(r, ch)
    vv = _as_v(v)
    x = _orthogonal_symbols(rr, spec.t_symbols)
    u = (_mean_matrix(arch, ch.theta, 1.0, vv, ch) @ x).ravel()
    unorm = float(np.linalg.norm(u))
    if unorm == 0.0:
        raise MetricValidationError("zero echo; the detector is undefined")
    uhat = u / unorm
    thresh = spec.sigma2 * math.log(1.0 / spec.p_fa)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    sig = ch.alpha * u if target_present else np.zeros_like(u)
    while done < trials:
        k = min(chunk, trials - done)
        noise = math.sqrt(spec.sigma2 / 2.0) * (
            rng.standard_normal((k, u.size)) + 1j * rng.standard_normal((k, u.size))
        )
        y = noise + sig[None, :]
        stat = np.abs(y @ uhat.conj()) ** 2
        hits += int(np.count_nonzero(stat > thresh))
        done += k
    return hits / trials

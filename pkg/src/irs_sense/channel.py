"""Array geometry, steering vectors, path loss and BS-IRS channel draws.

Angle convention: each ULA's broadside points at its peer terminal (the BS
array faces the IRS, the IRS faces the BS).  Angles are signed,
counter-clockwise from broadside, and must lie in (-pi/2, pi/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

LOS = "LoS"
RICIAN = "Rician"
RAYLEIGH = "Rayleigh"
CHANNEL_KINDS = (LOS, RICIAN, RAYLEIGH)

BS_IRS = "BsIrs"
IRS_TARGET = "IrsTarget"


class ChannelValidationError(ValueError):
    pass


@dataclass(frozen=True)
class ArrayGeometry:
    """Element counts and spacing of the BS arrays and the IRS.

    ``spacing`` defaults to half a wavelength.
    """

    M_t: int = 4
    M_r: int = 4
    N: int = 32
    wavelength: float = 1.0
    spacing: Optional[float] = None

    def __post_init__(self):
        for name in ("M_t", "M_r", "N"):
            if int(getattr(self, name)) < 1:
                raise ChannelValidationError(f"{name} must be >= 1")
        if self.wavelength <= 0:
            raise ChannelValidationError("wavelength must be positive")
        if self.spacing is None:
            object.__setattr__(self, "spacing", self.wavelength / 2.0)
        if self.spacing <= 0:
            raise ChannelValidationError("spacing must be positive")

    @property
    def spacing_ratio(self) -> float:
        """d / lambda."""
        return self.spacing / self.wavelength

    def with_n(self, n: int) -> "ArrayGeometry":
        return ArrayGeometry(self.M_t, self.M_r, int(n), self.wavelength, self.spacing)


@dataclass(frozen=True)
class ScenarioGeometry:
    bs_pos: Tuple[float, float]
    irs_pos: Tuple[float, float]
    target_pos: Tuple[float, float]
    theta: float
    theta1: float
    theta2: float
    d_bi: float
    d_it: float

    def __post_init__(self):
        for name in ("theta", "theta1", "theta2"):
            ang = getattr(self, name)
            if not -math.pi / 2 < ang < math.pi / 2:
                raise ChannelValidationError(f"{name}={ang} outside (-pi/2, pi/2)")
        if self.d_bi <= 0 or self.d_it <= 0:
            raise ChannelValidationError("distances must be positive")


@dataclass(frozen=True)
class PathLossModel:
    """``L(d) = 10^(k0_db/10) * (d/d0)^(-exponent)``."""

    k0_db: float = -30.0
    d0: float = 1.0
    exponent_bs_irs: float = 2.2
    exponent_irs_target: float = 2.0

    def __post_init__(self):
        if self.d0 <= 0:
            raise ChannelValidationError("d0 must be positive")
        if self.exponent_bs_irs <= 0 or self.exponent_irs_target <= 0:
            raise ChannelValidationError("path-loss exponents must be positive")


@dataclass
class ChannelRealization:
    """One draw of the BS-IRS link and the target coefficient.

    ``g_t`` is N x M_t, ``g_r`` is M_r x N.  ``path_gain`` is the BS-IRS
    large-scale gain L(d), so ``g_t / sqrt(path_gain)`` is the normalized
    small-scale matrix.
    """

    g_t: np.ndarray
    g_r: np.ndarray
    alpha: complex
    kind: str
    seed_used: int
    path_gain: float = 1.0
    k_factor: Optional[float] = None
    theta: float = 0.0
    geom: Optional[ArrayGeometry] = None

    @property
    def n(self) -> int:
        return self.g_t.shape[0]

    @property
    def m_t(self) -> int:
        return self.g_t.shape[1]

    @property
    def m_r(self) -> int:
        return self.g_r.shape[0]

    def array_geometry(self) -> ArrayGeometry:
        if self.geom is not None:
            return self.geom
        return ArrayGeometry(self.m_t, self.m_r, self.n)

    def steering(self) -> np.ndarray:
        """IRS steering vector a(theta) toward the target."""
        return steering_irs(self.theta, self.n, self.array_geometry())

    def steering_dot(self) -> np.ndarray:
        return steering_derivative(self.theta, self.n, self.array_geometry())

    def sensor_steering(self) -> np.ndarray:
        """Steering vector b(theta) of the IRS receive sensors."""
        return steering_irs(self.theta, self.m_r, self.array_geometry())

    def sensor_steering_dot(self) -> np.ndarray:
        return steering_derivative(self.theta, self.m_r, self.array_geometry())

    def with_matrices(self, g_t=None, g_r=None, alpha=None) -> "ChannelRealization":
        return replace(
            self,
            g_t=self.g_t if g_t is None else g_t,
            g_r=self.g_r if g_r is None else g_r,
            alpha=self.alpha if alpha is None else alpha,
        )

    @property
    def g_t_hat(self) -> np.ndarray:
        return self.g_t / math.sqrt(self.path_gain)

    @property
    def g_r_hat(self) -> np.ndarray:
        return self.g_r / math.sqrt(self.path_gain)


def _phase_index(n: int) -> np.ndarray:
    # 2k - 1 - n for k = 1..n
    return 2.0 * np.arange(1, n + 1) - 1.0 - n


def steering_irs(theta: float, n: int, geom: ArrayGeometry) -> np.ndarray:
    """Centered ULA response ``exp(j pi (2k-1-n) d sin(theta) / lambda)``."""
    if n < 1:
        raise ChannelValidationError("n must be >= 1")
    return np.exp(1j * math.pi * _phase_index(n) * geom.spacing_ratio * math.sin(theta))


def steering_derivative(theta: float, n: int, geom: ArrayGeometry) -> np.ndarray:
    """Derivative of :func:`steering_irs` with respect to ``theta``."""
    a = steering_irs(theta, n, geom)
    return (1j * math.pi * geom.spacing_ratio * math.cos(theta)) * _phase_index(n) * a


def derivative_weights(n: int) -> np.ndarray:
    """Diagonal of ``diag(1-n, 3-n, ..., n-1)``."""
    return _phase_index(n)


def path_loss(d: float, model: PathLossModel, link: str = BS_IRS) -> float:
    if d <= 0:
        raise ChannelValidationError("distance must be positive")
    if link == BS_IRS:
        exponent = model.exponent_bs_irs
    elif link == IRS_TARGET:
        exponent = model.exponent_irs_target
    else:
        raise ChannelValidationError(f"unknown link {link!r}")
    return 10.0 ** (model.k0_db / 10.0) * (d / model.d0) ** (-exponent)


def _signed_angle(u: np.ndarray, v: np.ndarray) -> float:
    # counter-clockwise angle from u to v
    cross = u[0] * v[1] - u[1] * v[0]
    dot = u[0] * v[0] + u[1] * v[1]
    return math.atan2(cross, dot)


def geometry_from_positions(bs, irs, target) -> ScenarioGeometry:
    """Distances and angles for a planar layout.

    The BS broadside points at the IRS and the IRS broadside points back at
    the BS, so ``theta1 = theta2 = 0`` and ``theta`` is the signed angle at
    the IRS between the BS direction and the target direction.
    """
    bs, irs, target = (np.asarray(p, dtype=float).reshape(2) for p in (bs, irs, target))
    d_bi = float(np.linalg.norm(irs - bs))
    d_it = float(np.linalg.norm(target - irs))
    d_bt = float(np.linalg.norm(target - bs))
    if min(d_bi, d_it, d_bt) <= 0.0:
        raise ChannelValidationError("positions must be pairwise distinct")
    bs_broadside = (irs - bs) / d_bi
    irs_broadside = (bs - irs) / d_bi
    theta1 = _signed_angle(bs_broadside, (irs - bs) / d_bi)
    theta2 = _signed_angle(irs_broadside, (bs - irs) / d_bi)
    theta = _signed_angle(irs_broadside, (target - irs) / d_it)
    return ScenarioGeometry(
        bs_pos=tuple(bs), irs_pos=tuple(irs), target_pos=tuple(target),
        theta=theta, theta1=theta1, theta2=theta2, d_bi=d_bi, d_it=d_it,
    )


def _cscg(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def target_coefficient(scen: ScenarioGeometry, model: PathLossModel, rcs: float = 1.0, seed=0) -> complex:
    """Round-trip target coefficient with ``|alpha|^2 = rcs * L(d_it)^2``.

    The phase is uniform and drawn from ``seed`` (an int, SeedSequence or
    Generator).
    """
    if rcs <= 0:
        raise ChannelValidationError("rcs must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mag = math.sqrt(rcs) * path_loss(scen.d_it, model, IRS_TARGET)
    phase = 2.0 * math.pi * (1.0 - rng.random())  # (0, 2pi]
    return complex(mag * np.exp(1j * phase))


def los_factors(geom: ArrayGeometry, scen: ScenarioGeometry):
    """Normalized rank-one LoS pair ``(a(theta2) c(theta1)^T, b(theta1) a(theta2)^T)``."""
    a2 = steering_irs(scen.theta2, geom.N, geom)
    c1 = steering_irs(scen.theta1, geom.M_t, geom)
    b1 = steering_irs(scen.theta1, geom.M_r, geom)
    return np.outer(a2, c1), np.outer(b1, a2)


def _rayleigh_pair(rng: np.random.Generator, geom: ArrayGeometry):
    # common part shared by both directions, individual parts for the excess antennas
    k_min = min(geom.M_t, geom.M_r)
    common = _cscg(rng, (geom.N, k_min))
    g_t = np.concatenate([common, _cscg(rng, (geom.N, geom.M_t - k_min))], axis=1)
    g_r = np.concatenate([common.T, _cscg(rng, (geom.M_r - k_min, geom.N))], axis=0)
    return g_t, g_r


def gen_channel(
    kind: str,
    geom: ArrayGeometry,
    scen: ScenarioGeometry,
    model: PathLossModel,
    rcs: float = 1.0,
    seed: int = 0,
    k_factor: float = 1.0,
) -> ChannelRealization:
    """Draw one BS-IRS channel pair and target coefficient.

    Parameters
    ----------
    kind : {"LoS", "Rician", "Rayleigh"}
    seed : int
        Split into independent streams for the fading matrices and the
        target phase.
    k_factor : float
        Rician factor, used only for ``kind="Rician"``.
    """
    if kind not in CHANNEL_KINDS:
        raise ChannelValidationError(f"unknown channel kind {kind!r}")
    if kind == RICIAN and k_factor < 0:
        raise ChannelValidationError("k_factor must be nonnegative")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed) & ((1 << 64) - 1))
    ch_ss, alpha_ss = ss.spawn(2)
    rng = np.random.default_rng(ch_ss)
    gain = path_loss(scen.d_bi, model, BS_IRS)
    if kind == LOS:
        g_t_hat, g_r_hat = los_factors(geom, scen)
    elif kind == RAYLEIGH:
        g_t_hat, g_r_hat = _rayleigh_pair(rng, geom)
    else:
        los_t, los_r = los_factors(geom, scen)
        nlos_t, nlos_r = _rayleigh_pair(rng, geom)
        w_los = math.sqrt(k_factor / (1.0 + k_factor))
        w_nlos = math.sqrt(1.0 / (1.0 + k_factor))
        g_t_hat = w_los * los_t + w_nlos * nlos_t
        g_r_hat = w_los * los_r + w_nlos * nlos_r
    alpha = target_coefficient(scen, model, rcs, np.random.default_rng(alpha_ss))
    seed_used = int(seed) if not isinstance(seed, np.random.SeedSequence) else int(seed.entropy)
    return ChannelRealization(
        g_t=math.sqrt(gain) * g_t_hat,
        g_r=math.sqrt(gain) * g_r_hat,
        alpha=alpha,
        kind=kind,
        seed_used=seed_used,
        path_gain=gain,
        k_factor=k_factor if kind == RICIAN else None,
        theta=scen.theta,
        geom=geom,
    )

"""Reflection-pattern objectives as sums of products of quadratic forms.

``f(v) = sum_k w_k q_{a_k}(v) q_{b_k}(v) + sum_l d_l q_l(v)`` with
``q_i(v) = ||H_i v||^2``.  This covers the SNR problems, the isotropic CRB
quantities and the CRB pattern step for a fixed covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .. import kernels
from ..channel import ChannelRealization, derivative_weights
from ..metrics import FULLY, SEMI


@dataclass
class QuadObjective:
    blocks: List[np.ndarray]
    products: List[Tuple[int, int, float]] = field(default_factory=list)
    linear: List[Tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        self.blocks = [np.atleast_2d(np.asarray(b, dtype=complex)) for b in self.blocks]
        n = {b.shape[1] for b in self.blocks}
        if len(n) != 1:
            raise ValueError("all blocks must have the same number of columns")
        nb = len(self.blocks)
        for a, b, _w in self.products:
            if not (0 <= a < nb and 0 <= b < nb):
                raise ValueError("product index out of range")
        for l, _d in self.linear:
            if not 0 <= l < nb:
                raise ValueError("linear index out of range")

    @property
    def n(self) -> int:
        return self.blocks[0].shape[1]

    def kernel_args(self):
        ht = np.ascontiguousarray(np.concatenate(self.blocks, axis=0).T)
        sizes = [b.shape[0] for b in self.blocks]
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        pa = np.array([p[0] for p in self.products], dtype=np.int64)
        pb = np.array([p[1] for p in self.products], dtype=np.int64)
        pw = np.array([p[2] for p in self.products], dtype=float)
        li = np.array([l[0] for l in self.linear], dtype=np.int64)
        lw = np.array([l[1] for l in self.linear], dtype=float)
        return ht, offsets, pa, pb, pw, li, lw

    def quad_values(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        return np.array([float(np.vdot(b @ v, b @ v).real) for b in self.blocks])

    def value(self, v) -> float:
        q = self.quad_values(v)
        return float(sum(w * q[a] * q[b] for a, b, w in self.products) + sum(d * q[l] for l, d in self.linear))

    def values_batch(self, vs: np.ndarray) -> np.ndarray:
        """Objective for each row of ``vs`` (shape ``S x N``)."""
        q = np.stack([np.sum(np.abs(vs @ b.T) ** 2, axis=1) for b in self.blocks], axis=1)
        f = np.zeros(vs.shape[0])
        for a, b, w in self.products:
            f += w * q[:, a] * q[:, b]
        for l, d in self.linear:
            f += d * q[:, l]
        return f

    def lifted(self) -> List[np.ndarray]:
        """``A_i = H_i^H H_i`` so that ``q_i = v^H A_i v = tr(A_i V)``."""
        return [b.conj().T @ b for b in self.blocks]

    def value_lifted(self, V: np.ndarray) -> float:
        t = [float(np.real(np.sum(a.T * V))) for a in self.lifted()]
        return float(sum(w * t[a] * t[b] for a, b, w in self.products) + sum(d * t[l] for l, d in self.linear))

    def sum_power_bound(self) -> float:
        """Upper bound over ``||v||^2 = N`` (each form bounded separately)."""
        n = self.n
        lam = [n * float(np.linalg.eigvalsh(a)[-1]) for a in self.lifted()]
        return float(sum(w * lam[a] * lam[b] for a, b, w in self.products) + sum(d * lam[l] for l, d in self.linear))

    def ascend(self, v0, tol: float = 1e-8, max_sweeps: int = 200):
        ht, offs, pa, pb, pw, li, lw = self.kernel_args()
        return kernels.coordinate_ascent(ht, offs, pa, pb, pw, li, lw, np.asarray(v0, dtype=complex), tol, max_sweeps)


def snr_objective(arch: str, ch: ChannelRealization, normalized: bool = True) -> QuadObjective:
    """Pattern-dependent factor of the MRT sensing SNR.

    Fully-passive: ``||G_t^T Phi^T a||^2 ||G_r Phi^T a||^2``; semi-passive:
    ``||G_t^T Phi^T a||^2``.  With ``normalized`` the path gain is removed.
    """
    g_t = ch.g_t_hat if normalized else ch.g_t
    g_r = ch.g_r_hat if normalized else ch.g_r
    a = ch.steering()
    h_t = g_t.T * a[None, :]
    if arch == FULLY:
        h_r = g_r * a[None, :]
        return QuadObjective([h_t, h_r], products=[(0, 1, 1.0)])
    if arch == SEMI:
        return QuadObjective([h_t], linear=[(0, 1.0)])
    raise ValueError(f"unknown architecture {arch!r}")


def isotropic_crb_objective(arch: str, ch: ChannelRealization) -> QuadObjective:
    """Pattern-dependent denominator of the isotropic approximate CRB (uses ``D1 a``)."""
    a = ch.steering()
    d1a = derivative_weights(ch.n) * a
    g_t, g_r = ch.g_t_hat, ch.g_r_hat
    t_a = g_t.T * a[None, :]
    t_d = g_t.T * d1a[None, :]
    if arch == FULLY:
        r_a = g_r * a[None, :]
        r_d = g_r * d1a[None, :]
        return QuadObjective([t_a, r_d, r_a, t_d], products=[(0, 1, 1.0), (2, 3, 1.0)])
    if arch == SEMI:
        m_r = ch.m_r
        d2b2 = m_r * (m_r ** 2 - 1) / 3.0
        return QuadObjective([t_a, t_d], linear=[(0, d2b2), (1, float(m_r))])
    raise ValueError(f"unknown architecture {arch!r}")


def _covariance_root(r: np.ndarray) -> np.ndarray:
    # L with R^T = L L^H
    w, q = np.linalg.eigh(r.T)
    return q * np.sqrt(np.clip(w, 0.0, None))[None, :]


def crb_pattern_objective(arch: str, ch: ChannelRealization, r: np.ndarray) -> QuadObjective:
    """Approximate CRB denominator for a fixed covariance, as a pattern objective.

    Fully: ``x ||pd_r||^2 + ||p_r||^2 y``; semi: ``x ||b_dot||^2 + M_r y``,
    with ``x = p_t^H R^T p_t`` and ``y = pd_t^H R^T pd_t``.
    """
    a = ch.steering()
    ad = ch.steering_dot()
    lh = _covariance_root(np.asarray(r)).conj().T
    x_blk = lh @ (ch.g_t.T * a[None, :])
    y_blk = lh @ (ch.g_t.T * ad[None, :])
    if arch == FULLY:
        pr_blk = ch.g_r * a[None, :]
        prd_blk = ch.g_r * ad[None, :]
        return QuadObjective([x_blk, prd_blk, pr_blk, y_blk], products=[(0, 1, 1.0), (2, 3, 1.0)])
    if arch == SEMI:
        bd = ch.sensor_steering_dot()
        return QuadObjective([x_blk, y_blk], linear=[(0, float(np.vdot(bd, bd).real)), (1, float(ch.m_r))])
    raise ValueError(f"unknown architecture {arch!r}")

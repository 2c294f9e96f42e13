"""Joint transmit/reflective beamforming designs for SNR and CRB."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..channel import ArrayGeometry, ChannelRealization
from ..conic import OPTIMAL, solve_hermitian_sdp
from ..metrics import (
    FULLY,
    SEMI,
    ReflectPattern,
    SensingSpec,
    TransmitCovariance,
    UnboundedCrbError,
    crb,
    crb_denominator,
    effective_vectors,
    isotropic_covariance,
    mrt_covariance,
)
from .. import kernels
from .objectives import QuadObjective, _covariance_root, crb_pattern_objective, snr_objective
from .patterns import ALIGN_COLUMN, DERIVATIVE_ALIGN, appendix_aligned_pattern
from .sdr import herm_im, herm_re, sdr_sca

logger = logging.getLogger(__name__)

SDR_SCA = "SdrSca"
COORDINATE_ASCENT = "CoordinateAscent"
AUTO = "auto"
BACKENDS = (SDR_SCA, COORDINATE_ASCENT, AUTO)
AUTO_SDR_MAX_N = 64

_BLEND_WEIGHTS = (0.0,) + tuple(10.0 ** np.arange(-6.0, 0.5, 0.5))

SNR_OBJECTIVE = "Snr"
CRB_OBJECTIVE = "Crb"


@dataclass
class OptimizerOptions:
    sca_max_iter: int = 30
    sca_rel_tol: float = 1e-4
    randomization_samples: int = 500
    backend: str = AUTO
    inner_sdp_tol: float = 1e-7
    alt_opt_max_rounds: int = 20
    seed: int = 0
    ca_max_sweeps: int = 500
    compute_bound: bool = True
    # CoordinateAscent SNR designs restart from the aligned pattern of every BS-IRS column
    ca_multi_start: bool = True

    def __post_init__(self):
        for name in ("sca_max_iter", "randomization_samples", "alt_opt_max_rounds", "ca_max_sweeps"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("sca_rel_tol", "inner_sdp_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")

    def resolved_backend(self, n: int) -> str:
        if self.backend == AUTO:
            return SDR_SCA if n <= AUTO_SDR_MAX_N else COORDINATE_ASCENT
        return self.backend


@dataclass
class BeamformingResult:
    v: ReflectPattern
    r: Optional[TransmitCovariance] = None
    objective_trace: List[float] = field(default_factory=list)
    relaxation_bound: Optional[float] = None
    status: str = OPTIMAL
    objective: float = float("nan")
    crb_trace: List[float] = field(default_factory=list)


def _initial_pattern(ch: ChannelRealization) -> np.ndarray:
    return appendix_aligned_pattern(ALIGN_COLUMN, ch.g_t_hat, 0, ch.theta, ch.array_geometry()).v


def optimize_pattern(obj: QuadObjective, v0: np.ndarray, opts: OptimizerOptions, n: Optional[int] = None):
    """Run the configured backend on a pattern objective.

    Returns ``(v, value, trace, bound, status)``.
    """
    backend = opts.resolved_backend(n or obj.n)
    if backend == SDR_SCA:
        res = sdr_sca(
            obj, v0, max_iter=opts.sca_max_iter, rel_tol=opts.sca_rel_tol,
            samples=opts.randomization_samples, sdp_tol=opts.inner_sdp_tol, seed=opts.seed,
            with_bound=opts.compute_bound,
        )
        return res.v, res.objective, list(res.trace), res.relaxation_bound, res.status
    v, trace = obj.ascend(v0, tol=opts.sca_rel_tol, max_sweeps=opts.ca_max_sweeps)
    bound = obj.sum_power_bound() if opts.compute_bound else None
    return v, float(trace[-1]), [float(t) for t in trace], bound, OPTIMAL


def maximize_snr(arch: str, ch: ChannelRealization, theta: Optional[float] = None,
                 geom: Optional[ArrayGeometry] = None, opts: Optional[OptimizerOptions] = None,
                 p0: float = 1.0, v0: Optional[np.ndarray] = None) -> BeamformingResult:
    """Reflection pattern maximizing the MRT sensing SNR, with the MRT covariance.

    The objective is normalized by the path gain; ``objective`` reports
    ``||G_t^T Phi^T a||^2 ||G_r Phi^T a||^2`` (fully) or
    ``||G_t^T Phi^T a||^2`` (semi) on normalized channels.
    """
    opts = opts or OptimizerOptions()
    if theta is not None and abs(theta - ch.theta) > 1e-12:
        raise ValueError("theta does not match the channel realization")
    if geom is not None and geom.N != ch.n:
        raise ValueError("geometry does not match the channel realization")
    obj = snr_objective(arch, ch)
    if v0 is not None:
        starts = [np.asarray(v0, dtype=complex)]
    elif opts.ca_multi_start and opts.resolved_backend(ch.n) == COORDINATE_ASCENT:
        geom = ch.array_geometry()
        starts = [appendix_aligned_pattern(ALIGN_COLUMN, ch.g_t_hat, c, ch.theta, geom).v
                  for c in range(ch.g_t_hat.shape[1])]
    else:
        starts = [_initial_pattern(ch)]
    best = None
    for start in starts:
        out = optimize_pattern(obj, start, opts, ch.n)
        if best is None or out[1] > best[1]:
            best = out
    v, value, trace, bound, status = best
    pattern = ReflectPattern(v)
    return BeamformingResult(
        v=pattern, r=mrt_covariance(pattern, ch, p0), objective_trace=trace,
        relaxation_bound=bound, status=status, objective=value,
    )


def _crb_weights(arch: str, ch: ChannelRealization, v: np.ndarray):
    # coefficients A, B of the denominator A x + B (y - |z|^2 / x)
    ev = effective_vectors(v, ch)
    if arch == FULLY:
        rn = float(np.vdot(ev.p_r, ev.p_r).real)
        rdn = float(np.vdot(ev.pd_r, ev.pd_r).real)
        cross = abs(np.vdot(ev.pd_r, ev.p_r)) ** 2
        coef_a = rdn - (cross / rn if rn > 0 else 0.0)
        coef_b = rn
    else:
        b = ch.sensor_steering()
        bd = ch.sensor_steering_dot()
        coef_a = float(np.vdot(bd, bd).real) - abs(np.vdot(bd, b)) ** 2 / float(np.vdot(b, b).real)
        coef_b = float(np.vdot(b, b).real)
    return ev, max(coef_a, 0.0), coef_b


def r_step(arch: str, ch: ChannelRealization, v, p0: float, tol: float = 1e-7) -> TransmitCovariance:
    """Covariance minimizing the exact CRB for a fixed pattern.

    Maximizes ``A x + B (y - |z|^2 / x)`` over ``tr(R) <= P0`` through the
    Schur block ``[[y - t, conj(z)], [z, x]] >= 0``, restricted to the span of
    ``p_t`` and ``pd_t`` (components outside it only waste power).
    """
    vv = v.v if isinstance(v, ReflectPattern) else np.asarray(v, dtype=complex)
    ev, coef_a, coef_b = _crb_weights(arch, ch, vv)
    p, pd = ev.p_t, ev.pd_t
    np_, npd = float(np.linalg.norm(p)), float(np.linalg.norm(pd))
    if np_ == 0.0:
        raise UnboundedCrbError("zero effective transmit channel")
    # S = R^T so that x = p^H S p; restrict S = Q S~ Q^H to span{p, pd}
    basis = np.stack([p / np_] + ([pd / npd] if npd > 0 else []), axis=1)
    q, rr = np.linalg.qr(basis)
    keep = np.abs(np.diag(rr)) > 1e-10 * np.max(np.abs(np.diag(rr)))
    q = q[:, keep]
    r = q.shape[1]
    pt = q.conj().T @ p / np_
    pdt = q.conj().T @ pd / npd if npd > 0 else np.zeros(r, dtype=complex)
    size = r + 2
    wx = coef_a * np_ ** 2
    wy = coef_b * npd ** 2
    scale = max(wx, wy, 1e-300)
    wx, wy = wx / scale, wy / scale
    # x, y, z are in units of ||p||^2, ||pd||^2 and ||p|| ||pd||
    def emb(m_small: np.ndarray) -> np.ndarray:
        m = np.zeros((size, size), dtype=complex)
        m[:r, :r] = m_small
        return m

    mx = emb(np.outer(pt, pt.conj()))
    my = emb(np.outer(pdt, pdt.conj()))
    mz = np.outer(pdt, pt.conj())  # tr(S~ mz) = pt^H S~ pdt = z
    c = wx * mx + wy * my
    c[r, r] -= wy  # - B * Y11
    eqs = []
    m = -mx.copy()
    m[r + 1, r + 1] += 1.0
    eqs.append((m, 0.0))
    m = herm_re(size, r + 1, r) - emb(0.5 * (mz + mz.conj().T))
    eqs.append((m, 0.0))
    m = herm_im(size, r + 1, r) - emb((mz - mz.conj().T) / 2j)
    eqs.append((m, 0.0))
    tr_s = emb(np.eye(r, dtype=complex))
    ineqs = [(tr_s, 1.0)]
    res = solve_hermitian_sdp(c, eqs, ineqs, sense="maximize", tol=tol)
    s_small = res.Z[:r, :r]
    s_small = 0.5 * (s_small + s_small.conj().T)
    w, u = np.linalg.eigh(s_small)
    s_small = (u * np.clip(w, 0.0, None)) @ u.conj().T
    tr = float(np.trace(s_small).real)
    if tr > 1.0:
        s_small /= tr
    # R = S^T = conj(S) for Hermitian S
    r_mat = p0 * np.conj(q @ s_small @ q.conj().T)
    r_mat = 0.5 * (r_mat + r_mat.conj().T)
    # the supremum can sit on x -> 0, where the Fisher matrix is singular;
    # the denominator is concave in R, so a small isotropic blend loses little
    r_iso = np.eye(ch.m_t, dtype=complex) * (p0 / ch.m_t)
    best, best_den = r_mat, -math.inf
    for eta in _BLEND_WEIGHTS:
        cand = (1.0 - eta) * r_mat + eta * r_iso
        den = crb_denominator(arch, cand, vv, ch)
        if den > best_den * (1.0 + 1e-12) + 0.0:
            best, best_den = cand, den
    return TransmitCovariance(best, p0)


def _best_covariance(arch, ch, v, p0, spec, tol):
    # R-step with a guard against inexact inner solves
    cands = []
    try:
        cands.append(r_step(arch, ch, v, p0, tol))
    except (UnboundedCrbError, np.linalg.LinAlgError):
        pass
    cands.append(isotropic_covariance(ch.m_t, p0))
    best, best_val = None, math.inf
    for rc in cands:
        try:
            val = crb(arch, rc, v, ch, spec)
        except UnboundedCrbError:
            continue
        if val < best_val:
            best, best_val = rc, val
    if best is None:
        raise UnboundedCrbError("CRB unbounded for every candidate covariance; increase N or the channel rank")
    return best, best_val


def transmit_only_design(arch: str, ch: ChannelRealization, v_fixed, objective: str, p0: float,
                         spec: Optional[SensingSpec] = None, opts: Optional[OptimizerOptions] = None) -> TransmitCovariance:
    """Optimal covariance for a fixed reflection pattern (MRT or CRB R-step)."""
    opts = opts or OptimizerOptions()
    if objective == SNR_OBJECTIVE:
        return mrt_covariance(v_fixed, ch, p0)
    if objective == CRB_OBJECTIVE:
        if spec is None:
            raise ValueError("spec is required for the CRB objective")
        r, _ = _best_covariance(arch, ch, v_fixed, p0, spec, opts.inner_sdp_tol)
        return r
    raise ValueError(f"unknown objective {objective!r}")


def refine_pattern_exact(arch: str, ch: ChannelRealization, v, r, rel_tol: float = 1e-4, max_sweeps: int = 20) -> np.ndarray:
    """Cyclic per-phase search on the exact Fisher denominator for a fixed covariance.

    Each phase takes the best point of a 64-point grid and then of a finer
    grid around it; a phase only changes when the denominator increases.
    """
    v = np.array(v.v if isinstance(v, ReflectPattern) else v, dtype=complex)
    r_mat = r.r if isinstance(r, TransmitCovariance) else np.asarray(r)
    lh = _covariance_root(r_mat).conj().T
    a, ad = ch.steering(), ch.steering_dot()
    t_blk = lh @ (ch.g_t.T * a[None, :])
    td_blk = lh @ (ch.g_t.T * ad[None, :])
    if arch == FULLY:
        r_blk, rd_blk = ch.g_r * a[None, :], ch.g_r * ad[None, :]
    else:
        r_blk = rd_blk = np.zeros((0, ch.n), dtype=complex)
    b, bd = ch.sensor_steering(), ch.sensor_steering_dot()
    b2, bd2 = float(np.vdot(b, b).real), float(np.vdot(bd, bd).real)
    v_new, _den = kernels.refine_exact(t_blk, td_blk, r_blk, rd_blk, v, arch == FULLY, b2, bd2, rel_tol, max_sweeps)
    return np.asarray(v_new)


def _covariance_for(arch, ch, v, p0, spec, opts, optimize_r):
    """Best covariance for ``v`` and its exact CRB (``inf`` when unbounded)."""
    try:
        if optimize_r:
            return _best_covariance(arch, ch, v, p0, spec, opts.inner_sdp_tol)
        r_iso = isotropic_covariance(ch.m_t, p0)
        return r_iso, crb(arch, r_iso, v, ch, spec)
    except UnboundedCrbError:
        return None, math.inf


def minimize_crb(arch: str, ch: ChannelRealization, geom: Optional[ArrayGeometry], spec: SensingSpec, p0: float,
                 opts: Optional[OptimizerOptions] = None, v0: Optional[np.ndarray] = None,
                 optimize_r: bool = True) -> BeamformingResult:
    """Alternating covariance / pattern optimization of the exact CRB.

    Each round maximizes the approximate Fisher denominator over the pattern
    for the current covariance, refines the pattern on the exact denominator
    (:func:`refine_pattern_exact`), recomputes the covariance for the new
    pattern, and keeps the pair only if the exact CRB decreases.  Without
    ``v0`` the start is the better of the column- and derivative-aligned
    patterns.  With ``optimize_r=False`` the covariance stays isotropic
    (reflective beamforming only).

    ``crb_trace`` is nonincreasing; ``objective_trace`` holds the matching
    Fisher denominators.
    """
    opts = opts or OptimizerOptions()
    if geom is not None and geom.N != ch.n:
        raise ValueError("geometry does not match the channel realization")
    if v0 is not None:
        starts = [np.asarray(v0, dtype=complex)]
    else:
        g = ch.array_geometry()
        starts = [appendix_aligned_pattern(k, ch.g_t_hat, 0, ch.theta, g).v for k in (ALIGN_COLUMN, DERIVATIVE_ALIGN)]
    v, r_cur, crb_cur = None, None, math.inf
    for cand in starts:
        r_c, c = _covariance_for(arch, ch, cand, p0, spec, opts, optimize_r)
        if c < crb_cur:
            v, r_cur, crb_cur = cand, r_c, c
    if v is None:
        raise UnboundedCrbError(
            "CRB is unbounded at initialization; increase N or use a channel with rank >= 2"
        )
    trace = [crb_cur]
    status = OPTIMAL
    for _round in range(opts.alt_opt_max_rounds):
        obj = crb_pattern_objective(arch, ch, r_cur.r)
        v_new, _val, _tr, _bound, st = optimize_pattern(obj, v, opts, ch.n)
        if st != OPTIMAL:
            status = st
        v_new = refine_pattern_exact(arch, ch, v_new, r_cur, opts.sca_rel_tol, opts.ca_max_sweeps)
        r_new, c_new = _covariance_for(arch, ch, v_new, p0, spec, opts, optimize_r)
        if c_new >= crb_cur:
            break
        improvement = (crb_cur - c_new) / crb_cur
        v, r_cur, crb_cur = v_new, r_new, c_new
        trace.append(crb_cur)
        if improvement <= opts.sca_rel_tol:
            break
    scale = spec.sigma2 / (2.0 * spec.t_symbols * abs(ch.alpha) ** 2)
    return BeamformingResult(
        v=ReflectPattern(v), r=r_cur, objective_trace=[scale / c for c in trace],
        status=status, objective=trace[-1], crb_trace=trace,
    )


def reflective_only_design(arch: str, ch: ChannelRealization, objective: str, p0: float,
                           spec: Optional[SensingSpec] = None, opts: Optional[OptimizerOptions] = None) -> BeamformingResult:
    """Pattern optimized under the isotropic covariance ``(P0/M_t) I``."""
    opts = opts or OptimizerOptions()
    r_iso = isotropic_covariance(ch.m_t, p0)
    if objective == SNR_OBJECTIVE:
        # isotropic transmission scales the MRT objective by 1/M_t only
        res = maximize_snr(arch, ch, opts=opts, p0=p0)
        res.r = r_iso
        return res
    if objective == CRB_OBJECTIVE:
        if spec is None:
            raise ValueError("spec is required for the CRB objective")
        return minimize_crb(arch, ch, None, spec, p0, opts, optimize_r=False)
    raise ValueError(f"unknown objective {objective!r}")

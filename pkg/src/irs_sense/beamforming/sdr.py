"""Semidefinite relaxation with successive convex approximation.

The lifted problem is ``max f(V)`` over Hermitian PSD ``V`` with unit
diagonal.  Each product ``x y`` is split as ``(x+y)^2/4 - (x-y)^2/4``; the
convex square is linearized at the current point and the concave one is
handled exactly through a 2x2 epigraph block ``[[u, x-y], [x-y, 4]] >= 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..conic import OPTIMAL, diagonal_relaxation_bound, solve_hermitian_sdp
from .objectives import QuadObjective

logger = logging.getLogger(__name__)


def _unit(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1.0
    return e


def herm_re(n: int, i: int, j: int) -> np.ndarray:
    """Hermitian ``M`` with ``tr(M Z) = Re Z[i, j]``."""
    return 0.5 * (_unit(n, i, j) + _unit(n, j, i))


def herm_im(n: int, i: int, j: int) -> np.ndarray:
    """Hermitian ``M`` with ``tr(M Z) = Im Z[i, j]``."""
    return (_unit(n, j, i) - _unit(n, i, j)) / 2j


@dataclass
class SdrScaResult:
    V: np.ndarray
    v: np.ndarray
    objective: float
    trace: List[float] = field(default_factory=list)
    relaxation_bound: float = float("nan")
    lifted_objective: float = float("nan")
    status: str = OPTIMAL


def _normalized(obj: QuadObjective):
    mats = obj.lifted()
    scales = []
    out = []
    for a in mats:
        t = float(np.trace(a).real)
        t = t if t > 0 else 1.0
        scales.append(t)
        out.append(a / t)
    prods = [(a, b, w * scales[a] * scales[b]) for a, b, w in obj.products]
    lins = [(l, d * scales[l]) for l, d in obj.linear]
    wmax = max([abs(p[2]) for p in prods] + [abs(l[1]) for l in lins] + [1e-300])
    prods = [(a, b, w / wmax) for a, b, w in prods]
    lins = [(l, d / wmax) for l, d in lins]
    return out, prods, lins, wmax


def _diag_constraints(size: int, n: int):
    return [(_unit(size, i, i), 1.0) for i in range(n)]


def _lifted_value(mats, prods, lins, V) -> float:
    t = [float(np.real(np.sum(a.T * V))) for a in mats]
    return float(sum(w * t[a] * t[b] for a, b, w in prods) + sum(d * t[l] for l, d in lins))


def max_linear_relaxation(C: np.ndarray, tol: float = 1e-6, max_iter: int = 20000):
    """Solve ``max tr(C V)`` with unit diagonal; returns ``(V, certified_bound)``."""
    n = C.shape[0]
    C = 0.5 * (C + C.conj().T)
    res = solve_hermitian_sdp(C, _diag_constraints(n, n), sense="maximize", tol=tol, max_iter=max_iter)
    y = res.solution.y if res.solution.y is not None else np.zeros(n)
    bound = diagonal_relaxation_bound(C, y)
    return res.Z, bound, res


def relaxation_bound(obj: QuadObjective, point: Optional[np.ndarray] = None, tol: float = 1e-5) -> float:
    """Certified upper bound on ``max f(v)`` over unit-modulus ``v``.

    Products are bounded with ``x y <= (beta x + y / beta)^2 / 4`` (``beta``
    balanced at ``point`` when given) and each resulting linear relaxation is
    bounded through its dual certificate.
    """
    mats = obj.lifted()
    n = obj.n
    bound = 0.0
    q0 = obj.quad_values(point) if point is not None else None
    lin_c = np.zeros((n, n), dtype=complex)
    for l, d in obj.linear:
        lin_c += d * mats[l]
    if obj.linear:
        _V, b_lin, _ = max_linear_relaxation(lin_c, tol=tol)
        bound += b_lin
    for a, b, w in obj.products:
        if q0 is not None and q0[a] > 0 and q0[b] > 0:
            beta = math.sqrt(q0[b] / q0[a])
        else:
            ta, tb = np.trace(mats[a]).real, np.trace(mats[b]).real
            beta = math.sqrt(tb / ta) if ta > 0 and tb > 0 else 1.0
        c = beta * mats[a] + mats[b] / beta
        scale = float(np.trace(c).real) or 1.0
        _V, b_lin, _ = max_linear_relaxation(c / scale, tol=tol)
        bound += w * (scale * b_lin) ** 2 / 4.0
    return float(bound)


def gaussian_randomization(obj: QuadObjective, V: np.ndarray, samples: int, rng: np.random.Generator):
    """Best of ``samples`` candidates ``exp(j arg r)`` with ``r ~ CN(0, V)`` (first best kept)."""
    n = V.shape[0]
    w, q = np.linalg.eigh(0.5 * (V + V.conj().T))
    root = q * np.sqrt(np.clip(w, 0.0, None))[None, :]
    xi = (rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))) / math.sqrt(2.0)
    r = xi @ root.T
    cands = np.exp(1j * np.angle(r))
    vals = obj.values_batch(cands)
    k = int(np.argmax(vals))
    return cands[k], float(vals[k])


def sdr_sca(
    obj: QuadObjective,
    v0: Optional[np.ndarray] = None,
    max_iter: int = 30,
    rel_tol: float = 1e-4,
    samples: int = 500,
    sdp_tol: float = 1e-7,
    seed: int = 0,
    with_bound: bool = True,
) -> SdrScaResult:
    """Maximize a :class:`QuadObjective` by SDR, SCA and Gaussian randomization.

    ``trace`` holds the lifted objective after each accepted SCA step.
    """
    n = obj.n
    mats, prods, lins, wmax = _normalized(obj)
    p = len(prods)
    size = n + 2 * p
    rng = np.random.default_rng(seed)
    if v0 is None:
        v0 = np.ones(n, dtype=complex)
    V = np.outer(v0, np.conj(v0))
    f_cur = _lifted_value(mats, prods, lins, V)
    trace = [f_cur * wmax]
    status = OPTIMAL

    eqs = _diag_constraints(size, n)
    for k, (a, b, _w) in enumerate(prods):
        i = n + 2 * k
        eqs.append((_unit(size, i + 1, i + 1), 4.0))
        m = herm_re(size, i, i + 1)
        m[:n, :n] += -mats[a] + mats[b]
        eqs.append((m, 0.0))

    z_prev = None
    iters = max_iter if p else 1
    for _it in range(iters):
        c = np.zeros((size, size), dtype=complex)
        t = [float(np.real(np.sum(m.T * V))) for m in mats]
        for k, (a, b, w) in enumerate(prods):
            s0 = t[a] + t[b]
            c[:n, :n] += 0.5 * w * s0 * (mats[a] + mats[b])
            i = n + 2 * k
            c[i, i] = -w
        for l, d in lins:
            c[:n, :n] += d * mats[l]
        if z_prev is None:
            z_prev = np.zeros((size, size), dtype=complex)
            z_prev[:n, :n] = V
            tv = [float(np.real(np.sum(m.T * V))) for m in mats]
            for k, (a, b, _w) in enumerate(prods):
                i = n + 2 * k
                s = tv[a] - tv[b]
                z_prev[i, i] = s * s / 4.0
                z_prev[i, i + 1] = z_prev[i + 1, i] = s
                z_prev[i + 1, i + 1] = 4.0
        res = solve_hermitian_sdp(c, eqs, sense="maximize", tol=sdp_tol, warm_start=z_prev)
        if res.solution.status != OPTIMAL:
            status = res.solution.status
        V_new = res.Z[:n, :n]
        f_new = _lifted_value(mats, prods, lins, V_new)
        if f_new < f_cur:
            # inexact inner solve; keep the last accepted point
            break
        improvement = (f_new - f_cur) / max(abs(f_new), 1e-300)
        V, f_cur = V_new, f_new
        z_prev = res.Z
        trace.append(f_cur * wmax)
        if improvement < rel_tol:
            break

    v_best, f_best = gaussian_randomization(obj, V, samples, rng)
    f_init = obj.value(v0)
    if f_init > f_best:
        # never return something worse than the starting pattern
        v_best, f_best = np.asarray(v0, dtype=complex), f_init
    bound = relaxation_bound(obj, point=v_best) if with_bound else float("nan")
    return SdrScaResult(
        V=V, v=v_best, objective=f_best, trace=trace, relaxation_bound=bound,
        lifted_objective=f_cur * wmax, status=status,
    )

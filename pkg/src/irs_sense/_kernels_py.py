"""Pure-Python coordinate ascent over unit-modulus phases.

Objective ``f(v) = sum_k w_k q_{a_k} q_{b_k} + sum_l d_l q_l`` with
``q_i = ||H_i v||^2``.  The rows of all ``H_i`` are stacked in ``HT`` (stored
transposed, ``N x K``) with block boundaries in ``offsets``.  Along one phase
the objective is ``A0 + 2 Re(A1 e^{jp}) + 2 Re(A2 e^{2jp})``; each update
maximizes it exactly and is kept only if it does not decrease ``f``.
"""

from __future__ import annotations

import math

import numpy as np

_GRID = 16
_NEWTON_ITERS = 30


def _g(a1: complex, a2: complex, phi: float) -> float:
    z = complex(math.cos(phi), math.sin(phi))
    return 2.0 * (a1 * z).real + 2.0 * (a2 * z * z).real


def best_phase(a1: complex, a2: complex, phi_cur: float) -> float:
    """Maximizer of ``2 Re(a1 e^{jp}) + 2 Re(a2 e^{2jp})`` (no worse than ``phi_cur``)."""
    if abs(a2) <= 1e-14 * abs(a1):
        if a1 == 0:
            return phi_cur
        return -math.atan2(a1.imag, a1.real)
    vals = []
    for k in range(_GRID):
        p = 2.0 * math.pi * k / _GRID
        vals.append((_g(a1, a2, p), p))
    vals.sort(key=lambda t: -t[0])
    best_val = _g(a1, a2, phi_cur)
    best_phi = phi_cur
    for start in (vals[0][1], vals[1][1]):
        p = start
        for _ in range(_NEWTON_ITERS):
            z = complex(math.cos(p), math.sin(p))
            u1 = a1 * z
            u2 = a2 * z * z
            d1 = -2.0 * u1.imag - 4.0 * u2.imag
            d2 = -2.0 * u1.real - 8.0 * u2.real
            if d2 >= 0.0:
                break
            step = d1 / d2
            p -= step
            if abs(step) < 1e-14:
                break
        for cand in (p, start):
            val = _g(a1, a2, cand)
            if val > best_val:
                best_val, best_phi = val, cand
    return best_phi


def objective(HT, offsets, prod_a, prod_b, prod_w, lin_idx, lin_w, v) -> float:
    w = HT.T @ v
    q = np.array([np.vdot(w[offsets[i]:offsets[i + 1]], w[offsets[i]:offsets[i + 1]]).real
                  for i in range(len(offsets) - 1)])
    f = 0.0
    for a, b, wt in zip(prod_a, prod_b, prod_w):
        f += wt * q[a] * q[b]
    for l, d in zip(lin_idx, lin_w):
        f += d * q[l]
    return float(f)


def coordinate_ascent(HT, offsets, prod_a, prod_b, prod_w, lin_idx, lin_w, v, tol=1e-8, max_sweeps=200):
    """Cyclic exact phase updates.

    Returns
    -------
    v : ndarray
        Updated pattern (a copy).
    trace : ndarray
        Objective after the initial point and after each sweep.
    """
    HT = np.ascontiguousarray(HT, dtype=complex)
    v = np.array(v, dtype=complex)
    offsets = np.asarray(offsets, dtype=np.int64)
    nq = len(offsets) - 1
    n = HT.shape[0]
    prods = list(zip(np.asarray(prod_a, dtype=int), np.asarray(prod_b, dtype=int), np.asarray(prod_w, dtype=float)))
    lins = list(zip(np.asarray(lin_idx, dtype=int), np.asarray(lin_w, dtype=float)))
    args = (HT, offsets, [p[0] for p in prods], [p[1] for p in prods], [p[2] for p in prods],
            [l[0] for l in lins], [l[1] for l in lins])
    f = objective(*args, v)
    trace = [f]
    c = np.zeros(nq)
    s = np.zeros(nq, dtype=complex)
    for _sweep in range(max_sweeps):
        v_prev = v.copy()
        w = HT.T @ v
        for k in range(n):
            h = HT[k]
            w_rest = w - h * v[k]
            for i in range(nq):
                lo, hi = offsets[i], offsets[i + 1]
                wr = w_rest[lo:hi]
                hh = h[lo:hi]
                c[i] = np.vdot(wr, wr).real + np.vdot(hh, hh).real
                s[i] = np.vdot(wr, hh)
            a1 = 0j
            a2 = 0j
            for a, b, wt in prods:
                a1 += wt * (c[a] * s[b] + c[b] * s[a])
                a2 += wt * s[a] * s[b]
            for l, d in lins:
                a1 += d * s[l]
            phi_cur = math.atan2(v[k].imag, v[k].real)
            phi = best_phase(a1, a2, phi_cur)
            if phi != phi_cur:
                v[k] = complex(math.cos(phi), math.sin(phi))
                w = w_rest + h * v[k]
        f_new = objective(*args, v)
        if f_new < f:
            # roundoff near convergence; keep the previous sweep
            v = v_prev
            break
        trace.append(f_new)
        done = f_new - f <= tol * abs(f_new)
        f = f_new
        if done:
            break
    return v, np.array(trace)


_COARSE = 64
_FINE = 17
_MARGIN = 1e-12  # relative gain needed to move a phase; keeps ties rounding-proof


def _bilinear(r1, c1, r2, c2):
    # (r1 + c1 e)^H (r2 + c2 e) = k0 + k1 e + k2 conj(e)
    return (complex(np.vdot(r1, r2) + np.vdot(c1, c2)), complex(np.vdot(r1, c2)), complex(np.vdot(c1, r2)))


def _herm(k, e):
    return k[0].real + 2.0 * (k[1] * e).real


def _den_grid(fully, e, kx, ky, kz, krn, krd, kcr, b2, bd2):
    x = _herm(kx, e)
    y = _herm(ky, e)
    z = kz[0] + kz[1] * e + kz[2] * np.conj(e)
    with np.errstate(divide="ignore", invalid="ignore"):
        if fully:
            rn = _herm(krn, e)
            rdn = _herm(krd, e)
            cr = kcr[0] + kcr[1] * e + kcr[2] * np.conj(e)
            den = x * (rdn - np.abs(cr) ** 2 / rn) + rn * (y - np.abs(z) ** 2 / x)
            bad = (x <= 0.0) | (rn <= 0.0)
        else:
            den = x * bd2 + b2 * (y - np.abs(z) ** 2 / x)
            bad = x <= 0.0
    den = np.where(bad | ~np.isfinite(den), -np.inf, den)
    return den


def refine_exact(T, Td, Rr, Rd, v, fully, b2, bd2, rel_tol=1e-4, max_sweeps=20):
    """Cyclic per-phase grid search on the exact Fisher denominator.

    ``T`` and ``Td`` hold the covariance-weighted transmit blocks (the
    quadratic forms become plain inner products), ``Rr``/``Rd`` the receive
    blocks (ignored unless ``fully``).  Each phase takes the best of a
    64-point grid and then of 17 points spanning one coarse cell around it;
    a phase changes only when the denominator increases by more than a
    relative ``1e-12``.
    Returns ``(v, den)``.
    """
    T = np.asarray(T, dtype=complex)
    Td = np.asarray(Td, dtype=complex)
    Rr = np.asarray(Rr, dtype=complex)
    Rd = np.asarray(Rd, dtype=complex)
    v = np.array(v, dtype=complex)
    n_el = v.size
    coarse = np.exp(2j * np.pi * np.arange(_COARSE) / _COARSE)
    offs = -np.pi / _COARSE + np.arange(_FINE) * (2.0 * np.pi / _COARSE) / (_FINE - 1)
    fine_rot = np.exp(1j * offs)
    t, td, pr, pd = T @ v, Td @ v, Rr @ v, Rd @ v
    zero = np.zeros(0, dtype=complex)

    def coeffs(n, t_r, td_r, pr_r, pd_r):
        ct, ctd = T[:, n], Td[:, n]
        kx = _bilinear(t_r, ct, t_r, ct)
        ky = _bilinear(td_r, ctd, td_r, ctd)
        kz = _bilinear(t_r, ct, td_r, ctd)
        if fully:
            cr, cd = Rr[:, n], Rd[:, n]
            krn = _bilinear(pr_r, cr, pr_r, cr)
            krd = _bilinear(pd_r, cd, pd_r, cd)
            kcr = _bilinear(pd_r, cd, pr_r, cr)
        else:
            krn = krd = kcr = (0j, 0j, 0j)
        return kx, ky, kz, krn, krd, kcr

    k0 = coeffs(0, t - T[:, 0] * v[0], td - Td[:, 0] * v[0],
                pr - Rr[:, 0] * v[0] if fully else zero, pd - Rd[:, 0] * v[0] if fully else zero)
    cur = float(_den_grid(fully, np.array([v[0]]), *k0, b2, bd2)[0])
    for _sweep in range(max_sweeps):
        start = cur
        for n in range(n_el):
            t_r = t - T[:, n] * v[n]
            td_r = td - Td[:, n] * v[n]
            pr_r = pr - Rr[:, n] * v[n] if fully else zero
            pd_r = pd - Rd[:, n] * v[n] if fully else zero
            ks = coeffs(n, t_r, td_r, pr_r, pd_r)
            d = _den_grid(fully, coarse, *ks, b2, bd2)
            k = int(np.argmax(d))
            if not d[k] > cur + _MARGIN * abs(cur):
                continue
            cur, e_best = float(d[k]), coarse[k]
            grid = e_best * fine_rot
            d = _den_grid(fully, grid, *ks, b2, bd2)
            k = int(np.argmax(d))
            if d[k] > cur + _MARGIN * abs(cur):
                cur, e_best = float(d[k]), grid[k]
            v[n] = e_best
            t = t_r + T[:, n] * e_best
            td = td_r + Td[:, n] * e_best
            if fully:
                pr = pr_r + Rr[:, n] * e_best
                pd = pd_r + Rd[:, n] * e_best
        if cur - start <= rel_tol * abs(cur):
            break
    return v, cur

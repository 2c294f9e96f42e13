# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled coordinate ascent over unit-modulus phases.

Same algorithm and call signature as ``_kernels_py.coordinate_ascent``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, atan2, fabs, M_PI, INFINITY, isfinite
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    GRID = 16
    NEWTON_ITERS = 30

ctypedef double complex cplx


cdef inline double _g(cplx a1, cplx a2, double phi) nogil:
    cdef cplx z = cos(phi) + 1j * sin(phi)
    return 2.0 * (a1 * z).real + 2.0 * (a2 * z * z).real


cdef double _best_phase(cplx a1, cplx a2, double phi_cur) nogil:
    cdef double vals[GRID]
    cdef int k, it, best_k = 0, second_k = -1, si
    cdef double p, start, step, d1, d2, val, best_val, best_phi
    cdef cplx z, u1, u2
    cdef double abs_a1 = (a1.real * a1.real + a1.imag * a1.imag) ** 0.5
    cdef double abs_a2 = (a2.real * a2.real + a2.imag * a2.imag) ** 0.5
    if abs_a2 <= 1e-14 * abs_a1:
        if abs_a1 == 0.0:
            return phi_cur
        return -atan2(a1.imag, a1.real)
    for k in range(GRID):
        vals[k] = _g(a1, a2, 2.0 * M_PI * k / GRID)
    for k in range(1, GRID):
        if vals[k] > vals[best_k]:
            best_k = k
    for k in range(GRID):
        if k != best_k and (second_k < 0 or vals[k] > vals[second_k]):
            second_k = k
    best_val = _g(a1, a2, phi_cur)
    best_phi = phi_cur
    for si in range(2):
        start = 2.0 * M_PI * (best_k if si == 0 else second_k) / GRID
        p = start
        for it in range(NEWTON_ITERS):
            z = cos(p) + 1j * sin(p)
            u1 = a1 * z
            u2 = a2 * z * z
            d1 = -2.0 * u1.imag - 4.0 * u2.imag
            d2 = -2.0 * u1.real - 8.0 * u2.real
            if d2 >= 0.0:
                break
            step = d1 / d2
            p -= step
            if fabs(step) < 1e-14:
                break
        val = _g(a1, a2, p)
        if val > best_val:
            best_val = val
            best_phi = p
        val = _g(a1, a2, start)
        if val > best_val:
            best_val = val
            best_phi = start
    return best_phi


def best_phase(a1, a2, double phi_cur):
    return _best_phase(a1, a2, phi_cur)


cdef double _objective(const cplx[:, ::1] HT, const cnp.int64_t[::1] offsets,
                       const cnp.int64_t[::1] prod_a, const cnp.int64_t[::1] prod_b,
                       const double[::1] prod_w, const cnp.int64_t[::1] lin_idx,
                       const double[::1] lin_w, cplx[::1] v, double* q) nogil:
    cdef Py_ssize_t n = HT.shape[0], K = HT.shape[1]
    cdef Py_ssize_t nq = offsets.shape[0] - 1
    cdef Py_ssize_t i, k, j
    cdef cplx acc
    cdef double f = 0.0
    for i in range(nq):
        q[i] = 0.0
        for k in range(offsets[i], offsets[i + 1]):
            acc = 0.0
            for j in range(n):
                acc = acc + HT[j, k] * v[j]
            q[i] += acc.real * acc.real + acc.imag * acc.imag
    for i in range(prod_a.shape[0]):
        f += prod_w[i] * q[prod_a[i]] * q[prod_b[i]]
    for i in range(lin_idx.shape[0]):
        f += lin_w[i] * q[lin_idx[i]]
    return f


def objective(HT, offsets, prod_a, prod_b, prod_w, lin_idx, lin_w, v):
    HT_c = np.ascontiguousarray(HT, dtype=np.complex128)
    offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef double* q = <double*> malloc((offs.shape[0]) * sizeof(double))
    try:
        return _objective(HT_c, offs,
                          np.ascontiguousarray(prod_a, dtype=np.int64),
                          np.ascontiguousarray(prod_b, dtype=np.int64),
                          np.ascontiguousarray(prod_w, dtype=np.float64),
                          np.ascontiguousarray(lin_idx, dtype=np.int64),
                          np.ascontiguousarray(lin_w, dtype=np.float64),
                          np.ascontiguousarray(v, dtype=np.complex128), q)
    finally:
        free(q)


def coordinate_ascent(HT, offsets, prod_a, prod_b, prod_w, lin_idx, lin_w, v,
                      double tol=1e-8, int max_sweeps=200):
    """Cyclic exact phase updates; returns ``(v, trace)``."""
    cdef cplx[:, ::1] H = np.ascontiguousarray(HT, dtype=np.complex128)
    cdef cnp.int64_t[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef cnp.int64_t[::1] pa = np.ascontiguousarray(prod_a, dtype=np.int64)
    cdef cnp.int64_t[::1] pb = np.ascontiguousarray(prod_b, dtype=np.int64)
    cdef double[::1] pw = np.ascontiguousarray(prod_w, dtype=np.float64)
    cdef cnp.int64_t[::1] li = np.ascontiguousarray(lin_idx, dtype=np.int64)
    cdef double[::1] lw = np.ascontiguousarray(lin_w, dtype=np.float64)
    v_arr = np.array(v, dtype=np.complex128)
    cdef cplx[::1] vv = v_arr
    v_prev_arr = v_arr.copy()
    cdef cplx[::1] vp = v_prev_arr
    cdef Py_ssize_t n = H.shape[0], K = H.shape[1]
    cdef Py_ssize_t nq = offs.shape[0] - 1
    w_arr = np.zeros(K, dtype=np.complex128)
    cdef cplx[::1] w = w_arr
    c_arr = np.zeros(nq, dtype=np.float64)
    cdef double[::1] c = c_arr
    s_arr = np.zeros(nq, dtype=np.complex128)
    cdef cplx[::1] s = s_arr
    cdef double* q = <double*> malloc((nq + 1) * sizeof(double))
    cdef Py_ssize_t sweep, k, i, j, m
    cdef cplx wr, h, a1, a2, vnew, dv
    cdef double f, f_new, phi_cur, phi
    trace = []
    try:
        with nogil:
            f = _objective(H, offs, pa, pb, pw, li, lw, vv, q)
        trace.append(f)
        for sweep in range(max_sweeps):
            with nogil:
                for j in range(n):
                    vp[j] = vv[j]
                for m in range(K):
                    w[m] = 0.0
                    for j in range(n):
                        w[m] = w[m] + H[j, m] * vv[j]
                for k in range(n):
                    for i in range(nq):
                        c[i] = 0.0
                        s[i] = 0.0
                        for m in range(offs[i], offs[i + 1]):
                            h = H[k, m]
                            wr = w[m] - h * vv[k]
                            c[i] += wr.real * wr.real + wr.imag * wr.imag + h.real * h.real + h.imag * h.imag
                            # conj(wr) * h
                            s[i] = s[i] + (wr.real - 1j * wr.imag) * h
                    a1 = 0.0
                    a2 = 0.0
                    for i in range(pa.shape[0]):
                        a1 = a1 + pw[i] * (c[pa[i]] * s[pb[i]] + c[pb[i]] * s[pa[i]])
                        a2 = a2 + pw[i] * s[pa[i]] * s[pb[i]]
                    for i in range(li.shape[0]):
                        a1 = a1 + lw[i] * s[li[i]]
                    phi_cur = atan2(vv[k].imag, vv[k].real)
                    phi = _best_phase(a1, a2, phi_cur)
                    if phi != phi_cur:
                        vnew = cos(phi) + 1j * sin(phi)
                        dv = vnew - vv[k]
                        for m in range(K):
                            w[m] = w[m] + H[k, m] * dv
                        vv[k] = vnew
                f_new = _objective(H, offs, pa, pb, pw, li, lw, vv, q)
            if f_new < f:
                v_arr[:] = v_prev_arr
                break
            trace.append(f_new)
            if f_new - f <= tol * fabs(f_new):
                f = f_new
                break
            f = f_new
    finally:
        free(q)
    return v_arr, np.array(trace)


cdef enum:
    COARSE = 64
    FINE = 17

cdef double MARGIN = 1e-12


cdef struct Bil:
    cplx k0
    cplx k1
    cplx k2


cdef inline Bil _bil(const cplx[::1] r1, const cplx[:, ::1] m1, Py_ssize_t n1,
                     const cplx[::1] r2, const cplx[:, ::1] m2, Py_ssize_t n2, Py_ssize_t rows) nogil:
    # (r1 + c1 e)^H (r2 + c2 e) with c = column n of m
    cdef Bil out
    cdef Py_ssize_t i
    cdef cplx c1, c2
    out.k0 = 0
    out.k1 = 0
    out.k2 = 0
    for i in range(rows):
        c1 = m1[i, n1]
        c2 = m2[i, n2]
        out.k0 = out.k0 + r1[i].conjugate() * r2[i] + c1.conjugate() * c2
        out.k1 = out.k1 + r1[i].conjugate() * c2
        out.k2 = out.k2 + c1.conjugate() * r2[i]
    return out


cdef inline double _herm_at(Bil k, cplx e) nogil:
    return k.k0.real + 2.0 * (k.k1 * e).real


cdef inline double _abs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef double _den_at(bint fully, cplx e, Bil kx, Bil ky, Bil kz, Bil krn, Bil krd, Bil kcr,
                    double b2, double bd2) nogil:
    cdef double x = _herm_at(kx, e)
    cdef double y = _herm_at(ky, e)
    cdef cplx z = kz.k0 + kz.k1 * e + kz.k2 * e.conjugate()
    cdef double rn, rdn, den
    cdef cplx cr
    if x <= 0.0:
        return -INFINITY
    if fully:
        rn = _herm_at(krn, e)
        if rn <= 0.0:
            return -INFINITY
        rdn = _herm_at(krd, e)
        cr = kcr.k0 + kcr.k1 * e + kcr.k2 * e.conjugate()
        den = x * (rdn - _abs2(cr) / rn) + rn * (y - _abs2(z) / x)
    else:
        den = x * bd2 + b2 * (y - _abs2(z) / x)
    if not isfinite(den):
        return -INFINITY
    return den


def refine_exact(T, Td, Rr, Rd, v, fully, double b2, double bd2, double rel_tol=1e-4, int max_sweeps=20):
    """Compiled counterpart of ``_kernels_py.refine_exact``; returns ``(v, den)``."""
    cdef const cplx[:, ::1] t_m = np.ascontiguousarray(T, dtype=complex)
    cdef const cplx[:, ::1] td_m = np.ascontiguousarray(Td, dtype=complex)
    cdef const cplx[:, ::1] r_m = np.ascontiguousarray(Rr, dtype=complex)
    cdef const cplx[:, ::1] rd_m = np.ascontiguousarray(Rd, dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] v_arr = np.array(v, dtype=complex)
    cdef cplx[::1] vv = v_arr
    cdef bint is_fully = bool(fully)
    cdef Py_ssize_t n_el = vv.shape[0], kt = t_m.shape[0], kr = r_m.shape[0]
    cdef cplx[::1] t = np.asarray(T, dtype=complex) @ v_arr
    cdef cplx[::1] td = np.asarray(Td, dtype=complex) @ v_arr
    cdef cplx[::1] pr = np.asarray(Rr, dtype=complex) @ v_arr
    cdef cplx[::1] pd = np.asarray(Rd, dtype=complex) @ v_arr
    cdef cplx[::1] t_r = np.empty(kt, dtype=complex)
    cdef cplx[::1] td_r = np.empty(kt, dtype=complex)
    cdef cplx[::1] pr_r = np.empty(kr, dtype=complex)
    cdef cplx[::1] pd_r = np.empty(kr, dtype=complex)
    cdef cplx[::1] coarse = np.exp(2j * np.pi * np.arange(COARSE) / COARSE)
    offs = -np.pi / COARSE + np.arange(FINE) * (2.0 * np.pi / COARSE) / (FINE - 1)
    cdef cplx[::1] fine_rot = np.exp(1j * offs)
    cdef Bil kx, ky, kz, krn, krd, kcr
    cdef Py_ssize_t n, i, k, best_k
    cdef int sweep
    cdef double cur = 0.0, start, d, best_d
    cdef cplx e_best, e, vn
    cdef bint first = True
    krn.k0 = krn.k1 = krn.k2 = 0
    krd = krn
    kcr = krn
    with nogil:
        for sweep in range(max_sweeps):
            start = cur
            for n in range(n_el):
                vn = vv[n]
                for i in range(kt):
                    t_r[i] = t[i] - t_m[i, n] * vn
                    td_r[i] = td[i] - td_m[i, n] * vn
                if is_fully:
                    for i in range(kr):
                        pr_r[i] = pr[i] - r_m[i, n] * vn
                        pd_r[i] = pd[i] - rd_m[i, n] * vn
                kx = _bil(t_r, t_m, n, t_r, t_m, n, kt)
                ky = _bil(td_r, td_m, n, td_r, td_m, n, kt)
                kz = _bil(t_r, t_m, n, td_r, td_m, n, kt)
                if is_fully:
                    krn = _bil(pr_r, r_m, n, pr_r, r_m, n, kr)
                    krd = _bil(pd_r, rd_m, n, pd_r, rd_m, n, kr)
                    kcr = _bil(pd_r, rd_m, n, pr_r, r_m, n, kr)
                if first:
                    cur = _den_at(is_fully, vn, kx, ky, kz, krn, krd, kcr, b2, bd2)
                    start = cur
                    first = False
                best_k = -1
                best_d = cur + MARGIN * fabs(cur)
                for k in range(COARSE):
                    d = _den_at(is_fully, coarse[k], kx, ky, kz, krn, krd, kcr, b2, bd2)
                    if d > best_d:
                        best_d = d
                        best_k = k
                if best_k < 0:
                    continue
                cur = best_d
                e_best = coarse[best_k]
                e = e_best
                best_k = -1
                best_d = cur + MARGIN * fabs(cur)
                for k in range(FINE):
                    d = _den_at(is_fully, e * fine_rot[k], kx, ky, kz, krn, krd, kcr, b2, bd2)
                    if d > best_d:
                        best_d = d
                        best_k = k
                if best_k >= 0:
                    cur = best_d
                    e_best = e * fine_rot[best_k]
                vv[n] = e_best
                for i in range(kt):
                    t[i] = t_r[i] + t_m[i, n] * e_best
                    td[i] = td_r[i] + td_m[i, n] * e_best
                if is_fully:
                    for i in range(kr):
                        pr[i] = pr_r[i] + r_m[i, n] * e_best
                        pd[i] = pd_r[i] + rd_m[i, n] * e_best
            if cur - start <= rel_tol * fabs(cur):
                break
    return v_arr, cur

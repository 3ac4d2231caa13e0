# cython: language_level=3
"""Compiled detection kernel.

Transliteration of fingerkit.ridge.local's scalar routines (derivative
stencils, closed-form symmetric 3x3 eigensolver with Jacobi fallback,
extreme-set classification, nested cube tests).  Any semantic change there
must be mirrored here; the test suite cross-checks the two backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, acos, cos, fabs, pi, sqrt

cnp.import_array()

cdef double TINY = 1e-300


cdef inline double _value_clamped(const double* v, int nx, int ny, int nz,
                                  int i, int j, int k) nogil:
    if i < 0:
        i = 0
    elif i > nx - 1:
        i = nx - 1
    if j < 0:
        j = 0
    elif j > ny - 1:
        j = ny - 1
    if k < 0:
        k = 0
    elif k > nz - 1:
        k = nz - 1
    return v[i + nx * (j + ny * k)]


cdef inline double _ray(const double* v, int nx, int ny, int nz,
                        int i, int j, int k, int di, int dj, int dk,
                        double t, double f0) nogil:
    cdef double fn = _value_clamped(v, nx, ny, nz, i + di, j + dj, k + dk)
    return (1.0 - t) * f0 + t * fn


cdef void _derivs(const double* v, int nx, int ny, int nz, int i, int j, int k,
                  double spacing, double h, double* out) nogil:
    cdef double t = h / spacing
    cdef double f0 = v[i + nx * (j + ny * k)]
    cdef double fxp = _ray(v, nx, ny, nz, i, j, k, 1, 0, 0, t, f0)
    cdef double fxm = _ray(v, nx, ny, nz, i, j, k, -1, 0, 0, t, f0)
    cdef double fyp = _ray(v, nx, ny, nz, i, j, k, 0, 1, 0, t, f0)
    cdef double fym = _ray(v, nx, ny, nz, i, j, k, 0, -1, 0, t, f0)
    cdef double fzp = _ray(v, nx, ny, nz, i, j, k, 0, 0, 1, t, f0)
    cdef double fzm = _ray(v, nx, ny, nz, i, j, k, 0, 0, -1, t, f0)
    cdef double h2 = h * h
    cdef double fpp, fpm, fmp, fmm
    out[0] = (fxp - fxm) / (2.0 * h)
    out[1] = (fyp - fym) / (2.0 * h)
    out[2] = (fzp - fzm) / (2.0 * h)
    out[3] = (fxp - 2.0 * f0 + fxm) / h2
    out[6] = (fyp - 2.0 * f0 + fym) / h2
    out[8] = (fzp - 2.0 * f0 + fzm) / h2
    fpp = _ray(v, nx, ny, nz, i, j, k, 1, 1, 0, t, f0)
    fpm = _ray(v, nx, ny, nz, i, j, k, 1, -1, 0, t, f0)
    fmp = _ray(v, nx, ny, nz, i, j, k, -1, 1, 0, t, f0)
    fmm = _ray(v, nx, ny, nz, i, j, k, -1, -1, 0, t, f0)
    out[4] = (fpp - fpm - fmp + fmm) / (4.0 * h2)
    fpp = _ray(v, nx, ny, nz, i, j, k, 1, 0, 1, t, f0)
    fpm = _ray(v, nx, ny, nz, i, j, k, 1, 0, -1, t, f0)
    fmp = _ray(v, nx, ny, nz, i, j, k, -1, 0, 1, t, f0)
    fmm = _ray(v, nx, ny, nz, i, j, k, -1, 0, -1, t, f0)
    out[5] = (fpp - fpm - fmp + fmm) / (4.0 * h2)
    fpp = _ray(v, nx, ny, nz, i, j, k, 0, 1, 1, t, f0)
    fpm = _ray(v, nx, ny, nz, i, j, k, 0, 1, -1, t, f0)
    fmp = _ray(v, nx, ny, nz, i, j, k, 0, -1, 1, t, f0)
    fmm = _ray(v, nx, ny, nz, i, j, k, 0, -1, -1, t, f0)
    out[7] = (fpp - fpm - fmp + fmm) / (4.0 * h2)
    # layout: g1 g2 g3 a11 a12 a13 a22 a23 a33


cdef inline void _cross3(double ax, double ay, double az,
                         double bx, double by, double bz, double* o) nogil:
    o[0] = ay * bz - az * by
    o[1] = az * bx - ax * bz
    o[2] = ax * by - ay * bx


cdef void _eigvec_cross(double a11, double a12, double a13, double a22,
                        double a23, double a33, double lam, double* out) nogil:
    cdef double r0x = a11 - lam, r0y = a12, r0z = a13
    cdef double r1x = a12, r1y = a22 - lam, r1z = a23
    cdef double r2x = a13, r2y = a23, r2z = a33 - lam
    cdef double c[3]
    cdef double bx = 1.0, by = 0.0, bz = 0.0
    cdef double best = 0.0, n2, n
    _cross3(r0x, r0y, r0z, r1x, r1y, r1z, c)
    n2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2]
    if n2 > best:
        best = n2; bx = c[0]; by = c[1]; bz = c[2]
    _cross3(r0x, r0y, r0z, r2x, r2y, r2z, c)
    n2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2]
    if n2 > best:
        best = n2; bx = c[0]; by = c[1]; bz = c[2]
    _cross3(r1x, r1y, r1z, r2x, r2y, r2z, c)
    n2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2]
    if n2 > best:
        best = n2; bx = c[0]; by = c[1]; bz = c[2]
    if best <= 0.0:
        out[0] = 1.0; out[1] = 0.0; out[2] = 0.0
        return
    n = sqrt(best)
    out[0] = bx / n; out[1] = by / n; out[2] = bz / n


cdef void _jacobi3(double a11, double a12, double a13, double a22,
                   double a23, double a33, double* eigs, double* vecs) nogil:
    cdef double a[3][3]
    cdef double v[3][3]
    cdef double fro2, off2, apq, tau, t, c, s, arp, arq, vrp, vrq
    cdef int sweep, r, p, q, pi_, qi_
    a[0][0] = a11; a[0][1] = a12; a[0][2] = a13
    a[1][0] = a12; a[1][1] = a22; a[1][2] = a23
    a[2][0] = a13; a[2][1] = a23; a[2][2] = a33
    for p in range(3):
        for q in range(3):
            v[p][q] = 1.0 if p == q else 0.0
    fro2 = a11 * a11 + a22 * a22 + a33 * a33 + 2.0 * (a12 * a12 + a13 * a13 + a23 * a23)
    for sweep in range(64):
        off2 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]
        if off2 <= fro2 * 1e-32 or off2 == 0.0:
            break
        for pi_ in range(3):
            for qi_ in range(pi_ + 1, 3):
                p = pi_; q = qi_
                apq = a[p][q]
                if apq == 0.0:
                    continue
                tau = (a[q][q] - a[p][p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for r in range(3):
                    arp = a[r][p]; arq = a[r][q]
                    a[r][p] = c * arp - s * arq
                    a[r][q] = s * arp + c * arq
                for r in range(3):
                    arp = a[p][r]; arq = a[q][r]
                    a[p][r] = c * arp - s * arq
                    a[q][r] = s * arp + c * arq
                for r in range(3):
                    vrp = v[r][p]; vrq = v[r][q]
                    v[r][p] = c * vrp - s * vrq
                    v[r][q] = s * vrp + c * vrq
    eigs[0] = a[0][0]; eigs[1] = a[1][1]; eigs[2] = a[2][2]
    for p in range(3):
        for q in range(3):
            vecs[3 * p + q] = v[q][p]  # vecs row p = eigenvector p


cdef inline void _sign_fix(double* v) nogil:
    cdef double m = v[0]
    if fabs(v[1]) > fabs(m):
        m = v[1]
    if fabs(v[2]) > fabs(m):
        m = v[2]
    if m < 0.0:
        v[0] = -v[0]; v[1] = -v[1]; v[2] = -v[2]


cdef inline double _alignment(const double* v) nogil:
    cdef double m = fabs(v[0])
    if fabs(v[1]) > m:
        m = fabs(v[1])
    if fabs(v[2]) > m:
        m = fabs(v[2])
    return m


cdef void _lindeberg(double* eigs, double* vecs) nogil:
    """In-place stable sort of 3 eigenpairs by the Lindeberg rule."""
    cdef int idx[3]
    cdef int i, j, a, b, m
    cdef double la, lb, tmp
    cdef double e_out[3]
    cdef double v_out[9]
    idx[0] = 0; idx[1] = 1; idx[2] = 2
    for i in range(1, 3):
        j = i
        while j > 0:
            a = idx[j - 1]; b = idx[j]
            la = eigs[a]; lb = eigs[b]
            if (fabs(lb) > fabs(la)
                    or (fabs(lb) == fabs(la) and lb < la)
                    or (fabs(lb) == fabs(la) and lb == la
                        and _alignment(&vecs[3 * b]) > _alignment(&vecs[3 * a]))):
                m = idx[j - 1]; idx[j - 1] = idx[j]; idx[j] = m
                j -= 1
            else:
                break
    for i in range(3):
        e_out[i] = eigs[idx[i]]
        for j in range(3):
            v_out[3 * i + j] = vecs[3 * idx[i] + j]
    for i in range(3):
        eigs[i] = e_out[i]
        _sign_fix(&v_out[3 * i])
        for j in range(3):
            vecs[3 * i + j] = v_out[3 * i + j]


cdef void _sym3_eigen(double a11, double a12, double a13, double a22,
                      double a23, double a33, double* eigs, double* vecs) nogil:
    cdef double fro2 = a11 * a11 + a22 * a22 + a33 * a33 + 2.0 * (
        a12 * a12 + a13 * a13 + a23 * a23)
    cdef double p1, q, p2, p, b11, b22, b33, b12, b13, b23, detb, r, phi
    cdef double e1, e2, e3, fro, n
    cdef double v2x, v2y, v2z
    if fro2 == 0.0:
        eigs[0] = 0.0; eigs[1] = 0.0; eigs[2] = 0.0
        vecs[0] = 1.0; vecs[1] = 0.0; vecs[2] = 0.0
        vecs[3] = 0.0; vecs[4] = 1.0; vecs[5] = 0.0
        vecs[6] = 0.0; vecs[7] = 0.0; vecs[8] = 1.0
        return
    p1 = a12 * a12 + a13 * a13 + a23 * a23
    if p1 == 0.0:
        eigs[0] = a11; eigs[1] = a22; eigs[2] = a33
        vecs[0] = 1.0; vecs[1] = 0.0; vecs[2] = 0.0
        vecs[3] = 0.0; vecs[4] = 1.0; vecs[5] = 0.0
        vecs[6] = 0.0; vecs[7] = 0.0; vecs[8] = 1.0
        _lindeberg(eigs, vecs)
        return
    q = (a11 + a22 + a33) / 3.0
    p2 = (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + (a33 - q) * (a33 - q) + 2.0 * p1
    p = sqrt(p2 / 6.0)
    b11 = (a11 - q) / p; b22 = (a22 - q) / p; b33 = (a33 - q) / p
    b12 = a12 / p; b13 = a13 / p; b23 = a23 / p
    detb = (b11 * (b22 * b33 - b23 * b23)
            - b12 * (b12 * b33 - b23 * b13)
            + b13 * (b12 * b23 - b22 * b13))
    r = detb / 2.0
    if r <= -1.0:
        phi = pi / 3.0
    elif r >= 1.0:
        phi = 0.0
    else:
        phi = acos(r) / 3.0
    e1 = q + 2.0 * p * cos(phi)
    e3 = q + 2.0 * p * cos(phi + 2.0 * pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    fro = sqrt(fro2)
    if (e1 - e2 if e1 - e2 < e2 - e3 else e2 - e3) < 1e-9 * fro:
        _jacobi3(a11, a12, a13, a22, a23, a33, eigs, vecs)
        _lindeberg(eigs, vecs)
        return
    _eigvec_cross(a11, a12, a13, a22, a23, a33, e1, &vecs[0])
    _eigvec_cross(a11, a12, a13, a22, a23, a33, e3, &vecs[6])
    v2x = vecs[7] * vecs[2] - vecs[8] * vecs[1]
    v2y = vecs[8] * vecs[0] - vecs[6] * vecs[2]
    v2z = vecs[6] * vecs[1] - vecs[7] * vecs[0]
    n = sqrt(v2x * v2x + v2y * v2y + v2z * v2z)
    if n <= 0.0:
        _jacobi3(a11, a12, a13, a22, a23, a33, eigs, vecs)
        _lindeberg(eigs, vecs)
        return
    vecs[3] = v2x / n; vecs[4] = v2y / n; vecs[5] = v2z / n
    eigs[0] = e1; eigs[1] = e2; eigs[2] = e3
    _lindeberg(eigs, vecs)


cdef bint _line_hits_box(double qx, double qy, double qz,
                         double dx, double dy, double dz, double half) nogil:
    cdef double lo = -INFINITY, hi = INFINITY, t0, t1, qa, da
    cdef int a
    for a in range(3):
        if a == 0:
            qa = qx; da = dx
        elif a == 1:
            qa = qy; da = dy
        else:
            qa = qz; da = dz
        if fabs(da) > TINY:
            t0 = (-half - qa) / da
            t1 = (half - qa) / da
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > lo:
                lo = t0
            if t1 < hi:
                hi = t1
        elif fabs(qa) > half:
            return False
    return lo <= hi


cdef int _classify(const double* vals, int nx, int ny, int nz,
                   int i, int j, int k, double spacing, double h,
                   double half_in, double half_out,
                   double eigen_tolerance, double rank_tolerance) nogil:
    cdef double d[9]
    cdef double eigs[3]
    cdef double vecs[9]
    cdef double fro2, fro, etol, cl1, cl2, l1, l2
    cdef double p1, p2, lam_tol, gnorm, g_tol, c1, c2, qx, qy, qz, reach
    cdef bint det1, det2
    _derivs(vals, nx, ny, nz, i, j, k, spacing, h, d)
    fro2 = d[3] * d[3] + d[6] * d[6] + d[8] * d[8] + 2.0 * (
        d[4] * d[4] + d[5] * d[5] + d[7] * d[7])
    if fro2 == 0.0:
        return 0
    fro = sqrt(fro2)
    _sym3_eigen(d[3], d[4], d[5], d[6], d[7], d[8], eigs, vecs)
    l1 = eigs[0]; l2 = eigs[1]
    etol = eigen_tolerance * fro
    cl1 = 0.0 if fabs(l1) < etol else l1
    cl2 = 0.0 if fabs(l2) < etol else l2
    if not (cl1 < 0.0 and cl2 < 0.0):
        return 0
    p1 = vecs[0] * d[0] + vecs[1] * d[1] + vecs[2] * d[2]
    p2 = vecs[3] * d[0] + vecs[4] * d[1] + vecs[5] * d[2]
    lam_tol = rank_tolerance * fro
    gnorm = sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    g_tol = rank_tolerance * gnorm
    det1 = fabs(l1) > lam_tol
    det2 = fabs(l2) > lam_tol
    if det1 and det2:
        c1 = -p1 / l1
        c2 = -p2 / l2
        qx = c1 * vecs[0] + c2 * vecs[3]
        qy = c1 * vecs[1] + c2 * vecs[4]
        qz = c1 * vecs[2] + c2 * vecs[5]
        if _line_hits_box(qx, qy, qz, vecs[6], vecs[7], vecs[8], half_in):
            return 2
        if _line_hits_box(qx, qy, qz, vecs[6], vecs[7], vecs[8], half_out):
            return 1
        return 0
    if det1:
        if fabs(p2) > g_tol:
            return 0
        c1 = -p1 / l1
        reach = fabs(vecs[0]) + fabs(vecs[1]) + fabs(vecs[2])
        if fabs(c1) <= half_in * reach:
            return 2
        if fabs(c1) <= half_out * reach:
            return 1
        return 0
    if fabs(p1) <= g_tol and fabs(p2) <= g_tol:
        return 2
    return 0


def classify_field(values, dims, double spacing, double h,
                   double half_in, double half_out,
                   double eigen_tolerance, double rank_tolerance,
                   bint skip_boundary):
    """Label every voxel of an x-fastest float64 volume (see detect.py)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.ascontiguousarray(
        values, dtype=np.float64)
    cdef int nx = dims[0], ny = dims[1], nz = dims[2]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] flags = np.zeros(
        nx * ny * nz, dtype=np.uint8)
    cdef const double* vp = <const double*> vals.data
    cdef unsigned char* fp = <unsigned char*> flags.data
    cdef int i, j, k, i0, i1, j0, j1, k0, k1, lab
    if skip_boundary:
        i0 = 1; i1 = nx - 1; j0 = 1; j1 = ny - 1; k0 = 1; k1 = nz - 1
    else:
        i0 = 0; i1 = nx; j0 = 0; j1 = ny; k0 = 0; k1 = nz
    with nogil:
        for k in range(k0, k1):
            for j in range(j0, j1):
                for i in range(i0, i1):
                    lab = _classify(vp, nx, ny, nz, i, j, k, spacing, h,
                                    half_in, half_out,
                                    eigen_tolerance, rank_tolerance)
                    if lab:
                        fp[i + nx * (j + ny * k)] = <unsigned char> lab
    return flags

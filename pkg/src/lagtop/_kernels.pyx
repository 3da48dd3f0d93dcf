# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time-stepping kernels for the (coupled) reduced top.

State layout: [u0, u1, u2, v0, v1, v2, x_1..x_n, y_1..y_n].  The coupling is
eps * u_3 * sum_i w_i cos(x_i + phi_i); n = 0 gives the bare top.
Mirrors ``_kernels_py`` line for line.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, fabs, pow

cnp.import_array()

BACKEND = "cython"

cdef enum:
    MIDPOINT = 0
    STRANG = 1
    YOSHIDA4 = 2


cdef inline void _field(const double* s, double c, double* f) noexcept nogil:
    f[0] = s[1] * s[5] - s[2] * s[4]
    f[1] = s[2] * s[3] - s[0] * s[5]
    f[2] = s[0] * s[4] - s[1] * s[3]
    f[3] = c * s[1]
    f[4] = -c * s[0]
    f[5] = 0.0


cdef int _solve6(double* A, double* b) noexcept nogil:
    """Solve A x = b in place (b <- x); A is 6x6 row-major, destroyed."""
    cdef int i, j, k, p
    cdef double amax, t, piv
    for k in range(6):
        p = k
        amax = fabs(A[k * 6 + k])
        for i in range(k + 1, 6):
            if fabs(A[i * 6 + k]) > amax:
                amax = fabs(A[i * 6 + k])
                p = i
        if amax == 0.0:
            return -1
        if p != k:
            for j in range(6):
                t = A[k * 6 + j]
                A[k * 6 + j] = A[p * 6 + j]
                A[p * 6 + j] = t
            t = b[k]
            b[k] = b[p]
            b[p] = t
        piv = A[k * 6 + k]
        for i in range(k + 1, 6):
            t = A[i * 6 + k] / piv
            if t != 0.0:
                for j in range(k, 6):
                    A[i * 6 + j] -= t * A[k * 6 + j]
                b[i] -= t * b[k]
    for i in range(5, -1, -1):
        t = b[i]
        for j in range(i + 1, 6):
            t -= A[i * 6 + j] * b[j]
        b[i] = t / A[i * 6 + i]
    return 0


cdef inline double _ceff(double c, double eps, int n, const double* x,
                         const double* w, const double* ph) noexcept nogil:
    cdef int i
    cdef double acc = 0.0
    for i in range(n):
        acc += w[i] * cos(x[i] + ph[i])
    return c + eps * acc


cdef int _midpoint(double* s, double c, double eps, int n, const double* om,
                   const double* w, const double* ph, double dt, double tol,
                   int maxit, double* xmid, double* resid) noexcept nogil:
    """One implicit-midpoint step in place; returns iterations or -1."""
    cdef double X[6]
    cdef double m[6]
    cdef double f[6]
    cdef double J[36]
    cdef double g[6]
    cdef double h = 0.5 * dt
    cdef double ce, scale, dmax
    cdef int i, it
    for i in range(n):
        xmid[i] = s[6 + i] + h * om[i]
    ce = _ceff(c, eps, n, xmid, w, ph)
    _field(s, ce, f)
    for i in range(6):
        X[i] = s[i] + dt * f[i]
    for it in range(maxit):
        for i in range(6):
            m[i] = 0.5 * (s[i] + X[i])
        _field(m, ce, f)
        for i in range(6):
            g[i] = X[i] - s[i] - dt * f[i]
        for i in range(36):
            J[i] = 0.0
        for i in range(6):
            J[i * 6 + i] = 1.0
        # J = I - (dt/2) Df(m)
        J[0 * 6 + 1] -= h * m[5]
        J[0 * 6 + 2] += h * m[4]
        J[0 * 6 + 4] += h * m[2]
        J[0 * 6 + 5] -= h * m[1]
        J[1 * 6 + 0] += h * m[5]
        J[1 * 6 + 2] -= h * m[3]
        J[1 * 6 + 3] -= h * m[2]
        J[1 * 6 + 5] += h * m[0]
        J[2 * 6 + 0] -= h * m[4]
        J[2 * 6 + 1] += h * m[3]
        J[2 * 6 + 3] += h * m[1]
        J[2 * 6 + 4] -= h * m[0]
        J[3 * 6 + 1] -= h * ce
        J[4 * 6 + 0] += h * ce
        if _solve6(J, g) != 0:
            resid[0] = -1.0
            return -1
        scale = 1.0
        dmax = 0.0
        for i in range(6):
            X[i] -= g[i]
            if fabs(g[i]) > dmax:
                dmax = fabs(g[i])
            if fabs(X[i]) > scale:
                scale = fabs(X[i])
        if dmax <= tol * scale:
            for i in range(6):
                m[i] = 0.5 * (s[i] + X[i])
            for i in range(n):
                s[6 + n + i] += dt * eps * m[2] * w[i] * sin(xmid[i] + ph[i])
                s[6 + i] += dt * om[i]
            for i in range(6):
                s[i] = X[i]
            resid[0] = dmax
            return it + 1
    resid[0] = dmax
    return -1


cdef inline void _kinetic(double* s, int n, const double* om, double t) noexcept nogil:
    # u rotates about v with angular rate -|v|; oscillator angles advance
    cdef double nv = sqrt(s[3] * s[3] + s[4] * s[4] + s[5] * s[5])
    cdef double k0, k1, k2, th, ct, st, kd, c0, c1, c2
    cdef int i
    if nv > 0.0:
        k0 = s[3] / nv
        k1 = s[4] / nv
        k2 = s[5] / nv
        th = -nv * t
        ct = cos(th)
        st = sin(th)
        kd = (k0 * s[0] + k1 * s[1] + k2 * s[2]) * (1.0 - ct)
        c0 = k1 * s[2] - k2 * s[1]
        c1 = k2 * s[0] - k0 * s[2]
        c2 = k0 * s[1] - k1 * s[0]
        s[0], s[1], s[2] = (s[0] * ct + c0 * st + k0 * kd,
                            s[1] * ct + c1 * st + k1 * kd,
                            s[2] * ct + c2 * st + k2 * kd)
    for i in range(n):
        s[6 + i] += om[i] * t


cdef inline void _potential(double* s, double c, double eps, int n, const double* w,
                            const double* ph, double t) noexcept nogil:
    cdef double ce = _ceff(c, eps, n, &s[6], w, ph)
    cdef int i
    s[3] += t * ce * s[1]
    s[4] -= t * ce * s[0]
    for i in range(n):
        s[6 + n + i] += t * eps * s[2] * w[i] * sin(s[6 + i] + ph[i])


cdef inline void _strang(double* s, double c, double eps, int n, const double* om,
                         const double* w, const double* ph, double dt) noexcept nogil:
    _potential(s, c, eps, n, w, ph, 0.5 * dt)
    _kinetic(s, n, om, dt)
    _potential(s, c, eps, n, w, ph, 0.5 * dt)


cdef inline void _yoshida(double* s, double c, double eps, int n, const double* om,
                          const double* w, const double* ph, double dt) noexcept nogil:
    cdef double cr = pow(2.0, 1.0 / 3.0)
    cdef double w1 = 1.0 / (2.0 - cr)
    cdef double w0 = -cr / (2.0 - cr)
    _strang(s, c, eps, n, om, w, ph, w1 * dt)
    _strang(s, c, eps, n, om, w, ph, w0 * dt)
    _strang(s, c, eps, n, om, w, ph, w1 * dt)


def run(int scheme, state, double c, omega, double eps, weights, phases,
        double dt, long nsteps, long sample_every, double tol, int maxit):
    """Advance ``nsteps`` steps, recording every ``sample_every``-th state.

    Returns (samples, fail_step, residual, newton_iterations); fail_step is
    -1 on success.  The final state is always recorded.
    """
    cdef double[::1] s0 = np.ascontiguousarray(state, dtype=np.float64)
    cdef double[::1] om = np.ascontiguousarray(omega, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(phases, dtype=np.float64)
    cdef int n = om.shape[0]
    cdef int dim = 6 + 2 * n
    if s0.shape[0] != dim or wv.shape[0] != n or pv.shape[0] != n:
        raise ValueError("inconsistent state/oscillator dimensions")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    cdef long nsamp = nsteps // sample_every + 1 + (1 if nsteps % sample_every else 0)
    out_arr = np.empty((nsamp, dim), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] s = np.array(s0, copy=True)
    cdef double[::1] xm = np.empty(max(n, 1), dtype=np.float64)
    cdef double resid = 0.0
    cdef long k, row = 0, fail = -1, iters = 0
    cdef int it, i
    cdef const double* om_p = &om[0] if n > 0 else NULL
    cdef const double* w_p = &wv[0] if n > 0 else NULL
    cdef const double* p_p = &pv[0] if n > 0 else NULL
    with nogil:
        for i in range(dim):
            out[0, i] = s[i]
        row = 1
        for k in range(1, nsteps + 1):
            if scheme == MIDPOINT:
                it = _midpoint(&s[0], c, eps, n, om_p, w_p, p_p, dt, tol, maxit, &xm[0], &resid)
                if it < 0:
                    fail = k
                    break
                iters += it
            elif scheme == STRANG:
                _strang(&s[0], c, eps, n, om_p, w_p, p_p, dt)
            else:
                _yoshida(&s[0], c, eps, n, om_p, w_p, p_p, dt)
            if k % sample_every == 0 or k == nsteps:
                for i in range(dim):
                    out[row, i] = s[i]
                row += 1
    if fail >= 0:
        return out_arr[:row], fail, resid, iters
    return out_arr, -1, resid, iters

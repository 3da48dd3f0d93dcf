"""Pure-Python twin of ``_kernels.pyx``.

Same algorithms, same operation order, plain floats.  Used when the compiled
extension is unavailable or when LAGTOP_PURE_PYTHON=1.
"""
import math

import numpy as np

BACKEND = "python"

MIDPOINT, STRANG, YOSHIDA4 = 0, 1, 2


def _field(s, c):
    u0, u1, u2, v0, v1, v2 = s[0], s[1], s[2], s[3], s[4], s[5]
    return [u1 * v2 - u2 * v1, u2 * v0 - u0 * v2, u0 * v1 - u1 * v0, c * u1, -c * u0, 0.0]


def _solve6(A, b):
    A = [row[:] for row in A]
    b = b[:]
    for k in range(6):
        p = max(range(k, 6), key=lambda i: abs(A[i][k]))
        if A[p][k] == 0.0:
            return None
        if p != k:
            A[k], A[p] = A[p], A[k]
            b[k], b[p] = b[p], b[k]
        piv = A[k][k]
        rk = A[k]
        for i in range(k + 1, 6):
            t = A[i][k] / piv
            if t != 0.0:
                ri = A[i]
                for j in range(k, 6):
                    ri[j] -= t * rk[j]
                b[i] -= t * b[k]
    for i in range(5, -1, -1):
        t = b[i]
        for j in range(i + 1, 6):
            t -= A[i][j] * b[j]
        b[i] = t / A[i][i]
    return b


def _ceff(c, eps, n, x, w, ph):
    acc = 0.0
    for i in range(n):
        acc += w[i] * math.cos(x[i] + ph[i])
    return c + eps * acc


def _midpoint(s, c, eps, n, om, w, ph, dt, tol, maxit):
    h = 0.5 * dt
    xmid = [s[6 + i] + h * om[i] for i in range(n)]
    ce = _ceff(c, eps, n, xmid, w, ph)
    f = _field(s, ce)
    X = [s[i] + dt * f[i] for i in range(6)]
    dmax = 0.0
    for it in range(maxit):
        m = [0.5 * (s[i] + X[i]) for i in range(6)]
        f = _field(m, ce)
        g = [X[i] - s[i] - dt * f[i] for i in range(6)]
        J = [[1.0 if i == j else 0.0 for j in range(6)] for i in range(6)]
        J[0][1] -= h * m[5]
        J[0][2] += h * m[4]
        J[0][4] += h * m[2]
        J[0][5] -= h * m[1]
        J[1][0] += h * m[5]
        J[1][2] -= h * m[3]
        J[1][3] -= h * m[2]
        J[1][5] += h * m[0]
        J[2][0] -= h * m[4]
        J[2][1] += h * m[3]
        J[2][3] += h * m[1]
        J[2][4] -= h * m[0]
        J[3][1] -= h * ce
        J[4][0] += h * ce
        d = _solve6(J, g)
        if d is None:
            return -1, -1.0
        scale = 1.0
        dmax = 0.0
        for i in range(6):
            X[i] -= d[i]
            dmax = max(dmax, abs(d[i]))
            scale = max(scale, abs(X[i]))
        if dmax <= tol * scale:
            m2 = 0.5 * (s[2] + X[2])
            for i in range(n):
                s[6 + n + i] += dt * eps * m2 * w[i] * math.sin(xmid[i] + ph[i])
                s[6 + i] += dt * om[i]
            s[:6] = X
            return it + 1, dmax
    return -1, dmax


def _kinetic(s, n, om, t):
    nv = math.sqrt(s[3] * s[3] + s[4] * s[4] + s[5] * s[5])
    if nv > 0.0:
        k0, k1, k2 = s[3] / nv, s[4] / nv, s[5] / nv
        th = -nv * t
        ct, st = math.cos(th), math.sin(th)
        kd = (k0 * s[0] + k1 * s[1] + k2 * s[2]) * (1.0 - ct)
        c0 = k1 * s[2] - k2 * s[1]
        c1 = k2 * s[0] - k0 * s[2]
        c2 = k0 * s[1] - k1 * s[0]
        s[0], s[1], s[2] = (s[0] * ct + c0 * st + k0 * kd,
                            s[1] * ct + c1 * st + k1 * kd,
                            s[2] * ct + c2 * st + k2 * kd)
    for i in range(n):
        s[6 + i] += om[i] * t


def _potential(s, c, eps, n, w, ph, t):
    ce = _ceff(c, eps, n, s[6:6 + n], w, ph)
    s[3] += t * ce * s[1]
    s[4] -= t * ce * s[0]
    for i in range(n):
        s[6 + n + i] += t * eps * s[2] * w[i] * math.sin(s[6 + i] + ph[i])


def _strang(s, c, eps, n, om, w, ph, dt):
    _potential(s, c, eps, n, w, ph, 0.5 * dt)
    _kinetic(s, n, om, dt)
    _potential(s, c, eps, n, w, ph, 0.5 * dt)


_CR = 2.0 ** (1.0 / 3.0)
_W1 = 1.0 / (2.0 - _CR)
_W0 = -_CR / (2.0 - _CR)


def _yoshida(s, c, eps, n, om, w, ph, dt):
    _strang(s, c, eps, n, om, w, ph, _W1 * dt)
    _strang(s, c, eps, n, om, w, ph, _W0 * dt)
    _strang(s, c, eps, n, om, w, ph, _W1 * dt)


def run(scheme, state, c, omega, eps, weights, phases, dt, nsteps, sample_every, tol, maxit):
    """See ``_kernels.run``."""
    s = [float(x) for x in np.asarray(state, dtype=float)]
    om = [float(x) for x in np.atleast_1d(np.asarray(omega, dtype=float))]
    w = [float(x) for x in np.atleast_1d(np.asarray(weights, dtype=float))]
    ph = [float(x) for x in np.atleast_1d(np.asarray(phases, dtype=float))]
    n = len(om)
    dim = 6 + 2 * n
    if len(s) != dim or len(w) != n or len(ph) != n:
        raise ValueError("inconsistent state/oscillator dimensions")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    c, eps, dt, tol = float(c), float(eps), float(dt), float(tol)
    nsteps, sample_every, maxit = int(nsteps), int(sample_every), int(maxit)
    rows = [s[:]]
    resid = 0.0
    iters = 0
    for k in range(1, nsteps + 1):
        if scheme == MIDPOINT:
            it, resid = _midpoint(s, c, eps, n, om, w, ph, dt, tol, maxit)
            if it < 0:
                return np.array(rows), k, resid, iters
            iters += it
        elif scheme == STRANG:
            _strang(s, c, eps, n, om, w, ph, dt)
        else:
            _yoshida(s, c, eps, n, om, w, ph, dt)
        if k % sample_every == 0 or k == nsteps:
            rows.append(s[:])
    return np.array(rows, dtype=float).reshape(len(rows), dim), -1, resid, iters

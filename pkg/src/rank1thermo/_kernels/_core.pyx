# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
# cython: initializedcheck=False
"""Compiled integration kernels.

Statement-for-statement transliteration of `_fallback.py`; keep the two in
lockstep, same operation order, when editing either. Built with
-ffp-contract=off so no fused multiply-adds sneak in: both backends then
execute the same IEEE-754 double operations and the consistency test can
compare them bit for bit (libc's cos/sin/cosh/sinh/atan2/floor are the same
functions CPython's math module wraps).

See the fallback module for the state convention, parameter layouts and
status codes.
"""

import numpy as np

from libc.math cimport atan2, cos, cosh, floor, sin, sinh

OK = 0
BLOWUP = 1
STEP_TOO_LARGE = 2
CHART_ESCAPE = 3

MODEL_HALF_PLANE = 0
MODEL_COLLAR = 1
MODEL_DISK = 2

cdef int _OK = 0
cdef int _BLOWUP = 1
cdef int _STEP_TOO_LARGE = 2
cdef int _CHART_ESCAPE = 3

cdef int _MODEL_HALF_PLANE = 0
cdef int _MODEL_COLLAR = 1
cdef int _MODEL_DISK = 2

cdef double _TWO_PI = 6.283185307179586476925287
cdef double _PI = 3.141592653589793238462643
cdef double _RIM2 = 0.99998 * 0.99998
cdef double _Y_MIN = 1e-250


cdef inline double _wrap(double psi) nogil:
    if psi > _PI or psi <= -_PI:
        psi -= _TWO_PI * floor((psi + _PI) / _TWO_PI)
    return psi


cdef inline void _collar_f(double s, double rate, double width, double slope,
                           double f0, double *f, double *fp, double *fpp) nogil:
    cdef double sb, d, base, ch, sh
    if rate == 0.0:
        f[0] = f0 + slope * s
        fp[0] = slope
        fpp[0] = 0.0
        return
    sb = s
    if sb > width:
        sb = width
    elif sb < -width:
        sb = -width
    d = s - sb
    base = f0 + slope * sb
    # flat branch only for a genuine band: with width = 0 the point s = 0
    # belongs to the curved profile (f'' = rate^2 f there, not 0)
    if d == 0.0 and width > 0.0:
        f[0] = base
        fp[0] = slope
        fpp[0] = 0.0
        return
    ch = cosh(rate * d)
    sh = sinh(rate * d)
    f[0] = base * ch + (slope / rate) * sh
    fp[0] = base * rate * sh + slope * ch
    fpp[0] = rate * rate * f[0]


cdef inline void _deriv(int model, double[::1] params, double x, double y,
                        double psi, double *dx, double *dy, double *dpsi,
                        double *K) nogil:
    cdef double c = cos(psi)
    cdef double s = sin(psi)
    cdef double k, e, f, fp, fpp
    if model == _MODEL_HALF_PLANE:
        k = params[0]
        e = k * y
        dx[0] = e * c
        dy[0] = e * s
        dpsi[0] = -k * c
        K[0] = -k * k
        return
    if model == _MODEL_COLLAR:
        _collar_f(x, params[0], params[1], params[2], params[4], &f, &fp, &fpp)
        dx[0] = c
        dy[0] = s / f
        dpsi[0] = -(fp / f) * s
        K[0] = -fpp / f
        return
    # disk
    k = params[0]
    e = k * (1.0 - (x * x + y * y)) * 0.5
    dx[0] = e * c
    dy[0] = e * s
    dpsi[0] = k * (y * c - x * s)
    K[0] = -k * k


cdef inline void _step(int model, double[::1] params, double x, double y,
                       double psi, double u, double dt, int with_u,
                       double *xn, double *yn, double *pn, double *un,
                       double *kmid) nogil:
    cdef double dx1, dy1, dp1, K1, dx2, dy2, dp2, K2
    cdef double dx3, dy3, dp3, K3, dx4, dy4, dp4, K4
    cdef double du1, du2, du3, du4, u2, u3, u4, h, sixth

    _deriv(model, params, x, y, psi, &dx1, &dy1, &dp1, &K1)
    du1 = -(u * u) - K1

    h = 0.5 * dt
    u2 = u + h * du1
    _deriv(model, params, x + h * dx1, y + h * dy1, psi + h * dp1,
           &dx2, &dy2, &dp2, &K2)
    du2 = -(u2 * u2) - K2

    u3 = u + h * du2
    _deriv(model, params, x + h * dx2, y + h * dy2, psi + h * dp2,
           &dx3, &dy3, &dp3, &K3)
    du3 = -(u3 * u3) - K3

    u4 = u + dt * du3
    _deriv(model, params, x + dt * dx3, y + dt * dy3, psi + dt * dp3,
           &dx4, &dy4, &dp4, &K4)
    du4 = -(u4 * u4) - K4

    sixth = dt / 6.0
    xn[0] = x + sixth * (dx1 + 2.0 * (dx2 + dx3) + dx4)
    yn[0] = y + sixth * (dy1 + 2.0 * (dy2 + dy3) + dy4)
    pn[0] = _wrap(psi + sixth * (dp1 + 2.0 * (dp2 + dp3) + dp4))
    if with_u:
        un[0] = u + sixth * (du1 + 2.0 * (du2 + du3) + du4)
    else:
        un[0] = u
    kmid[0] = 0.5 * (K2 + K3)


cdef inline double _curvature(int model, double[::1] params, double x,
                              double y) nogil:
    cdef double k, f, fp, fpp
    if model == _MODEL_HALF_PLANE:
        k = params[0]
        return -k * k
    if model == _MODEL_COLLAR:
        _collar_f(x, params[0], params[1], params[2], params[4], &f, &fp, &fpp)
        return -fpp / f
    k = params[0]
    return -k * k


cdef inline long long _reduce(double[::1] params, double *x, double *y,
                              double *psi, long long[:, ::1] events,
                              long long n_events, long long step_index) nogil:
    cdef double rc2 = params[2] * params[2]
    cdef long long cap = events.shape[0]
    cdef long long it
    cdef int inside, j, best
    cdef double dxj, dyj, bestm, bx, by, bdre, bdim
    cdef double are, aim, bre, bim, wre, wim, dre, dim, den, zre, zim, m
    for it in range(64):
        if n_events >= cap:
            break
        inside = 1
        for j in range(8):
            dxj = x[0] - params[35 + 2 * j]
            dyj = y[0] - params[36 + 2 * j]
            if dxj * dxj + dyj * dyj < rc2:
                inside = 0
                break
        if inside:
            break
        best = -1
        bestm = 4.0
        bx = by = bdre = bdim = 0.0
        for j in range(8):
            are = params[3 + 4 * j]
            aim = params[4 + 4 * j]
            bre = params[5 + 4 * j]
            bim = params[6 + 4 * j]
            wre = are * x[0] - aim * y[0] + bre
            wim = are * y[0] + aim * x[0] + bim
            dre = bre * x[0] + bim * y[0] + are
            dim = bre * y[0] - bim * x[0] - aim
            den = dre * dre + dim * dim
            zre = (wre * dre + wim * dim) / den
            zim = (wim * dre - wre * dim) / den
            m = zre * zre + zim * zim
            if m < bestm:
                bestm = m
                best = j
                bx = zre
                by = zim
                bdre = dre
                bdim = dim
        x[0] = bx
        y[0] = by
        psi[0] = _wrap(psi[0] - 2.0 * atan2(bdim, bdre))
        events[n_events, 0] = step_index
        events[n_events, 1] = best
        n_events += 1
    return n_events


def flow_path(int model, params, double x0, double y0, double psi0,
              n_steps, double dt, int with_u=0, double u0=0.0,
              double ceiling=1e6, long long check_every=64,
              double err_bound=1e-8):
    """Integrate the geodesic flow (optionally with the Riccati rider).

    Same contract as the fallback: returns (xs, ys, psis, Ks, Kmid, us,
    events, status, stop, max_err) with n_steps+1 samples and samples past
    `stop` unwritten.
    """
    cdef double[::1] par = np.ascontiguousarray(params, dtype=np.float64)
    cdef long long n = int(n_steps)
    xs_arr = np.empty(n + 1)
    ys_arr = np.empty(n + 1)
    psis_arr = np.empty(n + 1)
    Ks_arr = np.empty(n + 1)
    Kmid_arr = np.empty(max(n, 1))
    us_arr = np.empty(n + 1)
    events_arr = np.empty((n + 64, 2), dtype=np.int64)
    cdef double[::1] xs = xs_arr
    cdef double[::1] ys = ys_arr
    cdef double[::1] psis = psis_arr
    cdef double[::1] Ks = Ks_arr
    cdef double[::1] Kmid = Kmid_arr
    cdef double[::1] us = us_arr
    cdef long long[:, ::1] events = events_arr
    cdef long long n_events = 0

    cdef int reduce_flag = model == _MODEL_DISK and par[1] != 0.0
    cdef double half_length = par[3] if model == _MODEL_COLLAR else 0.0

    cdef double x = x0
    cdef double y = y0
    cdef double psi = _wrap(psi0)
    cdef double u = u0

    cdef int status = _OK
    cdef long long stop = n
    cdef double max_err = 0.0

    cdef long long i
    cdef double fx, fy, fp, fu, km, hx, hy, hp, hu, hkm, err, e2

    with nogil:
        if reduce_flag:
            n_events = _reduce(par, &x, &y, &psi, events, n_events, 0)
        xs[0] = x
        ys[0] = y
        psis[0] = psi
        Ks[0] = _curvature(model, par, x, y)
        us[0] = u

        for i in range(1, n + 1):
            if check_every > 0 and i % check_every == 0:
                # step-doubling estimate; the trajectory always advances by
                # the single full step so results do not depend on check_every
                _step(model, par, x, y, psi, u, dt, with_u,
                      &fx, &fy, &fp, &fu, &km)
                _step(model, par, x, y, psi, u, 0.5 * dt, with_u,
                      &hx, &hy, &hp, &hu, &hkm)
                _step(model, par, hx, hy, hp, hu, 0.5 * dt, with_u,
                      &hx, &hy, &hp, &hu, &hkm)
                err = abs(fx - hx)
                e2 = abs(fy - hy)
                if e2 > err:
                    err = e2
                e2 = abs(_wrap(fp - hp))
                if e2 > err:
                    err = e2
                err /= 15.0
                if err > max_err:
                    max_err = err
                if err > err_bound:
                    status = _STEP_TOO_LARGE
                    stop = i - 1
                    break
            else:
                _step(model, par, x, y, psi, u, dt, with_u,
                      &fx, &fy, &fp, &fu, &km)
            x = fx
            y = fy
            psi = fp
            u = fu

            if model == _MODEL_COLLAR and (x > half_length or x < -half_length):
                status = _CHART_ESCAPE
                stop = i - 1
                break
            if model == _MODEL_HALF_PLANE and y < _Y_MIN:
                status = _CHART_ESCAPE
                stop = i - 1
                break
            if model == _MODEL_DISK:
                if reduce_flag:
                    n_events = _reduce(par, &x, &y, &psi, events, n_events, i)
                if x * x + y * y >= _RIM2:
                    status = _CHART_ESCAPE
                    stop = i - 1
                    break

            xs[i] = x
            ys[i] = y
            psis[i] = psi
            Ks[i] = _curvature(model, par, x, y)
            us[i] = u
            Kmid[i - 1] = km

            if with_u and (u > ceiling or u < -ceiling):
                status = _BLOWUP
                stop = i
                break

    return (xs_arr, ys_arr, psis_arr, Ks_arr, Kmid_arr, us_arr,
            events_arr[:n_events].copy(), status, stop, max_err)


def riccati_from_samples(Khalf, double u0, double dt, double ceiling=1e6):
    """RK4 for u' = -u^2 - K(t) from curvature sampled on the half grid.

    Same contract as the fallback; Khalf has 2n+1 entries so every RK4 stage
    sees its exact curvature sample. Returns (us, status, stop).
    """
    cdef double[::1] Kh = np.ascontiguousarray(Khalf, dtype=np.float64)
    cdef long long n = (Kh.shape[0] - 1) // 2
    us_arr = np.empty(n + 1)
    cdef double[::1] us = us_arr
    cdef double u = u0
    cdef int status = _OK
    cdef long long stop = n
    cdef double h = 0.5 * dt
    cdef long long i
    cdef double K0, Km, K1, k1, k2, k3, k4, v

    with nogil:
        us[0] = u
        for i in range(n):
            K0 = Kh[2 * i]
            Km = Kh[2 * i + 1]
            K1 = Kh[2 * i + 2]
            k1 = -(u * u) - K0
            v = u + h * k1
            k2 = -(v * v) - Km
            v = u + h * k2
            k3 = -(v * v) - Km
            v = u + dt * k3
            k4 = -(v * v) - K1
            u = u + dt * (k1 + 2.0 * (k2 + k3) + k4) / 6.0
            us[i + 1] = u
            if u > ceiling or u < -ceiling:
                status = _BLOWUP
                stop = i + 1
                break
    return us_arr, status, stop

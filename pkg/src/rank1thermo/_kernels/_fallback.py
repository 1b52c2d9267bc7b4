"""Reference integration kernels, pure python.

Hot loops for geodesic flow and Riccati propagation. `_core.pyx` is a
line-by-line transliteration of this module; any edit here must be mirrored
there with the same operation order (the consistency test compares the two
backends at tight tolerance, and the compiled extension is built with
contraction disabled to keep the arithmetic identical).

State convention: a unit tangent vector is (x, y, psi) in the model chart.
The direction is stored as an angle, so the unit-speed constraint is exact by
representation; "renormalization" after a step is the angle wrap into
(-pi, pi]. The optional fourth component u rides along as the Riccati
solution u' = -u^2 - K evaluated at the stage positions, which keeps the
joint system at full RK4 order.

Model codes and parameter layouts (params is a flat float64 array):

  0  half-plane, curvature -k^2          [k]
  1  warped collar band ds^2 + f^2 dth^2 [rate, width, slope, half_length, f0]
  2  hyperbolic disk, curvature -k^2     [k, reduce_flag, r_c,
                                          8*(a_re, a_im, b_re, b_im),
                                          8*(c_x, c_y)]                 (51)

The collar warp is f(s) = base*cosh(rate*d) + (slope/rate)*sinh(rate*d) with
sb = clamp(s, -width, width), d = s - sb, base = f0 + slope*sb: linear (flat,
K = 0) on the band, K = -rate^2 outside, C^1 at the seam.

The disk maps are Moebius transforms z -> (a z + b)/(conj(b) z + conj(a)).
Reduction greedily applies whichever map brings |z| closest to 0 until the
point clears all eight neighbor circles |z - c_j| >= r_c; each application is
recorded as an (step_index, map_index) event so the deck word of the lift can
be reconstructed.

Status codes: 0 ok, 1 riccati blow-up, 2 local error above bound,
3 chart escape. On blow-up the offending sample is stored (stop points at
it); on escape/error the last good sample is kept (stop points at it).
"""

import math

import numpy as np

OK = 0
BLOWUP = 1
STEP_TOO_LARGE = 2
CHART_ESCAPE = 3

MODEL_HALF_PLANE = 0
MODEL_COLLAR = 1
MODEL_DISK = 2

_TWO_PI = 6.283185307179586476925287
_PI = 3.141592653589793238462643
_RIM2 = 0.99998 * 0.99998  # Euclidean radius^2 guard for the disk chart
# Half-plane y decays like e^{-kt} along generic geodesics and the flow
# never crosses y = 0 on its own (dy is proportional to y), so the floor
# only guards against denormals; long two-sided runs need lots of headroom.
_Y_MIN = 1e-250


def _wrap(psi):
    if psi > _PI or psi <= -_PI:
        psi -= _TWO_PI * math.floor((psi + _PI) / _TWO_PI)
    return psi


def _collar_f(s, rate, width, slope, f0):
    """Warp profile value and derivatives (f, f', f'')."""
    if rate == 0.0:
        return f0 + slope * s, slope, 0.0
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
        return base, slope, 0.0
    ch = math.cosh(rate * d)
    sh = math.sinh(rate * d)
    f = base * ch + (slope / rate) * sh
    fp = base * rate * sh + slope * ch
    return f, fp, rate * rate * f


def _deriv(model, params, x, y, psi):
    """Chart velocity field; returns (dx, dy, dpsi, K)."""
    c = math.cos(psi)
    s = math.sin(psi)
    if model == MODEL_HALF_PLANE:
        k = params[0]
        e = k * y
        return e * c, e * s, -k * c, -k * k
    if model == MODEL_COLLAR:
        f, fp, fpp = _collar_f(x, params[0], params[1], params[2], params[4])
        return c, s / f, -(fp / f) * s, -fpp / f
    # disk
    k = params[0]
    e = k * (1.0 - (x * x + y * y)) * 0.5
    return e * c, e * s, k * (y * c - x * s), -k * k


def _step(model, params, x, y, psi, u, dt, with_u):
    """One classical RK4 step of (x, y, psi[, u]); returns new state + K midpoint."""
    dx1, dy1, dp1, K1 = _deriv(model, params, x, y, psi)
    du1 = -(u * u) - K1

    h = 0.5 * dt
    u2 = u + h * du1
    dx2, dy2, dp2, K2 = _deriv(model, params, x + h * dx1, y + h * dy1, psi + h * dp1)
    du2 = -(u2 * u2) - K2

    u3 = u + h * du2
    dx3, dy3, dp3, K3 = _deriv(model, params, x + h * dx2, y + h * dy2, psi + h * dp2)
    du3 = -(u3 * u3) - K3

    u4 = u + dt * du3
    dx4, dy4, dp4, K4 = _deriv(model, params, x + dt * dx3, y + dt * dy3, psi + dt * dp3)
    du4 = -(u4 * u4) - K4

    sixth = dt / 6.0
    xn = x + sixth * (dx1 + 2.0 * (dx2 + dx3) + dx4)
    yn = y + sixth * (dy1 + 2.0 * (dy2 + dy3) + dy4)
    pn = _wrap(psi + sixth * (dp1 + 2.0 * (dp2 + dp3) + dp4))
    if with_u:
        un = u + sixth * (du1 + 2.0 * (du2 + du3) + du4)
    else:
        un = u
    return xn, yn, pn, un, 0.5 * (K2 + K3)


def _curvature(model, params, x, y):
    if model == MODEL_HALF_PLANE:
        k = params[0]
        return -k * k
    if model == MODEL_COLLAR:
        f, _, fpp = _collar_f(x, params[0], params[1], params[2], params[4])
        return -fpp / f
    k = params[0]
    return -k * k


def _reduce(params, x, y, psi, events, n_events, step_index):
    """Pull a disk point back into the fundamental domain, recording events."""
    rc2 = params[2] * params[2]
    cap = events.shape[0]
    for _ in range(64):
        if n_events >= cap:
            break
        inside = True
        for j in range(8):
            dxj = x - params[35 + 2 * j]
            dyj = y - params[36 + 2 * j]
            if dxj * dxj + dyj * dyj < rc2:
                inside = False
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
            wre = are * x - aim * y + bre
            wim = are * y + aim * x + bim
            dre = bre * x + bim * y + are
            dim = bre * y - bim * x - aim
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
        x = bx
        y = by
        psi = _wrap(psi - 2.0 * math.atan2(bdim, bdre))
        events[n_events, 0] = step_index
        events[n_events, 1] = best
        n_events += 1
    return x, y, psi, n_events


def flow_path(model, params, x0, y0, psi0, n_steps, dt,
              with_u=0, u0=0.0, ceiling=1e6, check_every=64, err_bound=1e-8):
    """Integrate the geodesic flow (optionally with the Riccati rider).

    Returns (xs, ys, psis, Ks, Kmid, us, events, status, stop, max_err).
    Arrays have n_steps+1 samples; Kmid has n_steps midpoint curvature
    estimates (average of the two middle RK4 stages, third-order accurate,
    exact when K is constant along the step). events is an (n, 2) int64
    array of (step, map) reduction records, empty unless model 2 reduces.
    Samples past `stop` are unwritten.
    """
    params = np.asarray(params, dtype=np.float64)
    n = int(n_steps)
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    psis = np.empty(n + 1)
    Ks = np.empty(n + 1)
    Kmid = np.empty(max(n, 1))
    us = np.empty(n + 1)
    events = np.empty((n + 64, 2), dtype=np.int64)
    n_events = 0

    reduce_flag = model == MODEL_DISK and params[1] != 0.0
    half_length = params[3] if model == MODEL_COLLAR else 0.0

    x = float(x0)
    y = float(y0)
    psi = _wrap(float(psi0))
    u = float(u0)
    if reduce_flag:
        x, y, psi, n_events = _reduce(params, x, y, psi, events, n_events, 0)
    xs[0] = x
    ys[0] = y
    psis[0] = psi
    Ks[0] = _curvature(model, params, x, y)
    us[0] = u

    status = OK
    stop = n
    max_err = 0.0

    for i in range(1, n + 1):
        if check_every > 0 and i % check_every == 0:
            # step-doubling estimate; the trajectory always advances by the
            # single full step so results do not depend on check_every
            fx, fy, fp, fu, km = _step(model, params, x, y, psi, u, dt, with_u)
            hx, hy, hp, hu, _ = _step(model, params, x, y, psi, u, 0.5 * dt, with_u)
            hx, hy, hp, hu, _ = _step(model, params, hx, hy, hp, hu, 0.5 * dt, with_u)
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
                status = STEP_TOO_LARGE
                stop = i - 1
                break
        else:
            fx, fy, fp, fu, km = _step(model, params, x, y, psi, u, dt, with_u)
        x, y, psi, u = fx, fy, fp, fu

        if model == MODEL_COLLAR and (x > half_length or x < -half_length):
            status = CHART_ESCAPE
            stop = i - 1
            break
        if model == MODEL_HALF_PLANE and y < _Y_MIN:
            status = CHART_ESCAPE
            stop = i - 1
            break
        if model == MODEL_DISK:
            if reduce_flag:
                x, y, psi, n_events = _reduce(params, x, y, psi, events, n_events, i)
            if x * x + y * y >= _RIM2:
                status = CHART_ESCAPE
                stop = i - 1
                break

        xs[i] = x
        ys[i] = y
        psis[i] = psi
        Ks[i] = _curvature(model, params, x, y)
        us[i] = u
        Kmid[i - 1] = km

        if with_u and (u > ceiling or u < -ceiling):
            status = BLOWUP
            stop = i
            break

    return (xs, ys, psis, Ks, Kmid, us, events[:n_events].copy(),
            status, stop, max_err)


def riccati_from_samples(Khalf, u0, dt, ceiling=1e6):
    """RK4 for u' = -u^2 - K(t) from curvature sampled on the half grid.

    Khalf has 2n+1 entries: K at t0, t0+dt/2, t0+dt, ... so every stage
    sees its exact curvature sample and the scheme keeps full fourth order.
    Returns (us, status, stop).
    """
    Khalf = np.asarray(Khalf, dtype=np.float64)
    n = (Khalf.shape[0] - 1) // 2
    us = np.empty(n + 1)
    u = float(u0)
    us[0] = u
    status = OK
    stop = n
    h = 0.5 * dt
    for i in range(n):
        K0 = Khalf[2 * i]
        Km = Khalf[2 * i + 1]
        K1 = Khalf[2 * i + 2]
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
            status = BLOWUP
            stop = i + 1
            break
    return us, status, stop

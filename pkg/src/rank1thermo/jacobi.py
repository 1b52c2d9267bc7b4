"""Riccati equation along orbits: u' = -u^2 - K(t).

u is the logarithmic derivative J'/J of a Jacobi field, so solving the
Riccati equation tracks infinitesimal divergence of nearby geodesics. Two
distinguished solutions matter:

* the unstable branch u^+ >= 0, selected by pushing a seed from the far
  past (burn-in from u(-T_burn) = 0; any seed in the cone [0, sqrt(sup -K)]
  converges to it exponentially where curvature is negative, and on flat
  stretches the whole cone collapses to O(1/T_burn) anyway);
* the stable branch u^- <= 0, obtained from the unstable branch of the
  time-reversed orbit via u^-(t) = -u^+_rev(-t).

The weight driving all thermodynamics here is the unstable log-Jacobian
rate of the flow in the (J, J') norm,

    phi_u(t) = -u (1 - K) / (1 + u^2),

whose time average differs from the plain average of -u by a boundary term
O(1/T): d/dt log sqrt(J^2 + J'^2) = u (1 - K)/(1 + u^2) with J' = u J.

Integration is 4th order: along charted orbits u rides as a fourth state
component inside the geodesic RK4 (curvature evaluated at stage points),
and along stored signals the half-step curvature grid is used.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import (BlowUp, ChartEscape, ConfigError, DomainError,
                     InsufficientBurnIn, StepTooLarge, WindowTooShort)
from .geometry import (CurvatureSignal, GeodesicPath, SurfaceModel,
                       UnitTangentState, integrate_geodesic)


@dataclass
class RiccatiTrace:
    """Riccati solution sampled on a uniform grid, with curvature."""

    t: np.ndarray
    u: np.ndarray
    K: np.ndarray
    blew_up: bool = False
    t_star: Optional[float] = None
    path: Optional[GeodesicPath] = None

    @property
    def dt(self):
        return self.t[1] - self.t[0]

    @property
    def span(self):
        return self.t[-1] - self.t[0]

    def phi_u(self):
        """Unstable log-Jacobian rate -u(1-K)/(1+u^2) on the grid."""
        return -self.u * (1.0 - self.K) / (1.0 + self.u * self.u)

    def mean_u(self):
        if len(self.t) < 2:
            raise WindowTooShort("need at least one step to average")
        return float(np.trapezoid(self.u, self.t) / self.span)

    def mean_phi_u(self):
        if len(self.t) < 2:
            raise WindowTooShort("need at least one step to average")
        return float(np.trapezoid(self.phi_u(), self.t) / self.span)

    def to_csv(self, path):
        phi = self.phi_u()
        with open(path, "w") as fh:
            fh.write("t,u,K,phi_u\n")
            for i in range(len(self.t)):
                fh.write("%.17g,%.17g,%.17g,%.17g\n"
                         % (self.t[i], self.u[i], self.K[i], phi[i]))


@dataclass
class JacobiFrame:
    """Jacobi field (J, J') rebuilt from a Riccati trace, J(t0) = 1."""

    t: np.ndarray
    J: np.ndarray
    Jp: np.ndarray

    @classmethod
    def from_trace(cls, trace):
        # log J = integral of u (trapezoid on the trace grid)
        du = np.concatenate(
            [[0.0], np.cumsum(0.5 * (trace.u[1:] + trace.u[:-1])
                              * np.diff(trace.t))])
        J = np.exp(du)
        return cls(trace.t.copy(), J, trace.u * J)

    def log_norm(self):
        return 0.5 * np.log(self.J ** 2 + self.Jp ** 2)


def _half_grid_from(source, t0, n, dt):
    """Curvature on the half-step grid (2n+1 values) for [t0, t0 + n dt]."""
    if isinstance(source, GeodesicPath):
        if n != len(source) - 1 or abs(dt - source.dt) > 1e-15 * max(1, abs(dt)):
            raise ConfigError("path replay must use the path's own grid")
        return source.k_half_grid()
    if isinstance(source, CurvatureSignal):
        return source.k_half_grid(t0, n, dt)
    if callable(source):
        ts = t0 + 0.5 * dt * np.arange(2 * n + 1)
        return np.array([float(source(t)) for t in ts])
    raise ConfigError("unsupported curvature source %r" % type(source))


def riccati_integrate(source, u0, T=None, dt=1e-3, t0=0.0,
                      raise_on_blowup=True, ceiling=1e6):
    """Solve u' = -u^2 - K from u(t0) = u0 over a span of length T.

    source: a CurvatureSignal, a plain callable t -> K, or a GeodesicPath
    (which fixes t0, T, dt to the path's own grid). General seeds may blow
    up in finite time (u -> -inf); that raises BlowUp carrying t_star, or
    flags the truncated trace when raise_on_blowup is false.
    """
    if isinstance(source, GeodesicPath):
        t0 = float(source.t[0])
        dt = float(source.dt)
        n = len(source) - 1
    else:
        if T is None or T <= 0.0:
            raise ConfigError("T must be a positive span")
        if dt <= 0.0:
            raise ConfigError("dt must be positive")
        n = max(1, int(round(T / dt)))
        dt = T / n
    if n < 2:
        raise WindowTooShort("span %r gives fewer than 2 steps" % T)

    khalf = _half_grid_from(source, t0, n, dt)
    us, status, stop = _kernels.riccati_from_samples(khalf, float(u0), dt,
                                                     ceiling=ceiling)
    t = t0 + dt * np.arange(n + 1)
    if status == _kernels.BLOWUP:
        t_star = t0 + stop * dt
        if raise_on_blowup:
            raise BlowUp(t_star, "Riccati solution left [-%g, %g] near "
                         "t = %g" % (ceiling, ceiling, t_star))
        m = stop + 1
        return RiccatiTrace(t[:m], us[:m], khalf[0:2 * m:2], blew_up=True,
                            t_star=t_star)
    return RiccatiTrace(t, us, khalf[0::2])


def _default_burn(k_scale):
    return 20.0 / math.sqrt(k_scale) if k_scale > 0.0 else 50.0


def _burn_seed(khalf_burn, dt, seed_tol, check_seed):
    """Run the burn-in from u = 0, optionally cross-check a cone-top seed."""
    us, status, stop = _kernels.riccati_from_samples(khalf_burn, 0.0, dt)
    if status != _kernels.OK:
        raise BlowUp(stop * dt, "burn-in diverged (seed 0 should stay "
                     "bounded)")
    u_end = us[-1]
    if check_seed:
        top = math.sqrt(max(0.0, -khalf_burn.min()))
        us2, status2, _ = _kernels.riccati_from_samples(khalf_burn, top, dt)
        gap = abs(us2[-1] - u_end) if status2 == _kernels.OK else math.inf
        if gap > seed_tol:
            raise InsufficientBurnIn(
                "seed dependence %.3g above %.3g after burn-in; "
                "increase T_burn" % (gap, seed_tol))
    return u_end


def unstable_riccati(source, v0=None, T=None, dt=1e-3, T_burn=None,
                     check_seed=True, seed_tol=1e-6, allow_escape=False):
    """Unstable Riccati branch u^+ on [0, T].

    Charted models: pass (model, v0); the orbit is extended backward by
    T_burn to settle the branch, then u rides inside the forward geodesic
    integration (full 4th order), and the resulting trace carries the
    forward path. Signals/callables: the curvature history on
    [-T_burn, T] is used directly.

    check_seed integrates the burn-in again from the top of the invariant
    cone sqrt(sup -K) and raises InsufficientBurnIn when the two seeds
    have not collapsed to within seed_tol.
    """
    if T is None or T <= 0.0:
        raise ConfigError("T must be a positive span")
    if dt <= 0.0:
        raise ConfigError("dt must be positive")
    n = max(1, int(round(T / dt)))
    if n < 2:
        raise WindowTooShort("span %g gives fewer than 2 steps" % T)
    dt = T / n

    if isinstance(source, SurfaceModel) and not isinstance(source, CurvatureSignal):
        if v0 is None:
            raise ConfigError("charted sources need a seed state")
        if T_burn is None:
            T_burn = _default_burn(source.max_abs_curvature())
        # a truncated burn (chart escape behind the seed) is allowed when the
        # caller tolerates escapes; the seed check below still verifies that
        # whatever past was available sufficed to settle the branch
        back = integrate_geodesic(source, v0, -T_burn, dt,
                                  allow_escape=allow_escape)
        u_start = _burn_seed(back.k_half_grid(), dt, seed_tol, check_seed)

        code, params = source.kernel_spec()
        xs, ys, psis, Ks, Kmid, us, events, status, stop, max_err = \
            _kernels.flow_path(code, params, v0.x, v0.y, v0.psi, n, dt,
                               with_u=1, u0=u_start)
        if status == _kernels.STEP_TOO_LARGE:
            raise StepTooLarge("local error %.3g during forward Riccati run"
                               % max_err)
        if status == _kernels.BLOWUP:
            raise BlowUp(stop * dt, "unstable branch blew up (should not "
                         "happen with K <= 0)")
        if status == _kernels.CHART_ESCAPE and not allow_escape:
            raise DomainError("orbit left the chart near t = %g" % (stop * dt))
        m = stop + 1
        path = GeodesicPath(source, dt * np.arange(m), xs[:m], ys[:m],
                            psis[:m], Ks[:m], Kmid[:max(m - 1, 1)], events)
        return RiccatiTrace(dt * np.arange(m), us[:m], Ks[:m], path=path)

    # signal or callable: one long half grid covering burn plus window
    if isinstance(source, CurvatureSignal):
        k_scale = source.max_abs_curvature()
    else:
        k_scale = max(-float(source(t)) for t in np.linspace(-50, T + 1, 801))
    if T_burn is None:
        T_burn = _default_burn(k_scale)
    n_burn = max(2, int(round(T_burn / dt)))
    khalf = _half_grid_from(source, -n_burn * dt, n_burn + n, dt)
    u_start = _burn_seed(khalf[:2 * n_burn + 1], dt, seed_tol, check_seed)
    us, status, stop = _kernels.riccati_from_samples(khalf[2 * n_burn:],
                                                     u_start, dt)
    if status == _kernels.BLOWUP:
        raise BlowUp(stop * dt, "unstable branch blew up")
    return RiccatiTrace(dt * np.arange(n + 1), us, khalf[2 * n_burn::2])


def stable_riccati(source, v0=None, T=None, dt=1e-3, T_burn=None,
                   check_seed=True, seed_tol=1e-6):
    """Stable Riccati branch u^- on [0, T], via time reversal.

    The reversed orbit's unstable branch u^+_rev gives
    u^-(t) = -u^+_rev(T - t); its burn-in lives in the forward future of
    the original orbit, so nothing extra is needed from the past.
    """
    if isinstance(source, SurfaceModel) and not isinstance(source, CurvatureSignal):
        if v0 is None:
            raise ConfigError("charted sources need a seed state")
        fwd = integrate_geodesic(source, v0, T, dt)
        end = fwd.end
        w0 = UnitTangentState(end.position, end.psi + math.pi, model=source)
        rev = unstable_riccati(source, w0, T=T, dt=dt, T_burn=T_burn,
                               check_seed=check_seed, seed_tol=seed_tol)
        return RiccatiTrace(rev.t.copy(), -rev.u[::-1].copy(),
                            rev.K[::-1].copy(), path=fwd)

    if T is None or T <= 0.0:
        raise ConfigError("T must be a positive span")

    if isinstance(source, CurvatureSignal):
        fn = source.curvature_t
    elif callable(source):
        fn = source
    else:
        raise ConfigError("unsupported curvature source %r" % type(source))
    rev = unstable_riccati(lambda tau: fn(T - tau), T=T, dt=dt, T_burn=T_burn,
                           check_seed=check_seed, seed_tol=seed_tol)
    return RiccatiTrace(rev.t.copy(), -rev.u[::-1].copy(), rev.K[::-1].copy())


def phi_u(u, K):
    """Unstable log-Jacobian rate -u(1-K)/(1+u^2) (vectorized)."""
    u = np.asarray(u, dtype=float)
    K = np.asarray(K, dtype=float)
    return -u * (1.0 - K) / (1.0 + u * u)


@dataclass
class RankSplit:
    """Per-sample flat/hyperbolic classification of a Riccati trace."""

    label: str                  # "flat" | "hyperbolic" | "mixed"
    flat_fraction: float
    flat_mask: np.ndarray = field(repr=False)


def rank_classify(trace, kappa_flat, u_flat):
    """Split trace samples into flat (|K| and |u| small) vs hyperbolic.

    A sample is flat when |K| <= kappa_flat and |u| <= u_flat; an orbit is
    "flat" when every sample is, "hyperbolic" when none is, else "mixed".
    Thresholds are the caller's business: they should scale with the
    curvature magnitude of the ambient model family.
    """
    if kappa_flat < 0.0 or u_flat < 0.0:
        raise ConfigError("classification thresholds must be >= 0")
    mask = (np.abs(trace.K) <= kappa_flat) & (np.abs(trace.u) <= u_flat)
    frac = float(mask.mean())
    if frac == 1.0:
        label = "flat"
    elif frac == 0.0:
        label = "hyperbolic"
    else:
        label = "mixed"
    return RankSplit(label, frac, mask)

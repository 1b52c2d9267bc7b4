"""Lyapunov exponents from Riccati traces.

The forward exponent of an orbit is the time average of the unstable
Riccati branch, chi = (1/T) int u^+ dt; the average of -phi_u estimates the
same number and the two differ by a boundary term O(1/T), which is reported
so callers can see the window error directly.

Closed orbits get an exact treatment: the Riccati period map over one loop
is monotone and contracting, so its fixed point u* is found by bisection in
the invariant cone [0, sqrt(sup -K)] and the exponent is the period average
of the periodic solution. The comparison bound chi <= sqrt(sup -K) along
the orbit comes back with each estimate; it is saturated exactly when the
curvature is constant along the orbit.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (ChartEscape, ConfigError, DomainError,
                     InsufficientBurnIn, NoFixedPoint, NotClosed)
from .geometry import CurvatureSignal, GeodesicPath, SurfaceModel
from .jacobi import riccati_integrate, stable_riccati, unstable_riccati


@dataclass
class LyapunovEstimate:
    """Finite-window exponent with its companion estimator."""

    chi: float                 # mean of u^+
    chi_alt: float             # mean of -phi_u: differs by O(1/span)
    span: float
    escaped: bool = False
    trace: object = field(default=None, repr=False)

    @property
    def window_gap(self):
        return abs(self.chi - self.chi_alt)


def forward_exponent(source, v0=None, T=50.0, dt=1e-3, T_burn=None,
                     allow_escape=False, check_seed=True):
    """Forward Lyapunov exponent over a window of length T.

    With allow_escape, orbits that leave their chart (collar band ends)
    yield an estimate over the span actually covered, flagged escaped.
    """
    tr = unstable_riccati(source, v0, T=T, dt=dt, T_burn=T_burn,
                          allow_escape=allow_escape, check_seed=check_seed)
    escaped = bool(tr.span < T * (1.0 - 1e-9))
    return LyapunovEstimate(tr.mean_u(), -tr.mean_phi_u(), float(tr.span),
                            escaped=escaped, trace=tr)


def backward_exponent(source, v0=None, T=50.0, dt=1e-3, T_burn=None,
                      check_seed=True):
    """Backward exponent: contraction rate, read off the stable branch."""
    tr = stable_riccati(source, v0, T=T, dt=dt, T_burn=T_burn,
                        check_seed=check_seed)
    return LyapunovEstimate(-tr.mean_u(), tr.mean_phi_u(), float(tr.span),
                            trace=tr)


@dataclass
class ClosedOrbitExponent:
    """Exact per-period exponent from the Riccati period-map fixed point."""

    chi: float
    u_fixed: float
    period: float
    upper_bound: float          # sqrt(sup -K) along the orbit

    @property
    def bound_gap(self):
        return self.upper_bound - self.chi

    @property
    def saturated(self):
        return abs(self.bound_gap) < 1e-10


def closed_orbit_exponent(path, tol=1e-13, max_iter=200):
    """Exponent of a closed geodesic via the periodic Riccati solution.

    The period map u0 -> u(period; u0) preserves the cone
    [0, sqrt(sup -K)] and is monotone, so bisection on u(period) - u0
    finds the unique periodic point. A curvature-free orbit collapses the
    cone to {0}: the exponent is exactly zero.
    """
    if not isinstance(path, GeodesicPath):
        raise ConfigError("closed_orbit_exponent needs a GeodesicPath")
    if not path.closed:
        raise NotClosed("path endpoint does not return to its start")

    top = math.sqrt(max(0.0, float(-path.K.min())))
    if top == 0.0:
        # flat orbit: the cone is {0} and u = 0 is the periodic solution
        return ClosedOrbitExponent(0.0, 0.0, path.period, 0.0)

    def period_map(u0):
        return float(riccati_integrate(path, u0).u[-1])

    lo, hi = 0.0, top
    f_lo = period_map(lo) - lo
    f_hi = period_map(hi) - hi
    if f_lo < -tol or f_hi > tol:
        raise NoFixedPoint("period map does not bracket a fixed point "
                           "(f(0) = %.3g, f(top) = %.3g)" % (f_lo, f_hi))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            break
        if period_map(mid) - mid >= 0.0:
            lo = mid
        else:
            hi = mid
    u_star = 0.5 * (lo + hi)
    tr = riccati_integrate(path, u_star)
    return ClosedOrbitExponent(tr.mean_u(), u_star, path.period, top)


# ---------------------------------------------------------------------------
# ensembles


@dataclass
class EnsembleSpectrum:
    """Exponent estimates across random seeds (possibly several models)."""

    records: list
    seed: int
    T: float
    dt: float

    @property
    def chis(self):
        return np.array([r["chi"] for r in self.records])

    def valid(self):
        return ~np.isnan(self.chis)

    def summary(self):
        ok = self.chis[self.valid()]
        return {
            "count": len(self.records),
            "valid": int(self.valid().sum()),
            "mean": float(ok.mean()) if len(ok) else math.nan,
            "std": float(ok.std()) if len(ok) else math.nan,
            "min": float(ok.min()) if len(ok) else math.nan,
            "max": float(ok.max()) if len(ok) else math.nan,
        }

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("index,variant,chi,chi_alt,span,escaped,status\n")
            for r in self.records:
                fh.write("%d,%s,%.17g,%.17g,%.17g,%d,%s\n"
                         % (r["index"], r["variant"], r["chi"], r["chi_alt"],
                            r["span"], int(r["escaped"]), r["status"]))

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump({"seed": self.seed, "T": self.T, "dt": self.dt,
                       "records": self.records, "summary": self.summary()},
                      fh, indent=1)


def ensemble_sample(models, n, T=50.0, dt=1e-3, seed=0, allow_escape=True,
                    T_burn=None):
    """Sample n forward exponents from random unit tangent seeds.

    models: one charted model or a list (each draw picks a member uniformly).
    Orbits that escape their chart contribute over their actual span;
    seeds whose burn-in cannot settle (short truncated pasts) are recorded
    with chi = nan and a status tag rather than silently dropped.
    """
    if isinstance(models, SurfaceModel):
        models = [models]
    if not models:
        raise ConfigError("need at least one model")
    for m in models:
        if isinstance(m, CurvatureSignal):
            raise ChartEscape("ensembles need charted models")
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        m = models[rng.integers(len(models))] if len(models) > 1 else models[0]
        v0 = m.sample_state(rng)
        rec = {"index": i, "variant": m.variant, "chi": math.nan,
               "chi_alt": math.nan, "span": 0.0, "escaped": False,
               "status": "ok"}
        try:
            est = forward_exponent(m, v0, T=T, dt=dt, T_burn=T_burn,
                                   allow_escape=allow_escape)
            rec.update(chi=est.chi, chi_alt=est.chi_alt, span=est.span,
                       escaped=est.escaped)
        except (DomainError, InsufficientBurnIn) as exc:
            rec["status"] = type(exc).__name__
        records.append(rec)
    return EnsembleSpectrum(records, seed, T, dt)

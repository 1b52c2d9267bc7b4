"""Closed orbits as objects: pseudo-orbit assembly, multiple-shooting
refinement, heteroclinic bridges between octagon axis orbits, libraries of
closed orbits filtered by exponent level, and Poincare-section codings that
hand a finite shift to the symbolic layer.

Bridging works on the octagon chart only. Axis orbits lift to hyperbolic
deck transformations; a connecting geodesic that shares its backward ideal
endpoint with one axis and its forward endpoint with another shadows the
first orbit in the far past and the second in the far future, so cutting it
where it dips close to each axis yields a small-jump pseudo-orbit that the
shooting stage closes up.
"""

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (CellOverlap, ConfigError, ConvergenceFailure,
                     HypothesisViolation, NoConnector, NoCrossing, NotClosed)
from .geometry import (CollarProfile, ConstantNegative, CurvatureSignal,
                       GeodesicPath, OctagonHyperbolic, UnitTangentState,
                       integrate_geodesic, mobius_angle_shift, mobius_apply,
                       model_from_config, phase_distance, wrap_angle)
from .jacobi import rank_classify, riccati_integrate
from .lyapunov import closed_orbit_exponent

_PI = math.pi
_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# vectorized phase distances (same metric as geometry.phase_distance)


def _wrap_vec(a):
    return a - _TWO_PI * np.floor((a + _PI) / _TWO_PI)


def _collar_f_vec(model, s):
    if model.rate == 0.0:
        return model.f0 + model.slope * s
    sb = np.clip(s, -model.width, model.width)
    d = s - sb
    base = model.f0 + model.slope * sb
    return (base * np.cosh(model.rate * d)
            + (model.slope / model.rate) * np.sinh(model.rate * d))


def _phase_dist_matrix(model, a, b):
    """Pairwise phase distances between state arrays a and b.

    a, b: (x, y, psi) 1-d arrays. Octagon entries are minimized over the
    identity and the eight side pairings, matching phase_distance.
    """
    xa, ya, pa = (np.asarray(v, dtype=float) for v in a)
    xb, yb, pb = (np.asarray(v, dtype=float) for v in b)

    if isinstance(model, ConstantNegative):
        dz2 = ((xa[:, None] - xb) ** 2 + (ya[:, None] - yb) ** 2)
        arg = 1.0 + dz2 / (2.0 * ya[:, None] * yb)
        d = np.arccosh(np.maximum(arg, 1.0)) / model.k
        return np.hypot(d, _wrap_vec(pa[:, None] - pb))

    if isinstance(model, CollarProfile):
        ds = xa[:, None] - xb
        fm = _collar_f_vec(model, 0.5 * (xa[:, None] + xb))
        dth = _wrap_vec(ya[:, None] - yb)
        dpsi = _wrap_vec(pa[:, None] - pb)
        return np.sqrt(ds * ds + (fm * dth) ** 2 + dpsi * dpsi)

    if not isinstance(model, OctagonHyperbolic):
        raise ConfigError("no phase geometry for %r" % type(model).__name__)

    za = xa[:, None] + 1j * ya[:, None]
    ra2 = np.abs(za) ** 2

    def against(zb, psib):
        d2 = np.abs(za - zb) ** 2
        den = (1.0 - ra2) * (1.0 - np.abs(zb) ** 2)
        d = np.arccosh(np.maximum(1.0 + 2.0 * d2 / den, 1.0)) / model.k
        return np.hypot(d, _wrap_vec(pa[:, None] - psib))

    zb0 = xb + 1j * yb
    best = against(zb0, pb)
    for j in range(8):
        M = model.tables["maps"][j]
        zj = (M[0, 0] * zb0 + M[0, 1]) / (M[1, 0] * zb0 + M[1, 1])
        pj = pb - 2.0 * np.angle(M[1, 0] * zb0 + M[1, 1])
        np.minimum(best, against(zj, pj), out=best)
    return best


def _strided_arrays(path, stride):
    idx = np.arange(0, len(path), max(1, int(stride)))
    if idx[-1] != len(path) - 1:
        idx = np.append(idx, len(path) - 1)
    return path.x[idx], path.y[idx], path.psi[idx]


# ---------------------------------------------------------------------------
# pseudo-orbits


@dataclass
class PseudoLeg:
    start: UnitTangentState
    duration: float
    path: GeodesicPath


class PseudoOrbit:
    """Cyclic chain of orbit segments with small jumps at the junctions."""

    def __init__(self, model, legs, jumps):
        self.model = model
        self.legs = list(legs)
        self.jumps = np.asarray(jumps, dtype=float)

    @property
    def n_legs(self):
        return len(self.legs)

    @property
    def max_jump(self):
        return float(self.jumps.max())

    @property
    def total_time(self):
        return float(sum(leg.duration for leg in self.legs))

    def sample_arrays(self, stride=20):
        xs, ys, ps = [], [], []
        for leg in self.legs:
            x, y, p = _strided_arrays(leg.path, stride)
            xs.append(x)
            ys.append(y)
            ps.append(p)
        return np.concatenate(xs), np.concatenate(ys), np.concatenate(ps)


def make_pseudo_orbit(model, legs, dt=1e-3):
    """Integrate (state, duration) legs and measure the junction jumps."""
    if isinstance(model, CurvatureSignal):
        raise ConfigError("pseudo-orbits need a chart")
    if not legs:
        raise ConfigError("a pseudo-orbit needs at least one leg")
    recs = []
    for state, dur in legs:
        dur = float(dur)
        if dur <= 0.0:
            raise ConfigError("leg durations must be positive")
        path = integrate_geodesic(model, state, dur, dt)
        recs.append(PseudoLeg(path.start, dur, path))
    n = len(recs)
    jumps = [phase_distance(recs[i].path.end, recs[(i + 1) % n].path.start)
             for i in range(n)]
    return PseudoOrbit(model, recs, jumps)


def shadowing_gap(orbit, pseudo, stride=20):
    """Sup over the orbit of the phase distance to the pseudo-orbit."""
    path = orbit.path if isinstance(orbit, RefinedOrbit) else orbit
    a = _strided_arrays(path, stride)
    b = pseudo.sample_arrays(stride)
    D = _phase_dist_matrix(path.model, a, b)
    return float(D.min(axis=1).max())


# ---------------------------------------------------------------------------
# multiple shooting


@dataclass
class RefinedOrbit:
    path: GeodesicPath
    residual: float
    iterations: int
    n_pieces: int

    @property
    def period(self):
        return self.path.period


def _concat_pieces(model, paths, total):
    t, xs, ys, ps, Ks, Kmid, events = [], [], [], [], [], [], []
    off_t = 0.0
    off_i = 0
    for j, p in enumerate(paths):
        sel = slice(0, None) if j == 0 else slice(1, None)
        t.append(p.t[sel] + off_t)
        xs.append(p.x[sel])
        ys.append(p.y[sel])
        ps.append(p.psi[sel])
        Ks.append(p.K[sel])
        Kmid.append(p.Kmid)
        if p.events.shape[0]:
            ev = p.events.copy()
            ev[:, 0] += off_i
            events.append(ev)
        off_t += p.t[-1]
        off_i += len(p) - 1
    events = (np.concatenate(events) if events
              else np.empty((0, 2), dtype=np.int64))
    return GeodesicPath(model, np.concatenate(t), np.concatenate(xs),
                        np.concatenate(ys), np.concatenate(ps),
                        np.concatenate(Ks), np.concatenate(Kmid),
                        events=events, closed=True, period=total)


def refine_closed_orbit(pseudo, dt=1e-3, tol=1e-9, assert_tol=1e-8,
                        max_iter=40, max_leg=8.0, fd_h=1e-6):
    """Close up a pseudo-orbit by damped Gauss-Newton multiple shooting.

    Unknowns are the start state and duration of each shooting piece; the
    residuals are the junction mismatches, compared after the best deck
    alignment on the octagon chart. The step count of each piece is frozen,
    so every residual evaluation integrates the same discrete system and
    the returned residual is its exact closure defect.
    """
    model = pseudo.model
    for leg in pseudo.legs:
        if float(leg.path.K.mean()) >= 0.0:
            raise HypothesisViolation(
                "a leg sees mean curvature >= 0; shooting needs a "
                "uniformly hyperbolic stretch")

    is_oct = isinstance(model, OctagonHyperbolic)
    is_col = isinstance(model, CollarProfile)

    # subdivide long legs; seed each piece from the stored leg path
    X0, nsteps = [], []
    for leg in pseudo.legs:
        m = max(1, int(math.ceil(leg.duration / max_leg - 1e-12)))
        Tj = leg.duration / m
        for r in range(m):
            i = min(int(round(r * Tj / leg.path.dt)), len(leg.path) - 1)
            X0.extend([leg.path.x[i], leg.path.y[i], leg.path.psi[i], Tj])
            nsteps.append(max(2, int(round(Tj / dt))))
    X = np.array(X0, dtype=float)
    n = len(nsteps)
    T0 = X[3::4].copy()

    def flow_piece(i, x, y, psi, T):
        v = UnitTangentState((x, y), psi, model=model)
        return integrate_geodesic(model, v, T, T / nsteps[i],
                                  check_every=10 ** 9)

    def diff_to(end, j, sx, sy, sp):
        if j is not None:
            sx, sy, sp = model.apply_map(j, sx, sy, sp)
        dy = wrap_angle(end[1] - sy) if is_col else end[1] - sy
        return np.array([end[0] - sx, dy, wrap_angle(end[2] - sp)])

    def align(end, start):
        best = diff_to(end, None, *start)
        bj = None
        if is_oct:
            for j in range(8):
                d = diff_to(end, j, *start)
                if np.dot(d, d) < np.dot(best, best):
                    best, bj = d, j
        return best, bj

    def evaluate(Xc):
        if np.any(Xc[3::4] < 0.5 * T0) or np.any(Xc[3::4] > 2.0 * T0):
            return None
        paths, ends = [], []
        for i in range(n):
            x, y, psi, T = Xc[4 * i:4 * i + 4]
            try:
                p = flow_piece(i, x, y, psi, T)
            except Exception:
                return None
            paths.append(p)
            ends.append((p.x[-1], p.y[-1], p.psi[-1]))
        R = np.empty(3 * n)
        aligns = []
        for i in range(n):
            s = Xc[4 * ((i + 1) % n):4 * ((i + 1) % n) + 3]
            d, j = align(ends[i], s)
            R[3 * i:3 * i + 3] = d
            aligns.append(j)
        return R, aligns, paths, ends

    out = evaluate(X)
    if out is None:
        raise ConvergenceFailure("initial pseudo-orbit legs fail to flow")
    R, aligns, paths, ends = out
    it = 0
    while it < max_iter and np.abs(R).max() > tol:
        J = np.zeros((3 * n, 4 * n))
        for i in range(n):
            nxt = (i + 1) % n
            s_next = X[4 * nxt:4 * nxt + 3]
            for c in range(4):
                Xp = X[4 * i:4 * i + 4].copy()
                Xm = Xp.copy()
                Xp[c] += fd_h
                Xm[c] -= fd_h
                pe = flow_piece(i, *Xp)
                me = flow_piece(i, *Xm)
                dp = diff_to((pe.x[-1], pe.y[-1], pe.psi[-1]),
                             aligns[i], *s_next)
                dm = diff_to((me.x[-1], me.y[-1], me.psi[-1]),
                             aligns[i], *s_next)
                J[3 * i:3 * i + 3, 4 * i + c] = (dp - dm) / (2.0 * fd_h)
            # this piece's start also enters the previous junction residual
            prev = (i - 1) % n
            for c in range(3):
                sp = X[4 * i:4 * i + 3].copy()
                sm = sp.copy()
                sp[c] += fd_h
                sm[c] -= fd_h
                dp = diff_to(ends[prev], aligns[prev], *sp)
                dm = diff_to(ends[prev], aligns[prev], *sm)
                J[3 * prev:3 * prev + 3, 4 * i + c] += (dp - dm) / (2.0 * fd_h)

        step = np.linalg.lstsq(J, -R, rcond=None)[0]
        lam = 1.0
        base = float(np.dot(R, R))
        accepted = None
        for _ in range(10):
            cand = evaluate(X + lam * step)
            if cand is not None and float(np.dot(cand[0], cand[0])) < base:
                accepted = (X + lam * step, cand)
                break
            lam *= 0.5
        if accepted is None:
            break
        X, (R, aligns, paths, ends) = accepted
        it += 1

    residual = float(np.abs(R).max())
    if residual > assert_tol:
        raise ConvergenceFailure(
            "multiple shooting stalled at residual %.3g after %d iterations"
            % (residual, it))
    total = float(X[3::4].sum())
    return RefinedOrbit(_concat_pieces(model, paths, total), residual, it, n)


# ---------------------------------------------------------------------------
# octagon axes and bridges


def octagon_axis_orbit(model, j=0, x0=-0.3, dt=1e-3):
    """The closed geodesic of side pairing j, seeded on its diameter."""
    if not isinstance(model, OctagonHyperbolic):
        raise ConfigError("axis orbits live on the octagon chart")
    if not isinstance(j, int) or not 0 <= j <= 7:
        raise ConfigError("side index must be an integer in 0..7")
    if abs(x0) >= model.tables["edge_radius"]:
        raise ConfigError("seed |x0| must stay below the exit abscissa %.6f"
                          % model.tables["edge_radius"])
    ang = j * _PI / 4.0
    v0 = UnitTangentState((x0 * math.cos(ang), x0 * math.sin(ang)), ang,
                          model=model)
    path = integrate_geodesic(model, v0, model.axis_period, dt)
    if not path.closed:
        raise NotClosed("axis seed failed to close; dt too coarse?")
    return path


def collar_waist_orbit(model, s0=0.0, dt=1e-3):
    """The closed theta-circle at a critical point of the warp."""
    if not isinstance(model, CollarProfile):
        raise ConfigError("waist orbits live on the collar chart")
    if not model.is_waist(s0):
        raise ConfigError("f'(%g) != 0: that theta circle is not a geodesic"
                          % s0)
    period = _TWO_PI * model.warp(s0)[0]
    v0 = UnitTangentState((s0, 0.0), 0.5 * _PI, model=model)
    path = integrate_geodesic(model, v0, period, dt)
    if not path.closed:
        raise NotClosed("waist circle failed to close; dt too coarse?")
    return path


def _axis_endpoints(model, path):
    """Ideal endpoints (repelling, attracting) of a closed lift."""
    g = model.deck_transformation(path)
    alpha, beta = g[0, 0], g[0, 1]
    if abs(beta) < 1e-10 or abs(alpha.real) <= 1.0 + 1e-12:
        raise NoConnector("deck word of the orbit is not hyperbolic")
    roots = np.roots([np.conj(beta), np.conj(alpha) - alpha, -beta])
    roots = roots / np.abs(roots)
    if abs(np.conj(beta) * roots[0] + np.conj(alpha)) > 1.0:
        return roots[1], roots[0]
    return roots[0], roots[1]


def _disk_connector(eta_minus, eta_plus):
    """SU(1,1) matrix taking the oriented diameter (-1, 1) to the geodesic
    with the given ideal endpoints."""
    sig = 0.5 * np.angle(eta_plus)
    dlt = 0.5 * (np.angle(eta_minus) - _PI)
    c = math.cos(sig - dlt)
    if c <= 1e-9:
        sig += _PI  # the other branch of arg(eta_plus)/2; same endpoint
        c = math.cos(sig - dlt)
    if c <= 1e-9:
        raise NoConnector("ideal endpoints coincide")
    r = 1.0 / math.sqrt(c)
    W = r * complex(math.cos(sig), math.sin(sig))
    V = r * complex(math.cos(dlt), math.sin(dlt))
    alpha = 0.5 * (W + V)
    beta = 0.5 * (W - V)
    return np.array([[alpha, beta],
                     [np.conj(beta), np.conj(alpha)]])


class _Connector:
    """Unit-speed geodesic between two ideal points, reduced to the domain."""

    def __init__(self, model, M):
        self.model = model
        self.M = M

    def state(self, t):
        z0 = math.tanh(0.5 * self.model.k * t)
        z = mobius_apply(self.M, z0)
        psi = mobius_angle_shift(self.M, z0)
        x, y, psi, _ = self.model.reduce_state(z.real, z.imag, psi)
        return UnitTangentState((x, y), psi, model=self.model)

    def scan(self, ts):
        xs = np.empty(len(ts))
        ys = np.empty(len(ts))
        ps = np.empty(len(ts))
        for i, t in enumerate(ts):
            st = self.state(t)
            xs[i], ys[i], ps[i] = st.x, st.y, st.psi
        return xs, ys, ps


def _dip_pair(conn_arrays, model, path_first, path_second, ts, thr, margin):
    """Latest time the connector shadows the first orbit and the earliest
    later time it shadows the second; returns (t, argmin sample) pairs."""
    d1 = _phase_dist_matrix(model, conn_arrays,
                            (path_first.x, path_first.y, path_first.psi))
    d2 = _phase_dist_matrix(model, conn_arrays,
                            (path_second.x, path_second.y, path_second.psi))
    near1 = np.nonzero(d1.min(axis=1) <= thr)[0]
    near2 = np.nonzero(d2.min(axis=1) <= thr)[0]
    if near1.size == 0 or near2.size == 0:
        raise NoConnector("connector never comes within %.3g of an axis; "
                          "extend the scan window" % thr)
    i1 = int(near1.max())
    later = near2[ts[near2] > ts[i1] + margin]
    if later.size == 0:
        raise NoConnector("axes shadow the connector in the wrong order; "
                          "extend the scan window")
    i2 = int(later.min())
    return ((ts[i1], int(d1[i1].argmin())), (ts[i2], int(d2[i2].argmin())))


def bridge_orbits(path_a, path_b, delta=1e-2, n_pad=1, dt=1e-3, step=0.05,
                  t_scan=None):
    """Pseudo-orbit alternating between two closed octagon geodesics.

    Connecting geodesics share ideal endpoints with the two axes, so they
    shadow one orbit in the far past and the other in the far future. The
    legs are cut where the connectors dip within delta/2 of each axis;
    every junction jump is then below delta.
    """
    model = path_a.model
    if isinstance(model, CollarProfile):
        raise HypothesisViolation(
            "collar geodesics are Clairaut-integrable; no transverse closed "
            "orbits exist to bridge")
    if not isinstance(model, OctagonHyperbolic):
        raise NoConnector("bridging needs the compact octagon chart")
    if (not isinstance(path_b.model, OctagonHyperbolic)
            or path_b.model.k != model.k):
        raise ConfigError("orbits live on different models")
    if not (path_a.closed and path_b.closed):
        raise NotClosed("bridging needs two closed orbits")

    ea_m, ea_p = _axis_endpoints(model, path_a)
    eb_m, eb_p = _axis_endpoints(model, path_b)
    if abs(ea_m - eb_m) < 1e-9 and abs(ea_p - eb_p) < 1e-9:
        # same axis: the bridge degenerates to the orbit itself
        return make_pseudo_orbit(model, [(path_a.start, path_a.period)], dt)

    c1 = _Connector(model, _disk_connector(ea_m, eb_p))
    c2 = _Connector(model, _disk_connector(eb_m, ea_p))
    if t_scan is None:
        t_scan = 14.0 / model.k
    ts = np.arange(-t_scan, t_scan + 0.5 * step, step)
    thr = 0.5 * delta
    margin = 1.0 / model.k

    (t1, ia1), (t2, ib1) = _dip_pair(c1.scan(ts), model, path_a, path_b,
                                     ts, thr, margin)
    (s1, ib2), (s2, ia2) = _dip_pair(c2.scan(ts), model, path_b, path_a,
                                     ts, thr, margin)

    TA, TB = path_a.period, path_b.period
    u1 = ia1 * path_a.dt  # axis-A time where C1 leaves A
    u2 = ib1 * path_b.dt  # axis-B time where C1 lands on B
    v1 = ib2 * path_b.dt  # axis-B time where C2 leaves B
    v2 = ia2 * path_a.dt  # axis-A time where C2 lands on A
    legs = [
        (path_a.state(ia2), ((u1 - v2) % TA) + n_pad * TA),
        (c1.state(t1), t2 - t1),
        (path_b.state(ib1), ((v1 - u2) % TB) + n_pad * TB),
        (c2.state(s1), s2 - s1),
    ]
    pseudo = make_pseudo_orbit(model, legs, dt)
    if pseudo.max_jump > delta:
        raise ConvergenceFailure("bridge jumps reach %.3g, above delta %.3g"
                                 % (pseudo.max_jump, delta))
    return pseudo


# ---------------------------------------------------------------------------
# orbit records and level filters


@dataclass
class OrbitRecord:
    name: str
    model: object
    period: float
    chi: float
    chi_bound: float
    saturated: bool
    label: str
    seed: Optional[tuple]
    path: Optional[GeodesicPath]
    signal: Optional[CurvatureSignal]

    def to_dict(self):
        return {
            "name": self.name,
            "model": self.model.to_config(),
            "period": self.period,
            "chi": self.chi,
            "chi_bound": self.chi_bound,
            "saturated": bool(self.saturated),
            "label": self.label,
            "seed": list(self.seed) if self.seed is not None else None,
        }


def _signal_periodic_exponent(signal, dt, tol=1e-13, max_iter=200):
    """Periodic Riccati solution over one signal period by bisection.

    The period map preserves [0, sqrt(sup -K)] and is monotone, exactly as
    along a closed charted orbit; a flat signal collapses the cone to {0}.
    """
    T = signal.period
    top = math.sqrt(signal.max_abs_curvature())
    if top == 0.0:
        trace = riccati_integrate(signal, 0.0, T=T, dt=dt)
        return 0.0, 0.0, trace

    def period_map(u0):
        return float(riccati_integrate(signal, u0, T=T, dt=dt).u[-1])

    lo, hi = 0.0, top
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        mid = 0.5 * (lo + hi)
        if period_map(mid) - mid >= 0.0:
            lo = mid
        else:
            hi = mid
    u_star = 0.5 * (lo + hi)
    trace = riccati_integrate(signal, u_star, T=T, dt=dt)
    return float(trace.mean_u()), u_star, trace


def orbit_record(name, model, path=None, v0=None, period=None, dt=1e-3):
    """Classify one closed orbit: exponent, Riccati bound, rank label."""
    k_scale = model.max_abs_curvature()
    kappa_flat = 1e-3 * k_scale
    u_flat = 1e-2 * math.sqrt(k_scale)

    if isinstance(model, CurvatureSignal):
        if model.period is None:
            raise ConfigError("signal orbits need a periodic signal")
        chi, _, trace = _signal_periodic_exponent(model, dt)
        label = rank_classify(trace, kappa_flat, u_flat).label
        bound = math.sqrt(max(0.0, -trace.K.min()))
        return OrbitRecord(name, model, float(model.period), chi, bound,
                           abs(chi - bound) < 1e-10, label, None, None, model)

    if path is None:
        if v0 is None or period is None:
            raise ConfigError("need a closed path or a seed and period")
        path = integrate_geodesic(model, v0, float(period), dt)
    if not path.closed:
        raise NotClosed("orbit %r does not close" % name)
    exp = closed_orbit_exponent(path)
    trace = riccati_integrate(path, exp.u_fixed)
    label = rank_classify(trace, kappa_flat, u_flat).label
    seed = (float(path.x[0]), float(path.y[0]), float(path.psi[0]))
    return OrbitRecord(name, model, float(path.period), float(exp.chi),
                       float(exp.upper_bound), bool(exp.saturated), label,
                       seed, path, None)


class OrbitLibrary:
    """Named closed orbits, JSON round-trippable via seeds."""

    def __init__(self, records=()):
        self._recs = {}
        for rec in records:
            self.add(rec)

    def add(self, rec):
        if rec.name in self._recs:
            raise ConfigError("duplicate orbit name %r" % rec.name)
        self._recs[rec.name] = rec

    @property
    def names(self):
        return list(self._recs)

    def __getitem__(self, name):
        return self._recs[name]

    def __len__(self):
        return len(self._recs)

    def __iter__(self):
        return iter(self._recs.values())

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump({"orbits": [r.to_dict() for r in self]}, fh, indent=1)

    @classmethod
    def from_json(cls, path, dt=1e-3):
        with open(path) as fh:
            data = json.load(fh)
        lib = cls()
        for d in data["orbits"]:
            model = model_from_config(d["model"])
            if d["seed"] is None:
                rec = orbit_record(d["name"], model, dt=dt)
            else:
                sx, sy, sp = d["seed"]
                v0 = UnitTangentState((sx, sy), sp, model=model)
                rec = orbit_record(d["name"], model, v0=v0,
                                   period=d["period"], dt=dt)
            if abs(rec.chi - d["chi"]) > 1e-8:
                raise ConfigError("stored exponent for %r drifted by %.3g"
                                  % (d["name"], abs(rec.chi - d["chi"])))
            lib.add(rec)
        return lib


def orbit_distance(rec_a, rec_b, stride=25):
    """Symmetric Hausdorff phase distance; inf across different models."""
    pa = rec_a.path if isinstance(rec_a, OrbitRecord) else rec_a
    pb = rec_b.path if isinstance(rec_b, OrbitRecord) else rec_b
    if pa is None or pb is None:
        return math.inf  # signal orbits carry no chart position
    if pa.model.to_config() != pb.model.to_config():
        return math.inf
    a = _strided_arrays(pa, stride)
    b = _strided_arrays(pb, stride)
    D = _phase_dist_matrix(pa.model, a, b)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


@dataclass
class LambdaEllReport:
    ells: tuple
    members: tuple
    chis: dict

    def is_nested(self):
        return all(set(self.members[i + 1]) <= set(self.members[i])
                   for i in range(len(self.members) - 1))

    @property
    def counts(self):
        return [len(m) for m in self.members]


def build_lambda_ell(library, ells):
    """Members of the exponent-level sets: chi >= ell and not flat."""
    ells = sorted(float(e) for e in ells)
    if not ells or ells[0] <= 0.0:
        raise ConfigError("levels must be positive")
    members = tuple(
        tuple(rec.name for rec in library
              if rec.label != "flat" and rec.chi >= ell - 1e-12)
        for ell in ells)
    return LambdaEllReport(tuple(ells), members,
                           {rec.name: rec.chi for rec in library})


# ---------------------------------------------------------------------------
# Poincare-section coding


@dataclass(frozen=True)
class SectionSpec:
    """Transversal {x = level, dx/dt > 0} with a catchment radius."""

    level: float = 0.0
    radius: float = 1.0
    eps0: float = 0.25
    linkage: float = 0.15
    center_y: Optional[float] = None


@dataclass
class Crossing:
    orbit: int
    t: float
    state: UnitTangentState
    cell: int = -1


def _base_dist(model, x1, y1, x2, y2):
    if isinstance(model, CollarProfile):
        f = model.warp(0.5 * (x1 + x2))[0]
        return math.hypot(x1 - x2, f * wrap_angle(y1 - y2))
    return model.base_distance(x1, y1, x2, y2)


def _bisect_crossing(model, state, dt_local, level, iters=48):
    lo, hi = 0.0, dt_local
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        p = integrate_geodesic(model, state, mid, 0.5 * mid,
                               check_every=10 ** 9)
        if p.x[-1] - level >= 0.0:
            hi = mid
        else:
            lo = mid
    p = integrate_geodesic(model, state, hi, 0.5 * hi, check_every=10 ** 9)
    return hi, p.end


class SectionCoding:
    """Finite coding of a family of closed orbits through one section.

    matrix/labels/phi/roof are what the symbolic layer consumes: 0/1
    transitions between crossing cells, the mean unstable-potential weight
    and the mean return time of the transitions leaving each cell.
    """

    def __init__(self, matrix, labels, phi, roof, crossings, cells, spec,
                 model):
        self.matrix = matrix
        self.labels = labels
        self.phi = phi
        self.roof = roof
        self.crossings = crossings
        self.cells = cells
        self.spec = spec
        self.model = model

    @property
    def n_cells(self):
        return len(self.labels)

    def is_strongly_connected(self):
        from .symbolic import Sft
        return Sft(self.matrix, self.labels).is_irreducible()

    def suspension(self):
        from .symbolic import SuspensionModel
        return SuspensionModel.from_section_coding(self)


def _orbit_crossings(model, path, oi, spec, center):
    ev = set(int(r[0]) for r in path.events) if path.events.shape[0] else set()
    h = path.x - spec.level
    idxs = np.nonzero((h[:-1] < 0.0) & (h[1:] >= 0.0))[0]
    out = []
    for i in idxs:
        if (i + 1) in ev:
            continue  # reduction inside the bracket: not a real crossing
        tau, st = _bisect_crossing(model, path.state(int(i)),
                                   float(path.t[i + 1] - path.t[i]),
                                   spec.level)
        if math.cos(st.psi) <= 0.0:
            continue
        if _base_dist(model, st.x, st.y, center.x, center.y) > spec.radius:
            continue  # radius gates the base point only; angles are free
        out.append(Crossing(oi, float(path.t[i] + tau), st))
    if not out:
        raise NoCrossing("orbit %d misses the section inside radius %g"
                         % (oi, spec.radius))
    return out


def _cumulative_phi(path):
    exp = closed_orbit_exponent(path)
    tr = riccati_integrate(path, exp.u_fixed)
    pu = tr.phi_u()
    dt = np.diff(path.t)
    return np.concatenate([[0.0], np.cumsum(0.5 * (pu[1:] + pu[:-1]) * dt)])


def build_markov_coding(paths, spec=None):
    """Cluster section crossings into cells and read off the transitions."""
    spec = spec or SectionSpec()
    if not paths:
        raise ConfigError("need at least one closed orbit")
    model = paths[0].model
    if isinstance(model, CurvatureSignal):
        raise ConfigError("codings need a chart")
    for p in paths:
        if not p.closed:
            raise NotClosed("all coded orbits must be closed")
        if p.model.to_config() != model.to_config():
            raise ConfigError("orbits live on different models")

    cy = spec.center_y
    if cy is None:
        cy = 1.0 if isinstance(model, ConstantNegative) else 0.0
    center = UnitTangentState((spec.level, cy), 0.0, model=model)

    per_orbit = [_orbit_crossings(model, p, oi, spec, center)
                 for oi, p in enumerate(paths)]
    crossings = [c for chunk in per_orbit for c in chunk]

    # soft clusters: chain linkage within each cell
    m = len(crossings)
    xs = np.array([c.state.x for c in crossings])
    ys = np.array([c.state.y for c in crossings])
    ps = np.array([c.state.psi for c in crossings])
    D = _phase_dist_matrix(model, (xs, ys, ps), (xs, ys, ps))
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if D[i, j] <= spec.linkage:
                parent[find(i)] = find(j)

    groups = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    ordered = sorted(groups.values(),
                     key=lambda g: min((crossings[i].orbit, crossings[i].t)
                                       for i in g))
    for ci, g in enumerate(ordered):
        diam = float(D[np.ix_(g, g)].max())
        if diam > 3.0 * spec.eps0:
            raise CellOverlap("cell %d has diameter %.3g > %.3g; the "
                              "section mixes distinct passes" %
                              (ci, diam, 3.0 * spec.eps0))
        for i in g:
            crossings[i].cell = ci

    ncell = len(ordered)
    matrix = np.zeros((ncell, ncell), dtype=int)
    roof_sum = np.zeros(ncell)
    phi_sum = np.zeros(ncell)
    count = np.zeros(ncell)
    for oi, chunk in enumerate(per_orbit):
        path = paths[oi]
        F = _cumulative_phi(path)
        T = path.period
        Ftot = F[-1]
        for r, cr in enumerate(chunk):
            nxt = chunk[(r + 1) % len(chunk)]
            if r + 1 < len(chunk):
                dt_r = nxt.t - cr.t
                w = np.interp(nxt.t, path.t, F) - np.interp(cr.t, path.t, F)
            else:
                dt_r = T - cr.t + nxt.t
                w = (Ftot - np.interp(cr.t, path.t, F)
                     + np.interp(nxt.t, path.t, F))
            a, b = cr.cell, nxt.cell
            matrix[a, b] = 1
            roof_sum[a] += dt_r
            phi_sum[a] += w
            count[a] += 1.0

    labels = tuple("c%d" % i for i in range(ncell))
    return SectionCoding(matrix, labels, phi_sum / count, roof_sum / count,
                         crossings, [tuple(g) for g in ordered], spec, model)

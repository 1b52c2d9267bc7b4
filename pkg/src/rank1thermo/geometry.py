"""Surface models, geodesic integration, curvature evaluation.

Four model variants supply curvature along orbits and (except for bare
curvature signals) a chart to integrate the geodesic flow in:

* ConstantNegative(k): upper half-plane with metric (dx^2+dy^2)/(k y)^2,
  curvature identically -k^2. Good for long single geodesics: the chart
  never degenerates along them.
* CollarProfile: warped band ds^2 + f(s)^2 dtheta^2 with a convex closed-form
  warp; K = -f''/f. With a linear stretch of f the band |s| <= width is an
  exact flat strip (K = 0), which is how zero-curvature behavior is produced
  geometrically in this package.
* CurvatureSignal: a bare map t -> K(t) <= 0 along an abstract unit-speed
  orbit. No chart, no positions; it exists to feed the Riccati/Jacobi layer
  exact curvature histories.
* OctagonHyperbolic(k): genus-2 surface as the regular hyperbolic octagon in
  the Poincare disk with opposite sides identified by eight hyperbolic
  translations. Closed geodesics and deck words live here.

Direction is stored as the chart angle psi, so states are unit vectors by
representation. Distances combine the chart's base distance with the angle
gap in quadrature; for the octagon the minimum over the eight side-pairing
images is taken, so equivalent states have distance zero.
"""

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ChartEscape, ConfigError, DomainError, StepTooLarge

_PI = math.pi
_TWO_PI = 2.0 * math.pi


def wrap_angle(psi):
    """Reduce an angle to (-pi, pi]."""
    if psi > _PI or psi <= -_PI:
        psi -= _TWO_PI * math.floor((psi + _PI) / _TWO_PI)
    return psi


# ---------------------------------------------------------------------------
# states and paths


@dataclass
class UnitTangentState:
    """A unit tangent vector: chart position, direction angle, time stamp."""

    position: Optional[tuple]
    psi: Optional[float]
    t: float = 0.0
    model: object = None

    def __post_init__(self):
        if self.position is not None:
            self.position = (float(self.position[0]), float(self.position[1]))
        if self.psi is not None:
            self.psi = wrap_angle(float(self.psi))

    @property
    def x(self):
        return self.position[0]

    @property
    def y(self):
        return self.position[1]


class GeodesicPath:
    """Uniformly sampled geodesic with curvature along it.

    Arrays: t (strictly increasing), x, y, psi, K, and Kmid (curvature at
    step midpoints, used to replay Riccati integrations along the path
    without re-flowing). events holds octagon reduction records as rows
    (sample index, map index) in integration order.
    """

    def __init__(self, model, t, x, y, psi, K, Kmid, events=None,
                 closed=False, period=None, reversed_time=False):
        self.model = model
        self.t = np.asarray(t, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.psi = np.asarray(psi, dtype=float)
        self.K = np.asarray(K, dtype=float)
        self.Kmid = None if Kmid is None else np.asarray(Kmid, dtype=float)
        self.events = (np.empty((0, 2), dtype=np.int64)
                       if events is None else np.asarray(events, dtype=np.int64))
        self.closed = bool(closed)
        self.period = period
        self.reversed_time = bool(reversed_time)

    def __len__(self):
        return self.t.shape[0]

    @property
    def dt(self):
        return self.t[1] - self.t[0] if len(self) > 1 else 0.0

    def state(self, i):
        return UnitTangentState((self.x[i], self.y[i]), self.psi[i],
                                t=self.t[i], model=self.model)

    @property
    def start(self):
        return self.state(0)

    @property
    def end(self):
        return self.state(len(self) - 1)

    def k_half_grid(self):
        """Curvature on the half-step grid (2n+1 values) for Riccati replay."""
        n = len(self) - 1
        out = np.empty(2 * n + 1)
        out[0::2] = self.K
        if self.Kmid is None:
            out[1::2] = 0.5 * (self.K[:-1] + self.K[1:])
        else:
            out[1::2] = self.Kmid[:n]
        return out

    def deck_word(self):
        """Map indices applied during integration, in order."""
        if self.reversed_time:
            raise ConfigError("deck words are only tracked on forward paths")
        return [int(j) for j in self.events[:, 1]]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,x,y,psi,K\n")
            for i in range(len(self)):
                fh.write("%.17g,%.17g,%.17g,%.17g,%.17g\n"
                         % (self.t[i], self.x[i], self.y[i], self.psi[i], self.K[i]))


# ---------------------------------------------------------------------------
# octagon group data

# Side-pairing translations of the regular hyperbolic octagon (genus-2
# identification): T_j translates by L along the diameter at angle j*pi/4,
# where cosh(L/2) = 1 + sqrt(2). T_{j+4} = T_j^{-1}. The fundamental domain
# is the complement of the eight isometric-circle disks |z - c_j| < r_c.


@lru_cache(maxsize=1)
def octagon_tables():
    a = 1.0 + math.sqrt(2.0)
    s = math.sqrt(a * a - 1.0)
    side_length = 2.0 * math.acosh(a)
    maps = np.empty((8, 2, 2), dtype=complex)
    centers = np.empty(8, dtype=complex)
    for j in range(8):
        b = s * complex(math.cos(j * _PI / 4.0), math.sin(j * _PI / 4.0))
        maps[j] = [[a, b], [b.conjugate(), a]]
        centers[j] = (a / s) * complex(math.cos(j * _PI / 4.0),
                                       math.sin(j * _PI / 4.0))
    return {
        "maps": maps,
        "centers": centers,
        "r_c": 1.0 / s,
        "d_c": a / s,
        "edge_radius": math.tanh(0.5 * math.acosh(a)),  # axis exit abscissa
        "side_length": side_length,
    }


def mobius_apply(M, z):
    return (M[0, 0] * z + M[0, 1]) / (M[1, 0] * z + M[1, 1])


def mobius_angle_shift(M, z):
    """arg of the derivative of z -> M z (SU(1,1) form): -2 arg(conj(b) z + conj(a))."""
    return -2.0 * np.angle(M[1, 0] * z + M[1, 1])


# ---------------------------------------------------------------------------
# models


class SurfaceModel:
    """Base for the four concrete variants. Immutable after construction."""

    variant = "abstract"

    def config_key(self):
        return tuple(sorted(self.to_config().items()))

    def same_chart(self, other):
        return self is other or (type(self) is type(other)
                                 and self.config_key() == other.config_key())

    def kernel_spec(self):
        raise ChartEscape("%s has no integration chart" % self.variant)

    def contains(self, state):
        return True

    def curvature_xy(self, x, y):
        raise ChartEscape("%s has no chart positions" % self.variant)

    def max_abs_curvature(self):
        raise NotImplementedError

    def sample_state(self, rng):
        raise ChartEscape("%s cannot be seeded" % self.variant)

    def to_config(self):
        raise NotImplementedError


class ConstantNegative(SurfaceModel):
    """Upper half-plane, curvature -k^2."""

    variant = "ConstantNegative"

    def __init__(self, k=1.0):
        k = float(k)
        if not (k > 0.0) or not math.isfinite(k):
            raise ConfigError("ConstantNegative needs k > 0, got %r" % k)
        self.k = k

    def kernel_spec(self):
        return _kernels.MODEL_HALF_PLANE, np.array([self.k])

    def contains(self, state):
        return state.position is not None and state.y > 0.0

    def curvature_xy(self, x, y):
        if y <= 0.0:
            raise DomainError("half-plane chart needs y > 0, got y = %g" % y)
        return -self.k * self.k

    def max_abs_curvature(self):
        return self.k * self.k

    def base_distance(self, x1, y1, x2, y2):
        dx = x1 - x2
        dy = y1 - y2
        arg = 1.0 + (dx * dx + dy * dy) / (2.0 * y1 * y2)
        return math.acosh(max(arg, 1.0)) / self.k

    def sample_state(self, rng):
        x = rng.uniform(-1.0, 1.0)
        y = rng.uniform(0.5, 2.0)
        psi = rng.uniform(-_PI, _PI)
        return UnitTangentState((x, y), psi, model=self)

    def to_config(self):
        return {"variant": self.variant, "k": self.k}


class CollarProfile(SurfaceModel):
    """Warped band ds^2 + f(s)^2 dtheta^2 on s in [-half_length, half_length].

    f(s) = base*cosh(rate*d) + (slope/rate)*sinh(rate*d) with
    sb = clamp(s, -width, width), d = s - sb, base = f0 + slope*sb.
    Inside |s| <= width the warp is linear (K = 0 when coupled with the
    band: an exact flat strip); outside, K = -rate^2. f is C^1 at the seam
    and the curvature has a step there, which the fixed-step integrator
    tolerates at the cost of one low-order step per crossing.

    theta is an angle: the band is a cylinder, circumference 2*pi*f(s).
    """

    variant = "CollarProfile"

    def __init__(self, rate=1.0, width=0.0, slope=0.0, half_length=6.0, f0=1.0):
        rate = float(rate)
        width = float(width)
        slope = float(slope)
        half_length = float(half_length)
        f0 = float(f0)
        if rate < 0.0:
            raise ConfigError("collar rate must be >= 0")
        if width < 0.0 or width > half_length:
            raise ConfigError("collar width must lie in [0, half_length]")
        if half_length <= 0.0:
            raise ConfigError("collar half_length must be > 0")
        if f0 <= 0.0:
            raise ConfigError("collar f0 must be > 0")
        self.rate = rate
        self.width = width
        self.slope = slope
        self.half_length = half_length
        self.f0 = f0
        ss = np.linspace(-half_length, half_length, 4001)
        fs = np.array([self.warp(s)[0] for s in ss])
        if fs.min() <= 0.0:
            raise ConfigError("collar warp must stay positive on the band")

    @classmethod
    def cosh_warp(cls, rate=1.0, f0=1.0, half_length=6.0):
        return cls(rate=rate, width=0.0, slope=0.0,
                   half_length=half_length, f0=f0)

    @classmethod
    def linear_band(cls, width, rate=1.0, slope=0.0, f0=1.0, half_length=6.0):
        return cls(rate=rate, width=width, slope=slope,
                   half_length=half_length, f0=f0)

    def warp(self, s):
        """(f, f', f'') at s."""
        from ._kernels import _fallback
        return _fallback._collar_f(s, self.rate, self.width, self.slope, self.f0)

    def kernel_spec(self):
        return _kernels.MODEL_COLLAR, np.array(
            [self.rate, self.width, self.slope, self.half_length, self.f0])

    def contains(self, state):
        return state.position is not None and abs(state.x) <= self.half_length

    def curvature_xy(self, x, y):
        if abs(x) > self.half_length:
            raise DomainError("collar band is |s| <= %g, got s = %g"
                              % (self.half_length, x))
        f, _, fpp = self.warp(x)
        return -fpp / f

    def max_abs_curvature(self):
        return self.rate * self.rate

    def flat_band(self):
        """(lo, hi) of the exact flat strip, or None."""
        if self.width > 0.0 and self.slope == 0.0:
            return (-self.width, self.width)
        return None

    def is_waist(self, s0):
        """True when the theta-circle at s0 is a geodesic (f'(s0) = 0)."""
        return self.warp(s0)[1] == 0.0

    def sample_state(self, rng):
        s = rng.uniform(-0.5 * self.half_length, 0.5 * self.half_length)
        th = rng.uniform(0.0, _TWO_PI)
        psi = rng.uniform(-_PI, _PI)
        return UnitTangentState((s, th), psi, model=self)

    def to_config(self):
        return {"variant": self.variant, "rate": self.rate, "width": self.width,
                "slope": self.slope, "half_length": self.half_length,
                "f0": self.f0}


class CurvatureSignal(SurfaceModel):
    """Prescribed curvature history t -> K(t) <= 0 along an abstract orbit.

    Chart-free: integrate_geodesic and position queries raise ChartEscape.
    Constructed from named forms (serializable) or a raw callable (not).
    The callable must be defined on all of R; named forms extend constantly.
    """

    variant = "CurvatureSignal"

    _PROBE = np.linspace(-200.0, 200.0, 3203)

    def __init__(self, fn, form=None, form_params=None, period=None):
        self.fn = fn
        self.form = form
        self.form_params = dict(form_params or {})
        self.period = period
        worst = max(float(fn(t)) for t in self._PROBE)
        if worst > 1e-12:
            raise ConfigError("curvature signal reaches K = %g > 0" % worst)

    @classmethod
    def constant(cls, value):
        value = float(value)
        return cls(lambda t: value, form="constant", form_params={"value": value})

    @classmethod
    def step(cls, before, after, t_switch=0.0):
        before = float(before)
        after = float(after)
        t_switch = float(t_switch)

        def fn(t):
            return before if t < t_switch else after

        return cls(fn, form="step", form_params={
            "before": before, "after": after, "t_switch": t_switch})

    @classmethod
    def piecewise(cls, breaks, values):
        """values[i] on [breaks[i-1], breaks[i]); constant extension outside."""
        breaks = [float(b) for b in breaks]
        values = [float(v) for v in values]
        if len(values) != len(breaks) + 1:
            raise ConfigError("piecewise signal needs len(values) = len(breaks)+1")

        def fn(t):
            i = 0
            while i < len(breaks) and t >= breaks[i]:
                i += 1
            return values[i]

        return cls(fn, form="piecewise",
                   form_params={"breaks": breaks, "values": values})

    @classmethod
    def sine(cls, mean, amplitude, period):
        """K(t) = mean + amplitude*cos(2 pi t / period); needs mean+|amp| <= 0."""
        mean = float(mean)
        amplitude = float(amplitude)
        period = float(period)
        if period <= 0.0:
            raise ConfigError("sine signal needs period > 0")
        if mean + abs(amplitude) > 0.0:
            raise ConfigError("sine signal leaves K <= 0")
        om = _TWO_PI / period

        def fn(t):
            return mean + amplitude * math.cos(om * t)

        return cls(fn, form="sine", form_params={
            "mean": mean, "amplitude": amplitude, "period": period},
            period=period)

    @classmethod
    def table(cls, ts, Ks):
        ts = np.asarray(ts, dtype=float)
        Ks = np.asarray(Ks, dtype=float)
        if ts.ndim != 1 or ts.shape != Ks.shape or ts.shape[0] < 2:
            raise ConfigError("table signal needs matching 1-d arrays")
        if np.any(np.diff(ts) <= 0.0):
            raise ConfigError("table signal times must increase")

        def fn(t):
            return float(np.interp(t, ts, Ks))

        return cls(fn, form="table",
                   form_params={"ts": ts.tolist(), "Ks": Ks.tolist()})

    def curvature_t(self, t):
        return float(self.fn(t))

    def k_half_grid(self, t0, n, dt):
        """K on the half-step grid starting at t0 (2n+1 samples)."""
        ts = t0 + 0.5 * dt * np.arange(2 * n + 1)
        return np.array([self.fn(t) for t in ts])

    def max_abs_curvature(self):
        return max(-float(self.fn(t)) for t in self._PROBE)

    def to_config(self):
        if self.form is None:
            raise ConfigError("raw-callable signals are not serializable; "
                              "use a named form")
        cfg = {"variant": self.variant, "form": self.form}
        cfg.update(self.form_params)
        return cfg


class OctagonHyperbolic(SurfaceModel):
    """Genus-2 constant-curvature surface: regular octagon in the disk.

    The chart is the Poincare disk with metric 2/(k(1-|z|^2)) |dz|, so the
    same side-pairing group works for every k and metric lengths scale by
    1/k. States are kept in the closed fundamental domain; integration
    reduces on the fly and records the deck transformations applied.
    """

    variant = "OctagonHyperbolic"

    def __init__(self, k=1.0):
        k = float(k)
        if not (k > 0.0) or not math.isfinite(k):
            raise ConfigError("OctagonHyperbolic needs k > 0, got %r" % k)
        self.k = k
        self.tables = octagon_tables()

    @property
    def axis_period(self):
        """Metric length of each side-pairing translation (systole length)."""
        return self.tables["side_length"] / self.k

    def kernel_spec(self):
        t = self.tables
        params = np.empty(51)
        params[0] = self.k
        params[1] = 1.0
        params[2] = t["r_c"]
        for j in range(8):
            M = t["maps"][j]
            params[3 + 4 * j] = M[0, 0].real
            params[4 + 4 * j] = M[0, 0].imag
            params[5 + 4 * j] = M[0, 1].real
            params[6 + 4 * j] = M[0, 1].imag
            params[35 + 2 * j] = t["centers"][j].real
            params[36 + 2 * j] = t["centers"][j].imag
        return _kernels.MODEL_DISK, params

    def in_domain(self, z, tol=1e-12):
        if abs(z) >= 1.0:
            return False
        for c in self.tables["centers"]:
            if abs(z - c) < self.tables["r_c"] - tol:
                return False
        return True

    def contains(self, state):
        if state.position is None:
            return False
        return abs(complex(state.x, state.y)) < 1.0

    def curvature_xy(self, x, y):
        if x * x + y * y >= 1.0:
            raise DomainError("disk chart needs |z| < 1")
        return -self.k * self.k

    def max_abs_curvature(self):
        return self.k * self.k

    def base_distance(self, x1, y1, x2, y2):
        dx = x1 - x2
        dy = y1 - y2
        d2 = dx * dx + dy * dy
        den = (1.0 - x1 * x1 - y1 * y1) * (1.0 - x2 * x2 - y2 * y2)
        return math.acosh(max(1.0 + 2.0 * d2 / den, 1.0)) / self.k

    def reduce_state(self, x, y, psi):
        """Pull (x, y, psi) into the fundamental domain; returns state + word."""
        z = complex(x, y)
        word = []
        maps = self.tables["maps"]
        for _ in range(64):
            if self.in_domain(z, tol=0.0):
                break
            best = None
            bestm = 4.0
            for j in range(8):
                zj = mobius_apply(maps[j], z)
                if abs(zj) < bestm:
                    bestm = abs(zj)
                    best = j
            psi = wrap_angle(psi + mobius_angle_shift(maps[best], z))
            z = mobius_apply(maps[best], z)
            word.append(best)
        return z.real, z.imag, psi, word

    def apply_map(self, j, x, y, psi):
        M = self.tables["maps"][j]
        z = complex(x, y)
        zj = mobius_apply(M, z)
        return zj.real, zj.imag, wrap_angle(psi + mobius_angle_shift(M, z))

    def deck_matrix(self, word):
        """Cumulative matrix of applied maps (latest leftmost)."""
        H = np.eye(2, dtype=complex)
        for j in word:
            H = self.tables["maps"][j] @ H
        return H

    def deck_transformation(self, path):
        """Deck word of a closed lift: inverse of the applied-map product."""
        H = self.deck_matrix(path.deck_word())
        # SU(1,1) inverse
        return np.array([[H[1, 1], -H[0, 1]], [-H[1, 0], H[0, 0]]])

    def relator_defect(self):
        """Residual of the genus-2 relator product (should be ~machine zero)."""
        word = [0, 5, 2, 7, 4, 1, 6, 3]
        P = np.eye(2, dtype=complex)
        for j in word:
            P = P @ self.tables["maps"][j]
        return min(np.abs(P - np.eye(2)).max(), np.abs(P + np.eye(2)).max())

    def sample_state(self, rng):
        while True:
            x = rng.uniform(-0.75, 0.75)
            y = rng.uniform(-0.75, 0.75)
            if self.in_domain(complex(x, y)):
                break
        psi = rng.uniform(-_PI, _PI)
        return UnitTangentState((x, y), psi, model=self)

    def to_config(self):
        return {"variant": self.variant, "k": self.k}


# ---------------------------------------------------------------------------
# operations


def integrate_geodesic(model, v0, T, dt, closure_tol=1e-6, err_bound=1e-8,
                       check_every=64, allow_escape=False):
    """Sample g^t(v0) for t in [0, T] (T < 0 integrates backward).

    The step is adjusted to divide T exactly. Returns a GeodesicPath with
    strictly increasing t (backward runs are stored reversed). Raises
    StepTooLarge / DomainError on integrator failure unless allow_escape,
    in which case the truncated path is returned.
    """
    if isinstance(model, CurvatureSignal):
        raise ChartEscape("curvature signals have no positions to integrate")
    if dt <= 0.0:
        raise ConfigError("dt must be positive")
    if T == 0.0:
        raise ConfigError("T must be nonzero")
    if v0.position is None:
        raise ChartEscape("state carries no chart position")

    code, params = model.kernel_spec()
    n = max(1, int(round(abs(T) / dt)))
    dt_eff = T / n
    xs, ys, psis, Ks, Kmid, _, events, status, stop, max_err = _kernels.flow_path(
        code, params, v0.x, v0.y, v0.psi, n, dt_eff,
        with_u=0, check_every=check_every, err_bound=err_bound)

    if status == _kernels.STEP_TOO_LARGE:
        raise StepTooLarge("local error %.3g above bound %.3g near t = %g"
                           % (max_err, err_bound, stop * dt_eff))
    if status == _kernels.CHART_ESCAPE and not allow_escape:
        raise DomainError("orbit left the chart near t = %g" % (stop * dt_eff))

    m = stop + 1
    t = dt_eff * np.arange(m)
    xs, ys, psis, Ks = xs[:m], ys[:m], psis[:m], Ks[:m]
    Kmid = Kmid[:max(m - 1, 1)]
    reversed_time = False
    if T < 0.0:
        t = t[::-1].copy()
        xs = xs[::-1].copy()
        ys = ys[::-1].copy()
        psis = psis[::-1].copy()
        Ks = Ks[::-1].copy()
        Kmid = Kmid[::-1].copy()
        reversed_time = True

    path = GeodesicPath(model, t, xs, ys, psis, Ks, Kmid, events,
                        reversed_time=reversed_time)
    if m == n + 1:
        d = phase_distance(path.start, path.end)
        if d < closure_tol:
            path.closed = True
            path.period = abs(T)
    return path


def curvature_at(model, state):
    """K at a state; signals read the time stamp, charts the position."""
    if isinstance(model, CurvatureSignal):
        return model.curvature_t(state.t)
    if state.position is None:
        raise DomainError("state carries no chart position")
    return model.curvature_xy(state.x, state.y)


def phase_distance(a, b):
    """Sasaki-style distance: base distance and angle gap in quadrature.

    States must share a chart. Octagon states are compared up to the side
    pairings, so deck-equivalent states are at distance zero.
    """
    ma, mb = a.model, b.model
    if ma is None or mb is None or not ma.same_chart(mb):
        raise ConfigError("phase_distance needs two states on one chart")
    if isinstance(ma, CurvatureSignal):
        raise ChartEscape("curvature signals have no phase distance")

    if isinstance(ma, ConstantNegative):
        d = ma.base_distance(a.x, a.y, b.x, b.y)
        dpsi = wrap_angle(a.psi - b.psi)
        return math.hypot(d, dpsi)

    if isinstance(ma, CollarProfile):
        ds = a.x - b.x
        fm = ma.warp(0.5 * (a.x + b.x))[0]
        dth = wrap_angle(a.y - b.y)
        dpsi = wrap_angle(a.psi - b.psi)
        return math.sqrt(ds * ds + (fm * dth) ** 2 + dpsi * dpsi)

    # octagon: minimum over identity and the eight pairings applied to b
    xa, ya, pa, _ = ma.reduce_state(a.x, a.y, a.psi)
    xb, yb, pb, _ = ma.reduce_state(b.x, b.y, b.psi)
    best = math.hypot(ma.base_distance(xa, ya, xb, yb), wrap_angle(pa - pb))
    for j in range(8):
        xj, yj, pj = ma.apply_map(j, xb, yb, pb)
        d = math.hypot(ma.base_distance(xa, ya, xj, yj), wrap_angle(pa - pj))
        if d < best:
            best = d
    return best


# ---------------------------------------------------------------------------
# config plumbing

_VARIANTS = {
    "ConstantNegative": ConstantNegative,
    "CollarProfile": CollarProfile,
    "OctagonHyperbolic": OctagonHyperbolic,
}

_SIGNAL_FORMS = {
    "constant": CurvatureSignal.constant,
    "step": CurvatureSignal.step,
    "piecewise": CurvatureSignal.piecewise,
    "sine": CurvatureSignal.sine,
    "table": CurvatureSignal.table,
}


def model_from_config(cfg):
    """Build a model from a config dict (or JSON string/path)."""
    if isinstance(cfg, str):
        try:
            cfg = json.loads(cfg)
        except json.JSONDecodeError:
            with open(cfg) as fh:
                cfg = json.load(fh)
    if not isinstance(cfg, dict) or "variant" not in cfg:
        raise ConfigError("model config needs a 'variant' tag")
    cfg = dict(cfg)
    variant = cfg.pop("variant")
    if variant == "CurvatureSignal":
        form = cfg.pop("form", None)
        if form not in _SIGNAL_FORMS:
            raise ConfigError("unknown signal form %r" % form)
        try:
            return _SIGNAL_FORMS[form](**cfg)
        except TypeError as exc:
            raise ConfigError("bad signal parameters: %s" % exc) from None
    if variant not in _VARIANTS:
        raise ConfigError("unknown model variant %r" % variant)
    try:
        return _VARIANTS[variant](**cfg)
    except TypeError as exc:
        raise ConfigError("bad model parameters: %s" % exc) from None

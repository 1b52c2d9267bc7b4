"""Pressure curves and their Legendre analysis.

Everything here works on a sampled pressure curve q -> P(q) (convex,
decreasing for the potentials of interest). The interesting structure is:

* corners: one-sided derivatives split where a zero-pressure branch takes
  over (the geometric signature of flat strips). Detection compares the
  left/right 3-point stencils against the drift of the same stencils one
  step into each smooth side, so the threshold scales with the curve's own
  resolution instead of a magic constant.
* Legendre conjugate E(alpha) = inf_q [P(q) + q alpha]: the entropy
  spectrum over unstable exponents alpha. With the curve's generating
  callable attached, grid minima are refined by bounded scalar
  minimization; otherwise they stay grid-accurate. alpha/2-normalized
  quantities: D = E/alpha and dim = 1 + 2 D.
* asymptotic exponent range [chi_min, chi_max] from the end slopes: the
  curve must have straightened out at the window ends (secant drift below
  1e-3) or the window is refused as too narrow.
* family comparisons: pointwise monotonicity, sup-norm gaps to the last
  member, and per-member supporting values at a fixed alpha.
* double conjugation: with alphas taken from the curve's own secant
  slopes, conjugating twice reproduces a convex grid function exactly
  (finite LP duality), which is the self-test used on random curves.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (ConfigError, MonotonicityViolation, RangeTooNarrow,
                     SourceFailure)


class PressureCurve:
    """P(q) on a uniform q grid, optionally with its generating callable."""

    def __init__(self, q, P, source=None, label=None):
        q = np.asarray(q, dtype=float)
        P = np.asarray(P, dtype=float)
        if q.ndim != 1 or q.shape != P.shape or q.shape[0] < 5:
            raise ConfigError("need matching 1-d grids with >= 5 points")
        dq = np.diff(q)
        if dq.min() <= 0.0:
            raise ConfigError("q grid must increase")
        if dq.max() - dq.min() > 1e-9 * dq.max():
            raise ConfigError("q grid must be uniform")
        self.q = q
        self.P = P
        self.source = source
        self.label = label

    @property
    def dq(self):
        return float(self.q[1] - self.q[0])

    def __len__(self):
        return self.q.shape[0]

    def index_of(self, q0):
        i = int(round((q0 - self.q[0]) / self.dq))
        if not (0 <= i < len(self)) or abs(self.q[i] - q0) > 1e-9:
            raise ConfigError("q0 = %g is not on the grid" % q0)
        return i

    def end_slopes(self):
        """(left, right) one-step secant slopes."""
        return (float((self.P[1] - self.P[0]) / self.dq),
                float((self.P[-1] - self.P[-2]) / self.dq))

    def secant_slopes(self):
        return np.diff(self.P) / self.dq

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("q,P\n")
            for qi, pi in zip(self.q, self.P):
                fh.write("%.17g,%.17g\n" % (qi, pi))


def sample_pressure_curve(susp, q_min, q_max, n, label=None):
    """Sample the suspension's flow pressure; keeps the source attached."""
    from .symbolic import flow_pressure
    if n < 5:
        raise ConfigError("need at least 5 grid points")
    src = lambda p: flow_pressure(susp, p)
    q = np.linspace(q_min, q_max, n)
    return PressureCurve(q, np.array([src(p) for p in q]), source=src,
                         label=label)


# ---------------------------------------------------------------------------
# corners


@dataclass
class CornerReport:
    """One-sided derivative data at a grid point."""

    q0: float
    d_left: float
    d_right: float
    jump: float
    resolution: float       # stencil drift on the smooth sides
    corner: bool
    pressure: float
    pesin_ok: bool          # P(q0) = 0 to 1e-8: zero-branch crossover point
    flat_tail_ok: bool      # P = 0 to the right of q0 throughout


def _stencil_left(P, i, dq):
    return (3.0 * P[i] - 4.0 * P[i - 1] + P[i - 2]) / (2.0 * dq)


def _stencil_right(P, i, dq):
    return (-3.0 * P[i] + 4.0 * P[i + 1] - P[i + 2]) / (2.0 * dq)


def detect_corner(curve, q0, factor=10.0):
    """One-sided derivatives at q0 with a resolution-scaled corner verdict.

    The jump |D_R - D_L| is called a corner when it exceeds
    max(factor * resolution, 1e-9), where resolution is how much the same
    stencils drift one step into each smooth side; on a smooth curve both
    are O(dq^2) so nothing is flagged.
    """
    i = curve.index_of(q0)
    if i < 4 or i > len(curve) - 5:
        raise ConfigError("q0 too close to the grid ends for stencils")
    P, dq = curve.P, curve.dq
    d_left = _stencil_left(P, i, dq)
    d_right = _stencil_right(P, i, dq)
    res = max(abs(_stencil_left(P, i - 1, dq) - _stencil_left(P, i - 2, dq)),
              abs(_stencil_right(P, i + 1, dq) - _stencil_right(P, i + 2, dq)))
    jump = d_right - d_left
    corner = bool(abs(jump) > max(factor * res, 1e-9))
    return CornerReport(
        q0=float(curve.q[i]), d_left=float(d_left), d_right=float(d_right),
        jump=float(jump),
        resolution=float(res), corner=corner, pressure=float(P[i]),
        pesin_ok=bool(abs(P[i]) < 1e-8),
        flat_tail_ok=bool(np.abs(P[i:]).max() < 1e-8))


def scan_corners(curve, factor=10.0):
    """CornerReports for every interior grid point flagged as a corner."""
    out = []
    for i in range(4, len(curve) - 4):
        rep = detect_corner(curve, float(curve.q[i]), factor=factor)
        if rep.corner:
            out.append(rep)
    return out


# ---------------------------------------------------------------------------
# Legendre conjugate


@dataclass
class SpectrumResult:
    """Entropy spectrum E(alpha) with derived dimension data."""

    alphas: np.ndarray
    E: np.ndarray
    D: np.ndarray           # E / alpha (nan where alpha <= 0 or escaped)
    dim: np.ndarray         # 1 + 2 D, reported unclipped
    escaped: np.ndarray     # inf ran off the q window: value unreliable
    q_at_min: np.ndarray
    alpha_reliable: tuple   # open alpha interval resolved by the window

    def valid(self):
        return ~self.escaped & (self.alphas > 0.0)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("alpha,E,D,dim,escaped\n")
            for i in range(len(self.alphas)):
                fh.write("%.17g,%.17g,%.17g,%.17g,%d\n"
                         % (self.alphas[i], self.E[i], self.D[i],
                            self.dim[i], int(self.escaped[i])))


def reliable_alpha_range(curve):
    """Exponents whose conjugate minimum falls inside the q window."""
    s_lo, s_hi = curve.end_slopes()
    return (-s_hi, -s_lo)


def legendre_conjugate(curve, alphas=None, refine=True):
    """E(alpha) = inf over the window of P(q) + q alpha, per alpha.

    Grid minima are refined with the curve's source when available.
    Minima pinned at a window end with the objective still decreasing into
    it are marked escaped: the true infimum lives outside the window.
    """
    lo, hi = reliable_alpha_range(curve)
    if alphas is None:
        if not (hi > lo):
            raise RangeTooNarrow("window slopes leave no interior exponents")
        pad = 0.02 * (hi - lo)
        alphas = np.linspace(lo + pad, hi - pad, 101)
    else:
        alphas = np.asarray(alphas, dtype=float)

    q, P = curve.q, curve.P
    n = len(alphas)
    E = np.empty(n)
    qm = np.empty(n)
    escaped = np.zeros(n, dtype=bool)
    for k, a in enumerate(alphas):
        vals = P + q * a
        i = int(np.argmin(vals))
        E[k] = vals[i]
        qm[k] = q[i]
        if (i == 0 and vals[0] < vals[1]) or \
           (i == len(q) - 1 and vals[-1] < vals[-2]):
            escaped[k] = True
            continue
        if refine and curve.source is not None and 0 < i < len(q) - 1:
            f = curve.source
            try:
                r = minimize_scalar(lambda p: f(p) + p * a,
                                    bounds=(q[i - 1], q[i + 1]),
                                    method="bounded",
                                    options={"xatol": 1e-9})
            except Exception as exc:
                raise SourceFailure(q[i], "pressure source failed during "
                                    "refinement: %s" % exc) from None
            if r.fun < E[k]:
                E[k] = float(r.fun)
                qm[k] = float(r.x)

    with np.errstate(divide="ignore", invalid="ignore"):
        D = np.where(alphas > 0.0, E / alphas, np.nan)
    D = np.where(escaped, np.nan, D)
    dim = 1.0 + 2.0 * D
    return SpectrumResult(alphas, E, D, dim, escaped, qm, (lo, hi))


def exponent_range(curve, settle_tol=1e-3):
    """Asymptotic exponent interval [chi_min, chi_max] from the end slopes.

    chi_min = -P'(+inf), chi_max = -P'(-inf): read off the end secants,
    but only if they have settled (drift from the next secant inward below
    settle_tol); otherwise the window is too narrow to call.
    """
    s = curve.secant_slopes()
    drift_lo = abs(s[0] - s[1])
    drift_hi = abs(s[-1] - s[-2])
    if drift_lo > settle_tol or drift_hi > settle_tol:
        raise RangeTooNarrow(
            "end slopes still drifting (%.2g left, %.2g right): widen the "
            "q window" % (drift_lo, drift_hi))
    return float(-s[-1]), float(-s[0])


# ---------------------------------------------------------------------------
# families


@dataclass
class FamilyReport:
    """Monotone approximation diagnostics for a curve family."""

    sup_gaps: list          # sup-norm gap of each member to the last
    gaps_strictly_decreasing: bool
    supports: list          # per-member inf_q [P(q) + q alpha], or None
    supports_nondecreasing: bool


def family_convergence(curves, alpha=None, tol=1e-12):
    """Check a family increases pointwise toward its last member.

    Raises MonotonicityViolation on the first pointwise decrease between
    consecutive members. Gaps are sup-norm distances to the final curve
    (monotone convergence makes them decrease); with alpha given, the
    per-member supporting values inf_q [P(q) + q alpha] are reported too
    (they inherit monotonicity from pointwise domination, even when some
    member's minimum is clamped at the window edge).
    """
    if len(curves) < 2:
        raise ConfigError("need at least two curves")
    q0 = curves[0].q
    for c in curves[1:]:
        if len(c.q) != len(q0) or np.abs(c.q - q0).max() > 1e-12:
            raise ConfigError("curves must share one q grid")

    for k in range(len(curves) - 1):
        diff = curves[k + 1].P - curves[k].P
        j = int(np.argmin(diff))
        if diff[j] < -tol:
            raise MonotonicityViolation(
                k + 1, float(q0[j]),
                "member %d drops below member %d by %.3g at q = %g"
                % (k + 1, k, -diff[j], q0[j]))

    last = curves[-1].P
    sup_gaps = [float(np.abs(last - c.P).max()) for c in curves]
    dec = all(sup_gaps[i] > sup_gaps[i + 1] - tol
              for i in range(len(sup_gaps) - 1))

    supports = None
    supports_ok = True
    if alpha is not None:
        supports = [float(np.min(c.P + c.q * alpha)) for c in curves]
        supports_ok = all(supports[i] <= supports[i + 1] + tol
                          for i in range(len(supports) - 1))
    return FamilyReport(sup_gaps, dec, supports, supports_ok)


# ---------------------------------------------------------------------------
# double conjugation


def double_conjugate(curve, alphas=None):
    """Fenchel-Moreau hull: conjugate twice, P**(q) = sup_a [E(a) - q a].

    Default alphas are the curve's own negated secant slopes, for which
    the double conjugate of a convex grid function reproduces it exactly;
    for non-convex input the result is its convex minorant. Returns a new
    PressureCurve on the same grid (no source).
    """
    if alphas is None:
        alphas = -curve.secant_slopes()
    alphas = np.unique(np.asarray(alphas, dtype=float))
    q, P = curve.q, curve.P
    # E(a) = min_j P_j + q_j a, vectorized over the alpha set
    E = (P[None, :] + np.outer(alphas, q)).min(axis=1)
    hull = (E[:, None] - np.outer(alphas, q)).max(axis=0)
    return PressureCurve(q, hull, label="hull(%s)" % (curve.label or "curve"))

"""Symbolic suspensions and their thermodynamic pressure.

A subshift of finite type (0/1 transition matrix) with a per-symbol
potential phi and a per-symbol roof r > 0 models a flow section: symbol j
costs phi_j and takes time r_j. The flow pressure of q*phi is the unique c
solving

    P_disc(q phi - c r) = 0,

where P_disc(w) is the log spectral radius of the weighted matrix
B_ij = A_ij exp(w_j). The root exists and is unique because P_disc is
strictly decreasing in c (roof positive). Everything downstream (pressure
curves, corners, Legendre spectra) consumes this function.

Reducible matrices are handled per strongly connected component: the
spectral radius is the max over components, so unions of systems (block
diagonal matrices) take pointwise maxima of pressures. Appending an
isolated one-symbol loop with phi = 0, r = 1 therefore clips the pressure
curve at zero from below, which is how flat-strip behavior enters
symbolically.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.csgraph import connected_components

from .errors import (BracketFailure, ConfigError, ConvergenceFailure,
                     NoConvergence)


class Sft:
    """Subshift of finite type: square 0/1 transition matrix plus labels."""

    def __init__(self, matrix, labels=None):
        A = np.asarray(matrix)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError("transition matrix must be square")
        if not np.all((A == 0) | (A == 1)):
            raise ConfigError("transition matrix entries must be 0 or 1")
        self.matrix = A.astype(float)
        m = A.shape[0]
        if labels is None:
            labels = tuple("s%d" % i for i in range(m))
        else:
            labels = tuple(str(x) for x in labels)
            if len(labels) != m:
                raise ConfigError("need one label per symbol")
        self.labels = labels

    @property
    def n_symbols(self):
        return self.matrix.shape[0]

    def components(self):
        """Strongly connected components as lists of symbol indices."""
        n, tags = connected_components(self.matrix, directed=True,
                                       connection="strong")
        return [list(np.flatnonzero(tags == c)) for c in range(n)]

    def is_irreducible(self):
        return len(self.components()) == 1 and self.matrix.sum() > 0

    def has_cycle(self):
        # a cycle exists iff some component sees an internal edge
        for comp in self.components():
            sub = self.matrix[np.ix_(comp, comp)]
            if sub.sum() > 0:
                return True
        return False


def full_shift(m, labels=None):
    return Sft(np.ones((m, m)), labels)


def golden_mean():
    """Two symbols, '11' forbidden after-symbol-1 style: [[1,1],[1,0]]."""
    return Sft([[1, 1], [1, 0]], labels=("a", "b"))


def single_cycle(n=1, labels=None):
    A = np.zeros((n, n))
    for i in range(n):
        A[i, (i + 1) % n] = 1.0
    return Sft(A, labels)


def union_sft(a, b):
    """Disjoint union: block-diagonal matrix, no cross transitions."""
    na, nb = a.n_symbols, b.n_symbols
    A = np.zeros((na + nb, na + nb))
    A[:na, :na] = a.matrix
    A[na:, na:] = b.matrix
    return Sft(A, a.labels + b.labels)


def sub_sft(sft, keep):
    keep = list(keep)
    A = sft.matrix[np.ix_(keep, keep)]
    return Sft(A, tuple(sft.labels[i] for i in keep))


# ---------------------------------------------------------------------------
# discrete pressure


def _component_radius(B, max_iter=1000000):
    """Spectral radius of an irreducible nonnegative block.

    Shifted power iteration with Collatz-Wielandt enclosure: for positive
    v, lambda lies between min and max of (Mv)_i / v_i, so the returned
    value carries a guaranteed error bound.
    """
    m = B.shape[0]
    sigma = 0.5 * max(B.sum(axis=1).max(), 1e-300)
    M = B + sigma * np.eye(m)
    v = np.ones(m)
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        ratios = w / v
        lo, hi = ratios.min(), ratios.max()
        lam = 0.5 * (lo + hi)
        if hi - lo <= 1e-13 * lam:
            return lam - sigma
        v = w / w.max()
    raise ConvergenceFailure("power iteration stalled: enclosure width %.3g"
                             % (hi - lo))


def discrete_pressure(A, weights, details=False):
    """log spectral radius of B_ij = A_ij exp(weights_j).

    Works per strongly connected component and takes the max, so reducible
    (e.g. block-diagonal) systems are fine. Returns -inf when the shift
    has no cycle at all. With details=True, also returns a dict with the
    per-component log radii.
    """
    A = np.asarray(A, dtype=float)
    w = np.asarray(weights, dtype=float)
    if A.shape[0] != A.shape[1] or w.shape != (A.shape[0],):
        raise ConfigError("matrix/weights shapes disagree")

    shift = float(w.max()) if len(w) else 0.0
    B = A * np.exp(w - shift)[None, :]

    n, tags = connected_components(A, directed=True, connection="strong")
    per = []
    comps = []
    for c in range(n):
        idx = np.flatnonzero(tags == c)
        sub = B[np.ix_(idx, idx)]
        comps.append([int(i) for i in idx])
        if sub.sum() == 0.0:
            per.append(-math.inf)          # transient symbol, no cycle
            continue
        lam = _component_radius(sub)
        per.append(shift + math.log(lam) if lam > 0.0 else -math.inf)
    value = max(per) if per else -math.inf

    if details:
        return value, {"components": comps, "log_radius_per_component": per,
                       "shift": shift}
    return value


# ---------------------------------------------------------------------------
# suspensions


class SuspensionModel:
    """Subshift with per-symbol potential and roof (return time)."""

    def __init__(self, sft, phi, roof):
        phi = np.asarray(phi, dtype=float)
        roof = np.asarray(roof, dtype=float)
        m = sft.n_symbols
        if phi.shape != (m,) or roof.shape != (m,):
            raise ConfigError("phi and roof must have one entry per symbol")
        if np.any(roof <= 0.0):
            raise ConfigError("roof values must be positive")
        if not sft.has_cycle():
            raise ConfigError("suspension needs at least one cycle")
        self.sft = sft
        self.phi = phi
        self.roof = roof

    @property
    def n_symbols(self):
        return self.sft.n_symbols

    def with_zero_component(self, label="flat"):
        """Union with an isolated fixed loop carrying phi = 0, r = 1.

        The pressure of the union is max(pressure, 0) pointwise in q: the
        extra loop contributes the constant zero and the block-diagonal
        spectral radius takes the larger branch.
        """
        zero = single_cycle(1, labels=(label,))
        return SuspensionModel(union_sft(self.sft, zero),
                               np.concatenate([self.phi, [0.0]]),
                               np.concatenate([self.roof, [1.0]]))

    def union(self, other):
        return SuspensionModel(union_sft(self.sft, other.sft),
                               np.concatenate([self.phi, other.phi]),
                               np.concatenate([self.roof, other.roof]))

    @classmethod
    def from_section_coding(cls, coding):
        """Adopt a flow section coding (matrix + per-cell phi/roof means)."""
        return cls(Sft(coding.matrix, getattr(coding, "labels", None)),
                   coding.phi, coding.roof)

    def to_config(self):
        return {
            "matrix": self.sft.matrix.astype(int).tolist(),
            "labels": list(self.sft.labels),
            "phi": self.phi.tolist(),
            "roof": self.roof.tolist(),
        }

    @classmethod
    def from_config(cls, cfg):
        if isinstance(cfg, str):
            try:
                cfg = json.loads(cfg)
            except json.JSONDecodeError:
                with open(cfg) as fh:
                    cfg = json.load(fh)
        try:
            return cls(Sft(cfg["matrix"], cfg.get("labels")),
                       cfg["phi"], cfg["roof"])
        except KeyError as exc:
            raise ConfigError("suspension config missing %s" % exc) from None


def flow_pressure(susp, q=1.0, potential=None, tol=1e-13):
    """Pressure of q*phi for the suspension flow: root of P_disc(w - c r).

    potential overrides q*phi when given (array, one entry per symbol).
    The root is bracketed a priori: |c| <= (max|w| + log m) / min r + 1.
    """
    w = q * susp.phi if potential is None else np.asarray(potential, float)
    if w.shape != (susp.n_symbols,):
        raise ConfigError("potential must have one entry per symbol")
    r = susp.roof
    A = susp.sft.matrix

    M = (np.abs(w).max() + math.log(max(susp.n_symbols, 2))) / r.min() + 1.0

    def g(c):
        return discrete_pressure(A, w - c * r)

    g_lo, g_hi = g(-M), g(M)
    if not (g_lo > 0.0 > g_hi):
        raise BracketFailure("pressure root not bracketed on [-%g, %g]: "
                             "endpoints %.3g, %.3g" % (M, M, g_lo, g_hi))
    return float(brentq(g, -M, M, xtol=tol, rtol=8.9e-16))


@dataclass
class EquilibriumStats:
    """Pressure, exponent, and entropy of the equilibrium state at q."""

    q: float
    pressure: float
    chi: float          # -dP/dq: mean unstable rate of the equilibrium
    entropy: float      # P(q) + q*chi (Legendre relation)
    variance: float     # d2P/dq2: fluctuation of phi under the equilibrium


def equilibrium_stats(susp, q, dq=1e-5):
    """Differentiate the pressure curve at q (Richardson-extrapolated).

    chi lands inside [min(-phi/r), max(-phi/r)] (the exponents realizable
    by invariant measures); a miss means the finite differences failed.
    """
    P = lambda p: flow_pressure(susp, p)
    p0 = P(q)
    ph, pmh = P(q + dq), P(q - dq)
    ph2, pmh2 = P(q + 0.5 * dq), P(q - 0.5 * dq)
    d_h = (ph - pmh) / (2.0 * dq)
    d_h2 = (ph2 - pmh2) / dq
    slope = (4.0 * d_h2 - d_h) / 3.0
    chi = -slope
    var_h = (ph - 2.0 * p0 + pmh) / dq ** 2
    var_h2 = (ph2 - 2.0 * p0 + pmh2) / (0.5 * dq) ** 2
    variance = (4.0 * var_h2 - var_h) / 3.0

    rates = -susp.phi / susp.roof
    lo, hi = rates.min(), rates.max()
    margin = 1e-7 * max(1.0, abs(hi), abs(lo))
    if not (lo - margin <= chi <= hi + margin):
        raise NoConvergence("chi = %.6g escaped the realizable range "
                            "[%.6g, %.6g]" % (chi, lo, hi))
    return EquilibriumStats(q, p0, chi, p0 + q * chi, variance)


@dataclass
class BowenPressure:
    """Periodic-orbit (trace) pressure estimate at word length n."""

    value: float        # log trace(B^n) / (n * mean roof)
    n_used: int
    flow_value: float   # root-finding pressure for comparison
    gap: float


def bowen_orbit_pressure(susp, q=1.0, n_max=14):
    """Estimate pressure from periodic words of length <= n_max.

    Uses the largest n with trace(B^n) > 0 (odd lengths can die on
    periodic shifts). Exact normalization by return time needs per-orbit
    roofs; with the plain mean roof this is only O(1/n) for variable
    roofs, but exact in n -> inf for constant roof. The simultaneous
    root-finding value and the gap to it are returned.
    """
    w = q * susp.phi
    shift = float(w.max())
    B = susp.sft.matrix * np.exp(w - shift)[None, :]
    m = B.shape[0]

    best = None
    M = np.eye(m)
    logscale = 0.0
    for n in range(1, n_max + 1):
        M = B @ M
        s = M.max()
        if s <= 0.0:
            break
        M /= s
        logscale += math.log(s)
        tr = float(np.trace(M))
        if tr > 0.0:
            log_trace = logscale + math.log(tr) + n * shift
            best = (n, log_trace)
    if best is None:
        raise NoConvergence("no positive trace up to n = %d" % n_max)

    n, log_trace = best
    r_bar = float(susp.roof.mean())
    value = log_trace / (n * r_bar)
    flow_value = flow_pressure(susp, q)
    return BowenPressure(value, n, flow_value, abs(value - flow_value))


def calibrate_pesin(susp):
    """Shift phi by a multiple of the roof so the pressure at q = 1 is 0.

    Replacing phi by phi - c1*r moves the pressure curve by exactly -q*c1
    (scalar-shift covariance of the root), so the calibrated system has
    P(1) = 0 identically, the relation a geometric unstable-Jacobian
    potential satisfies.
    """
    c1 = flow_pressure(susp, 1.0)
    return SuspensionModel(susp.sft, susp.phi - c1 * susp.roof, susp.roof)

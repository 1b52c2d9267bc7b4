"""Acceptance gate: one test per headline capability.

Each function prints as a single pass/fail line under pytest -v. The
tolerances are pinned; every expected number is exact arithmetic or an
independently derived closed form, so none of these should be loosened
to make a regression green.
"""

import math
import time

import numpy as np
import pytest

from rank1thermo.errors import ConfigError
from rank1thermo.geometry import (CollarProfile, ConstantNegative,
                                  CurvatureSignal, OctagonHyperbolic,
                                  UnitTangentState, integrate_geodesic)
from rank1thermo.jacobi import riccati_integrate, unstable_riccati
from rank1thermo.lyapunov import closed_orbit_exponent, forward_exponent
from rank1thermo.orbits import (OrbitLibrary, bridge_orbits,
                                build_lambda_ell, build_markov_coding,
                                collar_waist_orbit, make_pseudo_orbit,
                                octagon_axis_orbit, orbit_record,
                                refine_closed_orbit, shadowing_gap)
from rank1thermo.symbolic import (SuspensionModel, equilibrium_stats,
                                  flow_pressure, full_shift, golden_mean,
                                  single_cycle)
from rank1thermo.thermo import (PressureCurve, detect_corner,
                                double_conjugate, exponent_range,
                                family_convergence, legendre_conjugate,
                                sample_pressure_curve)

# worked 2-symbol model: full shift, phi = (-log 4/3, -log 4), unit roof.
# P(q) = log((3/4)^q + (1/4)^q): P(0) = log 2, P(1) = 0, end slopes
# -log 4/3 and -log 4, and -P'(0) = 0.8369882168, -P'(1) = 0.5623351205
PHI_CAL = (-math.log(4.0 / 3.0), -math.log(4.0))
ALPHA_0 = 0.8369882168
CHI_1 = 0.5623351205


def calibrated():
    return SuspensionModel(full_shift(2), PHI_CAL, (1.0, 1.0))


@pytest.fixture(scope="module")
def wide_curve():
    return sample_pressure_curve(calibrated(), -40.0, 40.0, 401)


@pytest.fixture(scope="module")
def union_curve():
    return sample_pressure_curve(calibrated().with_zero_component(),
                                 -2.0, 4.0, 241)


def test_c01_constant_curvature_exactness():
    for k in (1.0, 2.0):
        m = ConstantNegative(k)
        v0 = UnitTangentState((0.0, 1.0), 0.3, model=m)
        tr = unstable_riccati(m, v0, T=50.0, dt=1e-3, T_burn=20.0 / k)
        assert np.abs(tr.phi_u() + k).max() <= 1e-6
        est = forward_exponent(m, v0, T=50.0, dt=1e-3, T_burn=20.0 / k)
        assert abs(est.chi - k) <= 1e-4
        # the closed geodesic realizes the same rate, exactly at the bound
        axis = octagon_axis_orbit(OctagonHyperbolic(k))
        exp = closed_orbit_exponent(axis)
        assert abs(exp.chi - k) <= 1e-9
        assert exp.saturated


def test_c02_riccati_closed_forms():
    for k, c in ((1.0, 1.0), (2.0, 0.5)):
        sig = CurvatureSignal.constant(-k * k)
        tr = riccati_integrate(sig, k * math.tanh(k * c), T=50.0, dt=1e-3)
        assert np.abs(tr.u - k * np.tanh(k * (tr.t + c))).max() <= 1e-6
    flat = CurvatureSignal.constant(0.0)
    tr = riccati_integrate(flat, 1.0, T=50.0, dt=1e-3)
    assert np.abs(tr.u - 1.0 / (tr.t + 1.0)).max() <= 1e-6
    # halving the step divides the error by ~16: classical 4th order
    sig = CurvatureSignal.constant(-1.0)
    errs = []
    for dt in (1e-2, 5e-3):
        tr = riccati_integrate(sig, 0.0, T=2.0, dt=dt)
        errs.append(np.abs(tr.u - np.tanh(tr.t)).max())
    assert 13.0 <= errs[0] / errs[1] <= 19.0


def test_c03_symbolic_pressure_exactness():
    ent = flow_pressure(SuspensionModel(full_shift(2), (0, 0), (1, 1)), 0.0)
    assert abs(ent - math.log(2.0)) <= 1e-9
    gold = flow_pressure(SuspensionModel(golden_mean(), (0, 0), (1, 1)), 0.0)
    assert abs(gold - math.log(0.5 * (1.0 + math.sqrt(5.0)))) <= 1e-9
    # doubling the roof halves the rate
    slow = flow_pressure(SuspensionModel(full_shift(2), (0, 0), (2, 2)), 0.0)
    assert abs(slow - 0.5 * math.log(2.0)) <= 1e-9


def test_c04_pesin_identity_calibration():
    susp = calibrated()
    assert abs(flow_pressure(susp, 1.0)) <= 1e-9
    assert abs(flow_pressure(susp, 0.0) - math.log(2.0)) <= 1e-9


def test_c05_corner_reproduction(union_curve):
    susp = calibrated().with_zero_component()
    tail = [flow_pressure(susp, q) for q in np.linspace(1.0, 40.0, 79)]
    assert np.abs(tail).max() <= 1e-9
    rep = detect_corner(union_curve, 1.0)
    assert rep.corner
    assert abs(rep.d_right) <= 2e-3
    assert abs(rep.d_left + 0.562335) <= 2e-3
    spec = legendre_conjugate(union_curve,
                              alphas=np.linspace(0.01, 0.5623, 57))
    assert np.abs(spec.E - spec.alphas).max() <= 1e-4
    at0 = legendre_conjugate(union_curve, alphas=[ALPHA_0])
    assert abs(at0.E[0] - math.log(2.0)) <= 1e-4


def test_c06_spectrum_identities(wide_curve):
    susp = calibrated()
    stats = [equilibrium_stats(susp, q) for q in np.linspace(-5.0, 5.0, 20)]
    at_chi = legendre_conjugate(wide_curve, alphas=[s.chi for s in stats])
    gaps = np.abs(at_chi.E - np.array([s.entropy for s in stats]))
    assert gaps.max() <= 1e-6
    spec = legendre_conjugate(wide_curve)
    ok = spec.valid()
    assert np.array_equal(spec.dim[ok], 1.0 + 2.0 * spec.D[ok])
    assert np.all(spec.D[ok] >= -1e-6) and np.all(spec.D[ok] <= 1.0 + 1e-6)


def test_c07_exponent_range(wide_curve):
    lo, hi = exponent_range(wide_curve)
    assert abs(lo - math.log(4.0 / 3.0)) <= 2e-3
    assert abs(hi - math.log(4.0)) <= 2e-3


def test_c08_monotone_uniform_convergence():
    members = [SuspensionModel(single_cycle(1), (0,), (1,)),
               SuspensionModel(golden_mean(), (0, 0), (1, 1)),
               SuspensionModel(full_shift(2), (0, 0), (1, 1))]
    curves = [sample_pressure_curve(s, -5.0, 5.0, 101) for s in members]
    rep = family_convergence(curves, alpha=0.6)  # raises on any decrease
    assert rep.gaps_strictly_decreasing
    assert rep.supports_nondecreasing


def test_c09_shadowing_and_bridging():
    t0 = time.monotonic()
    oct1 = OctagonHyperbolic(1.0)
    axis_a = octagon_axis_orbit(oct1, 0)
    axis_b = octagon_axis_orbit(oct1, 1)

    rng = np.random.default_rng(11)
    dx, dy, dp = rng.uniform(-1e-3, 1e-3, 3)
    v0 = UnitTangentState((axis_a.x[0] + dx, axis_a.y[0] + dy),
                          axis_a.psi[0] + dp, model=oct1)
    pseudo = make_pseudo_orbit(oct1, [(v0, axis_a.period + 1e-3)])
    ref = refine_closed_orbit(pseudo)
    assert ref.residual < 1e-8

    bridge = bridge_orbits(axis_a, axis_b)
    ref_b = refine_closed_orbit(bridge)
    assert ref_b.residual < 1e-8
    assert ref_b.path.closed
    assert shadowing_gap(ref_b, bridge) < 0.1

    coding = build_markov_coding([axis_a, axis_b, ref_b.path])
    assert coding.is_strongly_connected()
    p_union = flow_pressure(coding.suspension(), 0.0)
    for single in (axis_a, axis_b):
        p_one = flow_pressure(build_markov_coding([single]).suspension(), 0.0)
        assert abs(p_one) <= 1e-12
        assert p_union > p_one + 1e-3
    assert time.monotonic() - t0 <= 300.0


def test_c10_level_set_nesting():
    flat = CollarProfile.linear_band(width=0.5, rate=1.0)
    cosh = CollarProfile.cosh_warp(rate=1.0)
    oct1 = OctagonHyperbolic(1.0)
    sig = CurvatureSignal.sine(mean=-1.0, amplitude=0.4, period=5.0)
    lib = OrbitLibrary()
    lib.add(orbit_record("flat-band", flat,
                         path=collar_waist_orbit(flat, 0.0)))
    lib.add(orbit_record("cosh-waist", cosh,
                         path=collar_waist_orbit(cosh, 0.0)))
    lib.add(orbit_record("axis-a", oct1, path=octagon_axis_orbit(oct1, 0)))
    lib.add(orbit_record("axis-b", oct1, path=octagon_axis_orbit(oct1, 1)))
    lib.add(orbit_record("wobble", sig))

    rep = build_lambda_ell(lib, [0.3, 0.95, 1.2])
    assert rep.is_nested()
    assert all(rep.counts[i] >= rep.counts[i + 1]
               for i in range(len(rep.counts) - 1))
    assert all("flat-band" not in mem for mem in rep.members)
    assert all(rec.chi <= rec.chi_bound + 1e-6 for rec in lib)


def test_c11_legendre_duality_suite():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(9, 34))
        q = np.linspace(-2.0, 2.0, n)
        slopes = np.sort(rng.uniform(-3.0, 2.0, n - 1))
        P = rng.uniform(-1.0, 1.0) + np.concatenate(
            [[0.0], np.cumsum(slopes * np.diff(q))])
        curve = PressureCurve(q, P)

        hull = double_conjugate(curve)
        assert np.abs(hull.P - P).max() <= 1e-9

        alphas = np.unique(-curve.secant_slopes())
        spec = legendre_conjugate(curve, alphas=alphas)
        if len(alphas) >= 3:
            s = np.diff(spec.E) / np.diff(alphas)
            assert np.all(np.diff(s) <= 1e-9)
        support = spec.E[:, None] - np.outer(alphas, q)
        assert np.all(support <= P[None, :] + 1e-9)

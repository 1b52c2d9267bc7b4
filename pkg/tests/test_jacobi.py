"""Riccati layer: closed forms, branches, potentials, classification."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rank1thermo.errors import (BlowUp, ConfigError, InsufficientBurnIn,
                                WindowTooShort)
from rank1thermo.geometry import (ConstantNegative, CurvatureSignal,
                                  OctagonHyperbolic, UnitTangentState,
                                  integrate_geodesic)
from rank1thermo.jacobi import (JacobiFrame, RiccatiTrace, phi_u,
                                rank_classify, riccati_integrate,
                                stable_riccati, unstable_riccati)


# ---------------------------------------------------------------------------
# closed forms (constant curvature)
#
# K = -k^2: u = k tanh(k t + atanh(u0/k)) for |u0| < k, u = +-k fixed,
#           u = k coth(k t + atanh(k/u0)) for |u0| > k.
# K = 0:    u = u0 / (1 + u0 t), blowing up at t = -1/u0 when u0 < 0.


def test_tanh_closed_form():
    for k, u0 in ((1.0, 0.3), (2.0, -1.1), (1.0, 0.0)):
        sig = CurvatureSignal.constant(-k * k)
        tr = riccati_integrate(sig, u0, T=50.0, dt=1e-3)
        exact = k * np.tanh(k * tr.t + math.atanh(u0 / k))
        assert np.abs(tr.u - exact).max() < 1e-6


def test_coth_closed_form():
    k, u0 = 1.0, 2.0
    sig = CurvatureSignal.constant(-k * k)
    tr = riccati_integrate(sig, u0, T=10.0, dt=1e-3)
    exact = k / np.tanh(k * tr.t + math.atanh(k / u0))
    assert np.abs(tr.u - exact).max() < 1e-6


def test_flat_closed_form():
    sig = CurvatureSignal.constant(0.0)
    tr = riccati_integrate(sig, 1.0, T=50.0, dt=1e-3)
    assert np.abs(tr.u - 1.0 / (tr.t + 1.0)).max() < 1e-6
    tr0 = riccati_integrate(sig, 0.0, T=10.0, dt=1e-3)
    assert np.all(tr0.u == 0.0)


def test_fourth_order_convergence():
    # halve the step where truncation still dominates roundoff
    sig = CurvatureSignal.constant(-1.0)

    def err(dt):
        tr = riccati_integrate(sig, 0.3, T=5.0, dt=dt)
        return np.abs(tr.u - np.tanh(tr.t + math.atanh(0.3))).max()

    ratio = err(0.05) / err(0.025)
    assert 12.0 < ratio < 20.0


def test_blowup_flat():
    sig = CurvatureSignal.constant(0.0)
    with pytest.raises(BlowUp) as exc:
        riccati_integrate(sig, -1.0, T=5.0, dt=1e-3)
    assert exc.value.t_star == pytest.approx(1.0, abs=5e-3)
    tr = riccati_integrate(sig, -1.0, T=5.0, dt=1e-3, raise_on_blowup=False)
    assert tr.blew_up and tr.t_star == pytest.approx(1.0, abs=5e-3)
    assert len(tr.t) < 1100


def test_blowup_below_cone():
    # u0 < -k joins the coth branch and diverges at t* = atanh(k/u0)/k
    with pytest.raises(BlowUp) as exc:
        riccati_integrate(CurvatureSignal.constant(-1.0), -2.0, T=5.0,
                          dt=1e-3)
    assert exc.value.t_star == pytest.approx(math.atanh(0.5), abs=5e-3)


# ---------------------------------------------------------------------------
# unstable / stable branches


def test_unstable_branch_constant_curvature():
    for k in (1.0, 2.0):
        m = ConstantNegative(k)
        v = UnitTangentState((0.0, 1.0), 0.7, model=m)
        tr = unstable_riccati(m, v, T=10.0, dt=1e-3)
        assert np.abs(tr.u - k).max() < 1e-12
        assert np.abs(tr.phi_u() + k).max() < 1e-12
        assert tr.mean_u() == pytest.approx(k, abs=1e-12)
        assert tr.path is not None and len(tr.path) == len(tr.t)


def test_unstable_branch_octagon_with_reductions():
    # constant curvature, so u stays at k across side-pairing events too
    m = OctagonHyperbolic()
    v = UnitTangentState((0.2, 0.1), 0.9, model=m)
    tr = unstable_riccati(m, v, T=12.0, dt=1e-3)
    assert len(tr.path.events) > 0
    assert np.abs(tr.u - 1.0).max() < 1e-10


def test_stable_branch_constant_curvature():
    m = ConstantNegative(1.0)
    v = UnitTangentState((0.0, 1.0), 0.7, model=m)
    tr = stable_riccati(m, v, T=10.0, dt=1e-3)
    assert np.abs(tr.u + 1.0).max() < 1e-12


def test_stable_branch_solves_riccati():
    # residual check on a genuinely time-dependent signal
    sig = CurvatureSignal.sine(-1.0, 0.4, 5.0)
    tr = stable_riccati(sig, T=10.0, dt=1e-3)
    du = np.gradient(tr.u, tr.t)
    res = du + tr.u ** 2 + tr.K
    assert np.abs(res[2:-2]).max() < 1e-4
    assert tr.u.max() < 0.0  # stable branch is negative here


def test_unstable_branch_periodic_signal():
    sig = CurvatureSignal.sine(-1.0, 0.4, 5.0)
    tr = unstable_riccati(sig, T=10.0, dt=1e-3)
    i = int(round(5.0 / 1e-3))
    assert abs(tr.u[0] - tr.u[i]) < 1e-10  # inherits the period
    assert tr.u.min() > 0.5 and tr.u.max() < 1.3


def test_insufficient_burn_in():
    m = ConstantNegative(1.0)
    v = UnitTangentState((0.0, 1.0), 0.7, model=m)
    with pytest.raises(InsufficientBurnIn):
        unstable_riccati(m, v, T=5.0, dt=1e-3, T_burn=0.5)
    # default burn passes the same check
    unstable_riccati(m, v, T=5.0, dt=1e-3)


def test_window_and_config_errors():
    sig = CurvatureSignal.constant(-1.0)
    with pytest.raises(ConfigError):
        riccati_integrate(sig, 0.0, T=-1.0)
    with pytest.raises(WindowTooShort):
        riccati_integrate(sig, 0.0, T=1e-3, dt=1e-3)
    with pytest.raises(ConfigError):
        unstable_riccati(ConstantNegative(1.0), None, T=5.0)
    tr = riccati_integrate(sig, 0.0, T=1.0, dt=1e-3)
    short = RiccatiTrace(tr.t[:1], tr.u[:1], tr.K[:1])
    with pytest.raises(WindowTooShort):
        short.mean_u()


@given(st.lists(st.floats(-4.0, 0.0), min_size=2, max_size=6),
       st.floats(0.0, 1.0))
@settings(max_examples=30, deadline=None)
def test_cone_invariance(values, frac):
    # u0 in [0, sqrt(sup -K)] keeps u in the cone for all time
    breaks = list(np.linspace(1.0, 9.0, len(values) - 1))
    sig = CurvatureSignal.piecewise(breaks, values)
    top = math.sqrt(max(-v for v in values))
    tr = riccati_integrate(sig, frac * top, T=10.0, dt=1e-3)
    assert tr.u.min() >= -1e-12
    assert tr.u.max() <= top + 1e-12


# ---------------------------------------------------------------------------
# potentials and frames


def test_phi_u_formula():
    u = np.array([0.0, 1.0, -1.0, 2.0])
    K = np.array([0.0, -1.0, -1.0, -4.0])
    out = phi_u(u, K)
    assert out[0] == 0.0
    assert out[1] == pytest.approx(-1.0)
    assert out[2] == pytest.approx(1.0)
    assert out[3] == pytest.approx(-2.0)


def test_phi_u_matches_frame_norm_growth():
    sig = CurvatureSignal.sine(-1.0, 0.4, 5.0)
    tr = unstable_riccati(sig, T=10.0, dt=1e-3)
    fr = JacobiFrame.from_trace(tr)
    ln = fr.log_norm()
    slope = np.gradient(ln, tr.t)
    assert np.abs(slope[2:-2] + tr.phi_u()[2:-2]).max() < 1e-4


def test_mean_u_vs_mean_phi_u_boundary_term():
    sig = CurvatureSignal.sine(-1.0, 0.4, 5.0)
    for T in (10.0, 40.0):
        tr = unstable_riccati(sig, T=T, dt=1e-3)
        gap = abs(tr.mean_u() + tr.mean_phi_u())
        assert gap < 1.0 / T  # boundary term O(1/T)


def test_jacobi_frame_growth():
    m = ConstantNegative(1.0)
    v = UnitTangentState((0.0, 1.0), 0.7, model=m)
    tr = unstable_riccati(m, v, T=5.0, dt=1e-3)
    fr = JacobiFrame.from_trace(tr)
    assert fr.J[0] == 1.0
    assert fr.J[-1] == pytest.approx(math.exp(5.0), rel=1e-10)
    assert np.allclose(fr.Jp, tr.u * fr.J)


def test_path_replay_close_to_joint():
    # replaying stored curvature must track the in-flow integration
    m = OctagonHyperbolic()
    v = UnitTangentState((0.2, 0.1), 0.9, model=m)
    tr = unstable_riccati(m, v, T=8.0, dt=1e-3)
    replay = riccati_integrate(tr.path, tr.u[0])
    assert np.abs(replay.u - tr.u).max() < 1e-8


# ---------------------------------------------------------------------------
# classification


def test_rank_classify_labels():
    flat = unstable_riccati(CurvatureSignal.constant(0.0), T=5.0, dt=1e-3,
                            T_burn=100.0)
    assert rank_classify(flat, 1e-3, 1e-2).label == "flat"

    hyp = unstable_riccati(CurvatureSignal.constant(-1.0), T=5.0, dt=1e-3)
    assert rank_classify(hyp, 1e-3, 1e-2).label == "hyperbolic"

    # long flat tail after a hyperbolic stretch: u decays like 1/t
    sig = CurvatureSignal.piecewise([0.0, 50.0], [-1.0, -1.0, 0.0])
    mix = unstable_riccati(sig, T=400.0, dt=1e-3)
    rs = rank_classify(mix, 1e-3, 1e-2)
    assert rs.label == "mixed"
    assert 0.0 < rs.flat_fraction < 1.0

    with pytest.raises(ConfigError):
        rank_classify(hyp, -1.0, 1e-2)


def test_trace_csv(tmp_path):
    sig = CurvatureSignal.constant(-1.0)
    tr = riccati_integrate(sig, 0.3, T=1.0, dt=0.01)
    out = tmp_path / "trace.csv"
    tr.to_csv(out)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "t,u,K,phi_u"
    assert len(lines) == len(tr.t) + 1
    row = [float(c) for c in lines[1].split(",")]
    assert row[1] == pytest.approx(0.3)

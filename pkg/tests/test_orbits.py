"""Pseudo-orbits, shooting, bridges, orbit libraries, section codings."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rank1thermo.errors import (CellOverlap, ConfigError, ConvergenceFailure,
                                HypothesisViolation, NoConnector, NoCrossing,
                                NotClosed)
from rank1thermo.geometry import (CollarProfile, ConstantNegative,
                                  CurvatureSignal, OctagonHyperbolic,
                                  UnitTangentState, integrate_geodesic,
                                  mobius_apply, phase_distance)
from rank1thermo.lyapunov import closed_orbit_exponent, forward_exponent
from rank1thermo.orbits import (OrbitLibrary, SectionSpec, _axis_endpoints,
                                _disk_connector, _phase_dist_matrix,
                                bridge_orbits, build_lambda_ell,
                                build_markov_coding, collar_waist_orbit,
                                make_pseudo_orbit, octagon_axis_orbit,
                                orbit_distance, orbit_record,
                                refine_closed_orbit, shadowing_gap)
from rank1thermo.symbolic import SuspensionModel, flow_pressure

OCT = OctagonHyperbolic(1.0)


@pytest.fixture(scope="module")
def axis_a():
    return octagon_axis_orbit(OCT, 0)


@pytest.fixture(scope="module")
def axis_b():
    return octagon_axis_orbit(OCT, 1)


@pytest.fixture(scope="module")
def bridge(axis_a, axis_b):
    pseudo = bridge_orbits(axis_a, axis_b)
    refined = refine_closed_orbit(pseudo)
    return pseudo, refined


# ---------------------------------------------------------------------------
# closed-orbit factories


def test_axis_orbit(axis_a):
    assert axis_a.closed
    assert axis_a.period == pytest.approx(OCT.axis_period, abs=1e-12)
    assert axis_a.deck_word() == [4]
    exp = closed_orbit_exponent(axis_a)
    assert exp.chi == pytest.approx(1.0, abs=1e-9)
    assert exp.saturated


def test_axis_orbit_validation():
    with pytest.raises(ConfigError):
        octagon_axis_orbit(OCT, 8)
    with pytest.raises(ConfigError):
        octagon_axis_orbit(OCT, 0, x0=0.7)  # beyond the exit abscissa
    with pytest.raises(ConfigError):
        octagon_axis_orbit(ConstantNegative(1.0), 0)


def test_waist_orbits():
    flat = CollarProfile.linear_band(width=0.5, rate=1.0)
    for s0 in (0.0, 0.25):
        w = collar_waist_orbit(flat, s0)
        assert w.closed
        assert w.period == pytest.approx(2.0 * math.pi, abs=1e-9)
        assert closed_orbit_exponent(w).chi == 0.0
    cosh = CollarProfile.cosh_warp(rate=1.0)
    exp = closed_orbit_exponent(collar_waist_orbit(cosh, 0.0))
    assert exp.chi == pytest.approx(1.0, abs=1e-9)
    assert exp.saturated
    with pytest.raises(ConfigError):
        collar_waist_orbit(cosh, 0.5)  # f' != 0 off the waist
    with pytest.raises(ConfigError):
        collar_waist_orbit(OCT, 0.0)


# ---------------------------------------------------------------------------
# axes and connectors


def test_axis_endpoints(axis_a, axis_b):
    em, ep = _axis_endpoints(OCT, axis_a)
    assert ep == pytest.approx(1.0, abs=1e-12)
    assert em == pytest.approx(-1.0, abs=1e-12)
    em, ep = _axis_endpoints(OCT, axis_b)
    w = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    assert ep == pytest.approx(w, abs=1e-12)
    assert em == pytest.approx(-w, abs=1e-12)


@given(st.floats(-math.pi, math.pi), st.floats(0.05, 2 * math.pi - 0.05))
@settings(max_examples=60, deadline=None)
def test_connector_hits_endpoints(a1, gap):
    eta1 = complex(math.cos(a1), math.sin(a1))
    eta2 = complex(math.cos(a1 + gap), math.sin(a1 + gap))
    M = _disk_connector(eta1, eta2)
    assert abs(M[0, 0]) ** 2 - abs(M[0, 1]) ** 2 == pytest.approx(1.0,
                                                                  abs=1e-9)
    assert mobius_apply(M, -1.0) == pytest.approx(eta1, abs=1e-9)
    assert mobius_apply(M, 1.0) == pytest.approx(eta2, abs=1e-9)


def test_phase_dist_matrix_matches_scalar(axis_a, axis_b):
    rng = np.random.default_rng(11)
    sa = [OCT.sample_state(rng) for _ in range(6)]
    sb = [OCT.sample_state(rng) for _ in range(5)]
    arrs = lambda ss: (np.array([s.x for s in ss]),
                       np.array([s.y for s in ss]),
                       np.array([s.psi for s in ss]))
    D = _phase_dist_matrix(OCT, arrs(sa), arrs(sb))
    for i in range(6):
        for j in range(5):
            assert D[i, j] == pytest.approx(phase_distance(sa[i], sb[j]),
                                            abs=1e-12)


# ---------------------------------------------------------------------------
# pseudo-orbits and shooting


def test_pseudo_orbit_from_split_axis(axis_a):
    i = len(axis_a) // 2
    t_mid = float(axis_a.t[i])  # cut on the sample grid
    pseudo = make_pseudo_orbit(OCT, [(axis_a.start, t_mid),
                                     (axis_a.state(i),
                                      axis_a.period - t_mid)])
    assert pseudo.n_legs == 2
    assert pseudo.max_jump < 1e-9
    assert pseudo.total_time == pytest.approx(axis_a.period)


def test_pseudo_orbit_validation():
    with pytest.raises(ConfigError):
        make_pseudo_orbit(OCT, [])
    with pytest.raises(ConfigError):
        make_pseudo_orbit(OCT, [(UnitTangentState((0, 0), 0.0, model=OCT),
                                 -1.0)])
    with pytest.raises(ConfigError):
        make_pseudo_orbit(CurvatureSignal.constant(-1.0), [(None, 1.0)])


def test_refine_perturbed_axis(axis_a):
    rng = np.random.default_rng(3)
    dx, dy, dp = rng.uniform(-1e-3, 1e-3, 3)
    v0 = UnitTangentState((axis_a.x[0] + dx, axis_a.y[0] + dy),
                          axis_a.psi[0] + dp, model=OCT)
    pseudo = make_pseudo_orbit(OCT, [(v0, axis_a.period + 1e-3)])
    assert pseudo.max_jump > 1e-4  # genuinely perturbed
    ref = refine_closed_orbit(pseudo)
    assert ref.residual < 1e-8
    assert ref.path.closed
    assert ref.period == pytest.approx(axis_a.period, abs=1e-6)
    assert ref.path.deck_word() == [4]
    exp = closed_orbit_exponent(ref.path)
    assert exp.chi == pytest.approx(1.0, abs=1e-9)
    assert shadowing_gap(ref, pseudo) < 0.1


def test_refine_stall_raises(axis_a):
    # transverse perturbation: a shift along x at psi = 0 would only slide
    # time along the same orbit
    v0 = UnitTangentState((axis_a.x[0], axis_a.y[0] + 1e-3),
                          axis_a.psi[0], model=OCT)
    pseudo = make_pseudo_orbit(OCT, [(v0, axis_a.period)])
    with pytest.raises(ConvergenceFailure):
        refine_closed_orbit(pseudo, max_iter=0)


def test_refine_needs_negative_curvature():
    flat = CollarProfile.linear_band(width=0.5, rate=1.0)
    v0 = UnitTangentState((0.0, 0.0), 0.5 * math.pi, model=flat)
    pseudo = make_pseudo_orbit(flat, [(v0, 2.0 * math.pi)])
    with pytest.raises(HypothesisViolation):
        refine_closed_orbit(pseudo)


# ---------------------------------------------------------------------------
# bridging


def test_bridge_structure(bridge, axis_a, axis_b):
    pseudo, ref = bridge
    assert pseudo.n_legs == 4
    assert pseudo.max_jump <= 1e-2
    assert all(leg.duration > 0 for leg in pseudo.legs)
    # axis legs track each orbit for at least a full period
    assert pseudo.legs[0].duration >= axis_a.period
    assert pseudo.legs[2].duration >= axis_b.period


def test_bridge_refines_and_shadows(bridge):
    pseudo, ref = bridge
    assert ref.residual < 1e-8
    assert ref.path.closed
    word = set(ref.path.deck_word())
    assert {4, 5} <= word  # the orbit genuinely visits both axes
    assert shadowing_gap(ref, pseudo) < 0.1


def test_bridge_degenerate(axis_a):
    pseudo = bridge_orbits(axis_a, axis_a)
    assert pseudo.n_legs == 1
    assert pseudo.max_jump < 1e-9


def test_bridge_errors(axis_a):
    flat = CollarProfile.linear_band(width=0.5, rate=1.0)
    w = collar_waist_orbit(flat, 0.0)
    with pytest.raises(HypothesisViolation):
        bridge_orbits(w, w)
    hp = ConstantNegative(1.0)
    p = integrate_geodesic(hp, UnitTangentState((0.0, 1.0), 0.3, model=hp),
                           2.0, 1e-3)
    with pytest.raises(NoConnector):
        bridge_orbits(p, p)
    with pytest.raises(ConfigError):
        bridge_orbits(axis_a, octagon_axis_orbit(OctagonHyperbolic(0.5), 0))
    open_arc = integrate_geodesic(OCT, axis_a.start, 1.0, 1e-3)
    with pytest.raises(NotClosed):
        bridge_orbits(axis_a, open_arc)


# ---------------------------------------------------------------------------
# section codings


def test_coding_single_orbit(axis_a):
    cod = build_markov_coding([axis_a])
    assert cod.n_cells == 1
    assert cod.matrix.tolist() == [[1]]
    assert cod.roof[0] == pytest.approx(axis_a.period, abs=1e-6)
    # phi^u is exactly -k along the axis, so the weight is -period
    assert cod.phi[0] == pytest.approx(-axis_a.period, abs=1e-6)
    assert cod.is_strongly_connected()
    forced = flow_pressure(SuspensionModel.from_section_coding(cod), q=0.0)
    assert abs(forced) < 1e-12


def test_coding_union_gains_entropy(bridge, axis_a, axis_b):
    _, ref = bridge
    cod = build_markov_coding([axis_a, axis_b, ref.path])
    assert cod.n_cells >= 3
    assert cod.is_strongly_connected()
    p_union = flow_pressure(cod.suspension(), q=0.0)
    for single in (axis_a, axis_b):
        p_single = flow_pressure(
            build_markov_coding([single]).suspension(), q=0.0)
        assert abs(p_single) < 1e-12
        assert p_union > p_single + 1e-2


def test_coding_errors(axis_a, axis_b):
    with pytest.raises(NoCrossing):
        build_markov_coding([axis_a], SectionSpec(level=0.9))
    with pytest.raises(CellOverlap):
        build_markov_coding([axis_a, axis_b],
                            SectionSpec(eps0=0.05, linkage=1.0))
    with pytest.raises(NotClosed):
        build_markov_coding([integrate_geodesic(OCT, axis_a.start, 1.0,
                                                1e-3)])
    with pytest.raises(ConfigError):
        build_markov_coding([])
    with pytest.raises(ConfigError):
        build_markov_coding([axis_a,
                             octagon_axis_orbit(OctagonHyperbolic(0.5), 0)])


# ---------------------------------------------------------------------------
# orbit records, libraries, level sets


@pytest.fixture(scope="module")
def library(axis_a, axis_b):
    flat = CollarProfile.linear_band(width=0.5, rate=1.0)
    cosh = CollarProfile.cosh_warp(rate=1.0)
    slow = OctagonHyperbolic(0.5)
    sig = CurvatureSignal.sine(mean=-1.0, amplitude=0.4, period=5.0)
    lib = OrbitLibrary()
    lib.add(orbit_record("waist-0", flat, path=collar_waist_orbit(flat, 0.0)))
    lib.add(orbit_record("waist-q", flat,
                         path=collar_waist_orbit(flat, 0.25)))
    lib.add(orbit_record("cosh-waist", cosh,
                         path=collar_waist_orbit(cosh, 0.0)))
    lib.add(orbit_record("axis-a", OCT, path=axis_a))
    lib.add(orbit_record("axis-b", OCT, path=axis_b))
    lib.add(orbit_record("axis-slow", slow,
                         path=octagon_axis_orbit(slow, 0)))
    lib.add(orbit_record("wobble", sig))
    return lib


def test_record_fields(library):
    for name in ("waist-0", "waist-q"):
        rec = library[name]
        assert rec.chi == 0.0 and rec.label == "flat"
    assert library["cosh-waist"].chi == pytest.approx(1.0, abs=1e-9)
    assert library["axis-slow"].chi == pytest.approx(0.5, abs=1e-9)
    wob = library["wobble"]
    assert wob.label == "hyperbolic"
    assert not wob.saturated
    assert wob.chi_bound == pytest.approx(math.sqrt(1.4), abs=1e-6)
    assert 0.95 < wob.chi < 1.0


def test_record_schwarz_bound(library):
    for rec in library:
        assert rec.chi <= rec.chi_bound + 1e-6


def test_signal_record_matches_forward_average():
    sig = CurvatureSignal.sine(mean=-1.0, amplitude=0.4, period=5.0)
    rec = orbit_record("wobble", sig)
    est = forward_exponent(sig, T=100.0)
    assert rec.chi == pytest.approx(est.chi, abs=1e-3)


def test_record_errors():
    with pytest.raises(ConfigError):
        orbit_record("raw", CurvatureSignal.constant(-1.0))  # no period
    with pytest.raises(ConfigError):
        orbit_record("seedless", OCT)
    arc = integrate_geodesic(OCT, UnitTangentState((0.1, 0.0), 0.4,
                                                   model=OCT), 1.0, 1e-3)
    with pytest.raises(NotClosed):
        orbit_record("open", OCT, path=arc)


def test_library_roundtrip(tmp_path, library):
    fn = tmp_path / "lib.json"
    library.to_json(fn)
    loaded = OrbitLibrary.from_json(fn)
    assert loaded.names == library.names
    for name in library.names:
        assert loaded[name].chi == pytest.approx(library[name].chi,
                                                 abs=1e-10)
    with pytest.raises(ConfigError):
        library.add(library["axis-a"])  # duplicate name
    # a tampered exponent must be caught on reload
    data = json.loads(fn.read_text())
    data["orbits"][3]["chi"] += 1e-3
    fn.write_text(json.dumps(data))
    with pytest.raises(ConfigError):
        OrbitLibrary.from_json(fn)


def test_lambda_ell_levels(library):
    rep = build_lambda_ell(library, [0.3, 0.95, 1.2])
    assert rep.is_nested()
    assert rep.members[0] == ("cosh-waist", "axis-a", "axis-b", "axis-slow",
                              "wobble")
    assert rep.members[1] == ("cosh-waist", "axis-a", "axis-b", "wobble")
    assert rep.members[2] == ()
    for mem in rep.members:  # flat circles never make the cut
        assert "waist-0" not in mem and "waist-q" not in mem
    assert rep.counts == [5, 4, 0]
    with pytest.raises(ConfigError):
        build_lambda_ell(library, [0.0, 0.5])


def test_orbit_distance(library, axis_a, axis_b):
    assert orbit_distance(axis_a, axis_a) == 0.0
    assert orbit_distance(axis_a, axis_b) > 0.1
    assert orbit_distance(library["axis-a"], library["waist-0"]) == math.inf
    assert orbit_distance(library["axis-a"], library["wobble"]) == math.inf

"""Compiled kernels against the pure-python fallback.

Both backends implement the same arithmetic in the same order and the
extension is built with contraction disabled, so agreement is required bit
for bit, not just to rounding: any drift means the two sources fell out of
lockstep. Scenarios cover the three chart models, every status exit, the
reduction event stream, and the half-grid Riccati sampler.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from rank1thermo._kernels import _fallback

_core = pytest.importorskip(
    "rank1thermo._kernels._core",
    reason="compiled kernel not built; run pip install -e . with cython")

HALF = _fallback.MODEL_HALF_PLANE
COLLAR = _fallback.MODEL_COLLAR
DISK = _fallback.MODEL_DISK


def octagon_params():
    from rank1thermo.geometry import OctagonHyperbolic
    code, params = OctagonHyperbolic(1.0).kernel_spec()
    assert code == DISK
    return params


# (model, params, x0, y0, psi0, n, dt, kwargs)
CASES = [
    ("half-plane-u", HALF, [1.0], 0.0, 1.0, 0.3, 5000, 1e-3,
     dict(with_u=1, u0=0.0)),
    ("half-plane-k2", HALF, [2.0], 0.4, 2.5, -2.0, 3000, 5e-4, dict()),
    ("half-plane-escape", HALF, [1.0], 0.0, 1e-240, 0.0, 400, 0.1,
     dict(check_every=0)),
    ("riccati-blowup", HALF, [1.0], 0.0, 1.0, 0.0, 4000, 1e-3,
     dict(with_u=1, u0=-1.5, ceiling=1e3)),
    ("collar-seam", COLLAR, [1.0, 0.5, 0.0, 6.0, 1.0], -0.2, 0.0, 0.2,
     2000, 1e-3, dict(with_u=1, u0=0.1)),
    ("collar-linear", COLLAR, [0.0, 0.0, 0.3, 6.0, 1.0], 0.1, 0.0, 1.0,
     1500, 1e-3, dict()),
    ("collar-escape", COLLAR, [1.0, 0.5, 0.0, 1.2, 1.0], 0.0, 0.0, 0.05,
     3000, 1e-3, dict()),
    ("octagon-reduce", DISK, None, 0.1, 0.0, 1.08539, 12000, 1e-3,
     dict(with_u=1, u0=0.0)),
    ("step-too-large", HALF, [1.0], 0.0, 1.0, 0.3, 200, 0.5,
     dict(check_every=1, err_bound=1e-12)),
]


def run_both(case):
    name, model, params, x0, y0, psi0, n, dt, kw = case
    if params is None:
        params = octagon_params()
    out_f = _fallback.flow_path(model, params, x0, y0, psi0, n, dt, **kw)
    out_c = _core.flow_path(model, params, x0, y0, psi0, n, dt, **kw)
    return out_f, out_c


def assert_flow_identical(out_f, out_c):
    status_f, stop_f, err_f = out_f[7], out_f[8], out_f[9]
    status_c, stop_c, err_c = out_c[7], out_c[8], out_c[9]
    assert status_c == status_f
    assert stop_c == stop_f
    assert err_c == err_f
    m = stop_f + 1  # samples past stop are unwritten
    for arr_f, arr_c in zip(out_f[:4], out_c[:4]):
        assert np.array_equal(arr_f[:m], arr_c[:m])
    assert np.array_equal(out_f[4][:stop_f], out_c[4][:stop_f])  # Kmid
    assert np.array_equal(out_f[5][:m], out_c[5][:m])            # us
    assert out_f[6].shape == out_c[6].shape
    assert np.array_equal(out_f[6], out_c[6])                    # events


@pytest.mark.parametrize("case", CASES, ids=[c[0] for c in CASES])
def test_flow_path_bit_identical(case):
    out_f, out_c = run_both(case)
    assert_flow_identical(out_f, out_c)


def test_expected_statuses_exercised():
    # the parity check is vacuous for an exit path no case reaches
    statuses = {case[0]: run_both(case)[0][7] for case in CASES}
    assert statuses["half-plane-u"] == _fallback.OK
    assert statuses["half-plane-escape"] == _fallback.CHART_ESCAPE
    assert statuses["collar-escape"] == _fallback.CHART_ESCAPE
    assert statuses["riccati-blowup"] == _fallback.BLOWUP
    assert statuses["step-too-large"] == _fallback.STEP_TOO_LARGE


def test_octagon_events_nonempty():
    out_f, out_c = run_both(CASES[7])
    assert out_f[6].shape[0] >= 2  # reduction actually fired
    assert np.array_equal(out_f[6], out_c[6])


def test_riccati_from_samples_bit_identical():
    out = _fallback.flow_path(HALF, [1.0], 0.0, 1.0, 0.3, 3000, 1e-3)
    Ks, Kmid, stop = out[3], out[4], out[8]
    Khalf = np.empty(2 * stop + 1)
    Khalf[0::2] = Ks[:stop + 1]
    Khalf[1::2] = Kmid[:stop]
    for u0, ceiling in [(0.0, 1e6), (0.7, 1e6), (-1.5, 1e2)]:
        us_f, st_f, sp_f = _fallback.riccati_from_samples(Khalf, u0, 1e-3,
                                                          ceiling=ceiling)
        us_c, st_c, sp_c = _core.riccati_from_samples(Khalf, u0, 1e-3,
                                                      ceiling=ceiling)
        assert (st_c, sp_c) == (st_f, sp_f)
        assert np.array_equal(us_f[:sp_f + 1], us_c[:sp_c + 1])


def test_compiled_rerun_deterministic():
    a = run_both(CASES[7])[1]
    b = run_both(CASES[7])[1]
    m = a[8] + 1
    for arr_a, arr_b in zip(a[:6], b[:6]):
        assert np.array_equal(arr_a[:m], arr_b[:m])
    assert np.array_equal(a[6], b[6])
    assert a[7:] == b[7:]


def test_backend_dispatch():
    from rank1thermo import _kernels
    if os.environ.get("RANK1_THERMO_PURE") == "1":
        assert _kernels.BACKEND == "pure"
    else:
        assert _kernels.BACKEND == "compiled"
    # forcing the fallback must work regardless of how this process started
    env = dict(os.environ, RANK1_THERMO_PURE="1")
    probe = subprocess.run(
        [sys.executable, "-c",
         "from rank1thermo import _kernels; print(_kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True)
    assert probe.stdout.strip() == "pure"

"""Kernel backend selection.

The compiled extension (`_core`, built from _core.pyx) is preferred; the pure
python module (`_fallback`) is a drop-in replacement kept in lockstep with it.
Set RANK1_THERMO_PURE=1 to force the fallback (used by the consistency tests
and the benchmark).
"""

import os

OK = 0
BLOWUP = 1
STEP_TOO_LARGE = 2
CHART_ESCAPE = 3

MODEL_HALF_PLANE = 0
MODEL_COLLAR = 1
MODEL_DISK = 2

if os.environ.get("RANK1_THERMO_PURE") == "1":
    from . import _fallback as _impl
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        from . import _fallback as _impl
        BACKEND = "pure"

flow_path = _impl.flow_path
riccati_from_samples = _impl.riccati_from_samples

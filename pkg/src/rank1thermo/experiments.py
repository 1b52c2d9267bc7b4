"""Named experiment pipelines with reproducible on-disk artifacts.

Each experiment runs a fixed analysis end to end, writes plot-ready CSV/JSON
artifacts plus a pass/fail summary of the invariants it exercised, and seals
the run with a manifest (config echo, package version, seed, wall time, and
a sha256 per artifact). Identical config and seed reproduce every numeric
artifact byte for byte: floats are serialized with %.17g, the only rng is
seeded, and parallel sections reduce in index order regardless of the
thread count. `diff_runs` compares two run directories field by field for
regression gating; wall time never participates in the diff.
"""

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .errors import ConfigError, MissingManifest
from .geometry import (CollarProfile, ConstantNegative, CurvatureSignal,
                       OctagonHyperbolic, model_from_config)
from .jacobi import riccati_integrate, unstable_riccati
from .lyapunov import ensemble_sample, forward_exponent
from .orbits import (OrbitLibrary, build_lambda_ell, collar_waist_orbit,
                     octagon_axis_orbit, orbit_record)
from .symbolic import (SuspensionModel, equilibrium_stats, flow_pressure,
                       full_shift)
from .thermo import (PressureCurve, detect_corner, exponent_range,
                     legendre_conjugate, scan_corners)

# the worked symbolic example: full 2-shift, phi = (-log 4/3, -log 4),
# unit roof; P(q) = log((3/4)^q + (1/4)^q), so P(0) = log 2, P(1) = 0,
# end slopes log(4/3) and log 4, chi at q = 1 is 0.5623351205
_CAL_PHI = (-math.log(4.0 / 3.0), -math.log(4.0))
_CAL_CHI1 = 0.5623351205


def _calibrated_shift():
    return SuspensionModel(full_shift(2), _CAL_PHI, (1.0, 1.0))


# ---------------------------------------------------------------------------
# small plumbing


def _parallel_map(fn, items, threads):
    """Order-preserving map; results identical for any thread count."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt(v):
    if isinstance(v, float):
        return "%.17g" % v
    if isinstance(v, (bool, np.bool_)):
        return "%d" % int(v)
    if isinstance(v, (int, np.integer)):
        return "%d" % v
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _check(name, measured, tolerance, detail=""):
    return {"name": name, "passed": bool(measured <= tolerance),
            "measured": float(measured), "tolerance": float(tolerance),
            "detail": detail}


def _check_flag(name, ok, detail=""):
    return {"name": name, "passed": bool(ok), "measured": float(not ok),
            "tolerance": 0.0, "detail": detail}


def _check_window(name, value, lo, hi, detail=""):
    return {"name": name, "passed": bool(lo <= value <= hi),
            "measured": float(value), "tolerance": float(hi),
            "detail": detail or ("want %.3g..%.3g" % (lo, hi))}


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _pressure_curve(susp, q_min, q_max, n, threads, label=None):
    src = lambda p: flow_pressure(susp, p)
    q = np.linspace(q_min, q_max, int(n))
    P = _parallel_map(src, q, threads)
    return PressureCurve(q, np.asarray(P, dtype=float), source=src,
                         label=label)


# ---------------------------------------------------------------------------
# the experiments


def _run_riccati_validate(cfg, model, out, threads):
    p = cfg.merged_params()
    if not isinstance(model, (ConstantNegative, OctagonHyperbolic)):
        raise ConfigError("riccati-validate needs a constant-curvature model")
    k = math.sqrt(model.max_abs_curvature())
    rng = np.random.default_rng(cfg.seed)
    v0 = model.sample_state(rng)

    trace = unstable_riccati(model, v0, T=p["T"], dt=p["dt"])
    trace.to_csv(os.path.join(out, "trace.csv"))
    phi_err = float(np.abs(trace.phi_u() + k).max())
    u_err = float(np.abs(trace.u - k).max())

    est = forward_exponent(model, v0, T=p["T"], dt=p["dt"])

    # step-halving against the exact settling solution u = k tanh(k t)
    sig = CurvatureSignal.constant(-k * k)
    errs = []
    for j in range(3):
        d = p["dt_conv"] / 2.0 ** j
        tr = riccati_integrate(sig, 0.0, T=p["span_conv"], dt=d)
        errs.append(float(np.abs(tr.u - k * np.tanh(k * tr.t)).max()))
    ratios = [errs[j] / errs[j + 1] for j in range(2)]
    _write_csv(os.path.join(out, "convergence.csv"),
               ["dt", "max_err", "ratio_to_prev"],
               [(p["dt_conv"] / 2.0 ** j, errs[j],
                 math.nan if j == 0 else ratios[j - 1]) for j in range(3)])

    checks = [
        _check("unstable-rate-constant", u_err, p["tol_phi"],
               "sup |u - k| on the settled branch"),
        _check("jacobian-rate-constant", phi_err, p["tol_phi"],
               "sup |phi_u + k|"),
        _check("forward-exponent", abs(est.chi - k), p["tol_chi"],
               "window mean of u against k"),
        _check("exponent-estimators-agree", est.window_gap, p["tol_chi"],
               "mean u vs mean -phi_u"),
        _check_window("order-ratio-1", ratios[0], p["ratio_lo"],
                      p["ratio_hi"], "halving dt once"),
        _check_window("order-ratio-2", ratios[1], p["ratio_lo"],
                      p["ratio_hi"], "halving dt twice"),
    ]
    return checks, ["trace.csv", "convergence.csv"]


def _run_anosov_baseline(cfg, model, out, threads):
    p = cfg.merged_params()
    if not isinstance(model, (ConstantNegative, OctagonHyperbolic)):
        raise ConfigError("anosov-baseline needs a constant-curvature model")
    k = math.sqrt(model.max_abs_curvature())

    ens = ensemble_sample(model, int(p["n_seeds"]), T=p["T"], dt=p["dt"],
                          seed=cfg.seed)
    ens.to_csv(os.path.join(out, "ensemble.csv"))
    ens.to_json(os.path.join(out, "ensemble.json"))
    chis = ens.chis[ens.valid()]
    checks = [
        _check("all-seeds-valid", len(ens.records) - len(chis), 0.0,
               "burn-in settled for every seed"),
        _check("exponent-constant", float(np.abs(chis - k).max()),
               p["tol_chi"], "every seed sees chi = k"),
        _check("exponent-spread", float(chis.std()), p["tol_chi"],
               "no dispersion in constant curvature"),
    ]
    artifacts = ["ensemble.csv", "ensemble.json"]

    if isinstance(model, OctagonHyperbolic):
        axis = octagon_axis_orbit(model, dt=p["dt"])
        rec = orbit_record("axis-0", model, path=axis)
        _write_csv(os.path.join(out, "axis_orbit.csv"),
                   ["name", "period", "chi", "chi_bound", "saturated",
                    "label"],
                   [(rec.name, rec.period, rec.chi, rec.chi_bound,
                     rec.saturated, rec.label)])
        artifacts.append("axis_orbit.csv")
        checks.append(_check("closed-orbit-exponent", abs(rec.chi - k),
                             1e-9, "periodic Riccati point on the axis"))
        checks.append(_check_flag("closed-orbit-saturated", rec.saturated,
                                  "rate meets the curvature bound"))
    return checks, artifacts


def _run_corner_demo(cfg, model, out, threads):
    p = cfg.merged_params()
    susp = _calibrated_shift().with_zero_component()
    curve = _pressure_curve(susp, p["q_min"], p["q_max"], p["n_q"], threads,
                            label="two-shift union zero loop")
    curve.to_csv(os.path.join(out, "pressure.csv"))

    rep = detect_corner(curve, p["corner_q"])
    with open(os.path.join(out, "corner.json"), "w") as fh:
        json.dump(asdict(rep), fh, indent=1)

    hits = scan_corners(curve)
    loc_err = max(abs(r.q0 - p["corner_q"]) for r in hits) if hits else \
        math.inf

    alphas = np.linspace(p["alpha_lo"], p["alpha_hi"], int(p["n_alpha"]))
    spec = legendre_conjugate(curve, alphas=alphas)
    _write_csv(os.path.join(out, "alpha_table.csv"),
               ["alpha", "E", "E_minus_alpha"],
               [(a, e, e - a) for a, e in zip(spec.alphas, spec.E)])

    checks = [
        _check_flag("corner-detected", rep.corner,
                    "one-sided slopes split at q = %g" % p["corner_q"]),
        _check("right-slope-zero", abs(rep.d_right), p["tol_dright"],
               "flat branch beyond the crossover"),
        _check("left-slope-chi1", abs(rep.d_left + _CAL_CHI1),
               p["tol_dleft"], "smooth branch slope -chi at q = 1"),
        _check_flag("zero-pressure-at-corner", rep.pesin_ok,
                    "P(1) = 0 at the crossover"),
        _check_flag("flat-tail", rep.flat_tail_ok, "P = 0 for q >= 1"),
        _check("corner-localized", loc_err, 2.0 * curve.dq,
               "scan hits cluster at the crossover"),
        _check("diagonal-spectrum", float(np.abs(spec.E - spec.alphas).max()),
               p["tol_legendre"],
               "E(alpha) = alpha on the linear-branch range"),
    ]
    return checks, ["pressure.csv", "corner.json", "alpha_table.csv"]


def _run_lambda_ell_sweep(cfg, model, out, threads):
    p = cfg.merged_params()
    k = p["k"]
    dt = p["dt"]

    flat_band = CollarProfile(rate=k, width=0.25, slope=0.0,
                              half_length=6.0, f0=1.0)
    curved = CollarProfile(rate=k, width=0.0, slope=0.0,
                           half_length=6.0, f0=1.0)
    octagon = OctagonHyperbolic(k)
    sine = CurvatureSignal.sine(p["sine_mean"], p["sine_amplitude"],
                                p["sine_period"])

    lib = OrbitLibrary()
    lib.add(orbit_record("waist-flat", flat_band,
                         path=collar_waist_orbit(flat_band, 0.0, dt=dt)))
    lib.add(orbit_record("waist-curved", curved,
                         path=collar_waist_orbit(curved, 0.0, dt=dt)))
    lib.add(orbit_record("axis-0", octagon,
                         path=octagon_axis_orbit(octagon, 0, dt=dt)))
    lib.add(orbit_record("axis-1", octagon,
                         path=octagon_axis_orbit(octagon, 1, dt=dt)))
    lib.add(orbit_record("sine-band", sine, dt=dt))
    lib_path = os.path.join(out, "library.json")
    lib.to_json(lib_path)

    rep = build_lambda_ell(lib, p["levels"])
    _write_csv(os.path.join(out, "lambda_levels.csv"),
               ["ell", "count", "members"],
               [(ell, len(mem), ";".join(mem))
                for ell, mem in zip(rep.ells, rep.members)])

    flat_leak = sum("waist-flat" in mem for mem in rep.members)
    schwarz = max(rec.chi - rec.chi_bound for rec in lib)
    monotone = all(rep.counts[i] >= rep.counts[i + 1]
                   for i in range(len(rep.counts) - 1))

    rebuilt = OrbitLibrary.from_json(lib_path, dt=dt)
    drift = max(abs(rebuilt[n].chi - lib[n].chi) for n in lib.names)

    checks = [
        _check_flag("levels-nested", rep.is_nested(),
                    "higher level sets sit inside lower ones"),
        _check("flat-orbit-excluded", flat_leak, 0.0,
               "zero-exponent band member never qualifies"),
        _check_flag("counts-monotone", monotone,
                    "member counts fall as the level rises"),
        _check("schwarz-bound", schwarz, 1e-6,
               "chi <= sqrt(sup -K) for every record"),
        _check("library-roundtrip", drift, 1e-8,
               "exponents survive JSON reload"),
    ]
    return checks, ["library.json", "lambda_levels.csv"]


def _run_spectrum_report(cfg, model, out, threads):
    p = cfg.merged_params()
    susp = _calibrated_shift()
    curve = _pressure_curve(susp, p["q_min"], p["q_max"], p["n_q"], threads,
                            label="calibrated two-shift")
    curve.to_csv(os.path.join(out, "pressure.csv"))

    chi_lo, chi_hi = exponent_range(curve)
    spec = legendre_conjugate(curve)
    spec.to_csv(os.path.join(out, "spectrum.csv"))

    ok = spec.valid()
    d2 = np.diff(spec.E[ok], 2)
    d_viol = float(np.maximum(spec.D[ok] - 1.0, -spec.D[ok]).max())
    # Fenchel-Young on the full grid: E(a) <= P(q) + q a everywhere
    fy = float((spec.E[:, None]
                - (curve.P[None, :] + np.outer(spec.alphas, curve.q)))
               [ok, :].max())

    qs = np.linspace(p["q_eq_lo"], p["q_eq_hi"], int(p["n_eq"]))
    stats = _parallel_map(lambda q: equilibrium_stats(susp, float(q)), qs,
                          threads)
    _write_csv(os.path.join(out, "equilibrium.csv"),
               ["q", "pressure", "chi", "entropy", "variance"],
               [(s.q, s.pressure, s.chi, s.entropy, s.variance)
                for s in stats])
    at_chi = legendre_conjugate(curve, alphas=[s.chi for s in stats])
    leg_err = float(np.abs(at_chi.E
                           - np.array([s.entropy for s in stats])).max())

    checks = [
        _check("range-lower", abs(chi_lo - math.log(4.0 / 3.0)),
               p["tol_range"], "slowest rate from the right end slope"),
        _check("range-upper", abs(chi_hi - math.log(4.0)),
               p["tol_range"], "fastest rate from the left end slope"),
        _check("spectrum-concave", float(d2.max()) if len(d2) else 0.0,
               p["tol_concave"], "second differences of E"),
        _check("dimension-ratio-bounded", d_viol, 1e-6,
               "E/alpha stays inside [0, 1]"),
        _check("fenchel-young", fy, 1e-9,
               "E(alpha) <= P(q) + q alpha on the grid"),
        _check("legendre-identity", leg_err, p["tol_legendre"],
               "E(chi_q) equals the equilibrium entropy"),
    ]
    return checks, ["pressure.csv", "spectrum.csv", "equilibrium.csv"]


@dataclass(frozen=True)
class _Experiment:
    fn: object
    description: str
    default_model: object      # config dict or None (symbolic-only)
    defaults: dict


_REGISTRY = {
    "riccati-validate": _Experiment(
        _run_riccati_validate,
        "constant-curvature closed forms: u = k, phi_u = -k, chi = k, "
        "4th-order step halving",
        {"variant": "ConstantNegative", "k": 1.0},
        {"T": 50.0, "dt": 1e-3, "span_conv": 2.0, "dt_conv": 1e-2,
         "tol_phi": 1e-6, "tol_chi": 1e-4, "ratio_lo": 13.0,
         "ratio_hi": 19.0}),
    "anosov-baseline": _Experiment(
        _run_anosov_baseline,
        "random-seed exponent ensemble on a constant-curvature surface, "
        "plus the exact axis orbit on the octagon",
        {"variant": "OctagonHyperbolic", "k": 1.0},
        {"n_seeds": 16, "T": 40.0, "dt": 1e-3, "tol_chi": 1e-4}),
    "corner-demo": _Experiment(
        _run_corner_demo,
        "pressure crossover of the calibrated two-shift union a zero "
        "loop: one-sided slopes, flat tail, E(alpha) = alpha table",
        None,
        {"q_min": -2.0, "q_max": 4.0, "n_q": 241, "corner_q": 1.0,
         "n_alpha": 24, "alpha_lo": 0.02, "alpha_hi": 0.55,
         "tol_dleft": 2e-3, "tol_dright": 1e-9, "tol_legendre": 1e-4}),
    "lambda-ell-sweep": _Experiment(
        _run_lambda_ell_sweep,
        "closed-orbit library across collar, octagon, and signal models; "
        "exponent level sets with the flat member excluded",
        None,
        {"levels": [0.3, 0.95, 1.2], "dt": 1e-3, "k": 1.0,
         "sine_mean": -1.0, "sine_amplitude": 0.4, "sine_period": 5.0}),
    "spectrum-report": _Experiment(
        _run_spectrum_report,
        "full multifractal report for the calibrated two-shift: exponent "
        "range, concave spectrum, equilibrium table",
        None,
        {"q_min": -40.0, "q_max": 40.0, "n_q": 401, "n_eq": 13,
         "q_eq_lo": -6.0, "q_eq_hi": 6.0, "tol_range": 2e-3,
         "tol_legendre": 1e-6, "tol_concave": 1e-9}),
}


def list_experiments():
    return [(name, exp.description) for name, exp in _REGISTRY.items()]


# ---------------------------------------------------------------------------
# config


_POSITIVE_KEYS = ("dt", "T", "span_conv", "dt_conv", "sine_period", "k")


@dataclass
class ExperimentConfig:
    """One experiment invocation: name, model, parameters, seed, output."""

    experiment: str
    model: dict = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = None

    def validate(self):
        if self.experiment not in _REGISTRY:
            raise ConfigError("unknown experiment %r (see list-experiments)"
                              % self.experiment)
        exp = _REGISTRY[self.experiment]
        unknown = set(self.params) - set(exp.defaults)
        if unknown:
            raise ConfigError("unknown parameter(s) %s for %s"
                              % (sorted(unknown), self.experiment))
        if exp.default_model is None and self.model is not None:
            raise ConfigError("%s runs on built-in models and takes no "
                              "model spec" % self.experiment)
        merged = self.merged_params()
        for key, val in merged.items():
            if key.startswith("tol") or key in _POSITIVE_KEYS:
                if not (isinstance(val, (int, float)) and val > 0.0
                        and math.isfinite(val)):
                    raise ConfigError("parameter %r must be positive, got %r"
                                      % (key, val))
        if "levels" in merged:
            lv = merged["levels"]
            if not lv or any(not (float(e) > 0.0) for e in lv):
                raise ConfigError("levels must be a non-empty positive list")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        return self

    def merged_params(self):
        merged = dict(_REGISTRY[self.experiment].defaults)
        merged.update(self.params)
        return merged

    def build_model(self):
        spec = self.model or _REGISTRY[self.experiment].default_model
        return model_from_config(spec) if spec is not None else None

    def to_dict(self):
        return {"experiment": self.experiment, "model": self.model,
                "params": dict(self.params), "seed": self.seed,
                "out": self.out}

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be a JSON object")
        unknown = set(d) - {"experiment", "model", "params", "seed", "out"}
        if unknown:
            raise ConfigError("unknown config field(s) %s" % sorted(unknown))
        if "experiment" not in d:
            raise ConfigError("config needs an 'experiment' name")
        return cls(experiment=d["experiment"], model=d.get("model"),
                   params=dict(d.get("params") or {}),
                   seed=d.get("seed", 0), out=d.get("out")).validate()

    @classmethod
    def from_json(cls, text_or_path):
        try:
            data = json.loads(text_or_path)
        except json.JSONDecodeError:
            try:
                with open(text_or_path) as fh:
                    data = json.load(fh)
            except OSError as exc:
                raise ConfigError("cannot read config: %s" % exc) from None
            except json.JSONDecodeError as exc:
                raise ConfigError("config is not valid JSON: %s"
                                  % exc) from None
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# runner


@dataclass
class ExperimentResult:
    experiment: str
    passed: bool
    checks: list
    out_dir: str
    artifacts: dict            # name -> sha256
    wall_time_s: float


def _resolve_threads(threads):
    if threads is None:
        threads = os.environ.get("RANK1_THERMO_THREADS", "1")
    try:
        threads = int(threads)
    except (TypeError, ValueError):
        raise ConfigError("threads must be an integer, got %r"
                          % (threads,)) from None
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    return threads


def run_experiment(config, threads=None):
    """Run one experiment; returns the result after sealing the manifest."""
    config.validate()
    if not config.out:
        raise ConfigError("output directory not set")
    threads = _resolve_threads(threads)
    exp = _REGISTRY[config.experiment]
    model = config.build_model()
    os.makedirs(config.out, exist_ok=True)

    t0 = time.perf_counter()
    checks, artifact_names = exp.fn(config, model, config.out, threads)
    wall = time.perf_counter() - t0

    passed = all(c["passed"] for c in checks)
    with open(os.path.join(config.out, "summary.json"), "w") as fh:
        json.dump({"experiment": config.experiment, "passed": passed,
                   "checks": checks}, fh, indent=1)

    shas = {}
    for name in list(artifact_names) + ["summary.json"]:
        path = os.path.join(config.out, name)
        shas[name] = {"sha256": _sha256(path),
                      "bytes": os.path.getsize(path)}
    manifest = {
        "experiment": config.experiment,
        "config": config.to_dict(),
        "package_version": __version__,
        "backend": BACKEND,
        "seed": config.seed,
        "wall_time_s": wall,
        "artifacts": shas,
    }
    with open(os.path.join(config.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    return ExperimentResult(config.experiment, passed, checks, config.out,
                            {k: v["sha256"] for k, v in shas.items()}, wall)


# ---------------------------------------------------------------------------
# diffing runs


@dataclass
class DiffReport:
    """Artifact-level differences between two runs.

    `entries` lists numeric fields differing beyond tolerance (plus any
    structural mismatches); `notes` records config-level differences that
    do not by themselves fail a regression gate (seed, directories).
    """

    dir_a: str
    dir_b: str
    tol: float
    entries: list
    notes: list

    @property
    def empty(self):
        return not self.entries

    def format(self):
        lines = ["diff %s %s (tol %.3g)" % (self.dir_a, self.dir_b,
                                            self.tol)]
        for n in self.notes:
            lines.append("  note: %s" % n)
        if self.empty:
            lines.append("  no artifact differences")
        for e in self.entries:
            lines.append("  %s :: %s :: %s" % (e["artifact"], e["field"],
                                               e["what"]))
        return "\n".join(lines)


def _load_manifest(d):
    path = os.path.join(d, "manifest.json")
    if not os.path.exists(path):
        raise MissingManifest("no manifest.json in %s" % d)
    with open(path) as fh:
        return json.load(fh)


def _num_or_none(s):
    try:
        return float(s)
    except (TypeError, ValueError):
        return None


def _diff_csv(name, pa, pb, tol, entries):
    with open(pa) as fh:
        rows_a = list(csv.reader(fh))
    with open(pb) as fh:
        rows_b = list(csv.reader(fh))
    if not rows_a or not rows_b or rows_a[0] != rows_b[0]:
        entries.append({"artifact": name, "field": "header",
                        "what": "column sets differ"})
        return
    if len(rows_a) != len(rows_b):
        entries.append({"artifact": name, "field": "rows",
                        "what": "%d vs %d rows"
                        % (len(rows_a) - 1, len(rows_b) - 1)})
        return
    header = rows_a[0]
    for j, col in enumerate(header):
        worst = 0.0
        text_mismatch = 0
        for ra, rb in zip(rows_a[1:], rows_b[1:]):
            va, vb = _num_or_none(ra[j]), _num_or_none(rb[j])
            if va is None or vb is None:
                text_mismatch += ra[j] != rb[j]
            elif math.isnan(va) and math.isnan(vb):
                pass
            elif math.isnan(va) or math.isnan(vb):
                worst = math.inf
            else:
                worst = max(worst, abs(va - vb))
        if text_mismatch:
            entries.append({"artifact": name, "field": col,
                            "what": "%d text mismatches" % text_mismatch})
        elif worst > tol:
            entries.append({"artifact": name, "field": col,
                            "what": "max abs diff %.6g" % worst})


def _flatten_json(obj, prefix, into):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten_json(obj[k], "%s.%s" % (prefix, k) if prefix else k,
                          into)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten_json(v, "%s[%d]" % (prefix, i), into)
    else:
        into[prefix] = obj


def _diff_json(name, pa, pb, tol, entries):
    with open(pa) as fh:
        flat_a = {}
        _flatten_json(json.load(fh), "", flat_a)
    with open(pb) as fh:
        flat_b = {}
        _flatten_json(json.load(fh), "", flat_b)
    for key in sorted(set(flat_a) | set(flat_b)):
        if "wall_time" in key:
            continue
        if key not in flat_a or key not in flat_b:
            entries.append({"artifact": name, "field": key,
                            "what": "missing on one side"})
            continue
        va, vb = flat_a[key], flat_b[key]
        num_a = isinstance(va, (int, float)) and not isinstance(va, bool)
        num_b = isinstance(vb, (int, float)) and not isinstance(vb, bool)
        if num_a and num_b:
            fa, fb = float(va), float(vb)
            if math.isnan(fa) and math.isnan(fb):
                continue
            d = math.inf if math.isnan(fa) or math.isnan(fb) else \
                abs(fa - fb)
            if d > tol:
                entries.append({"artifact": name, "field": key,
                                "what": "abs diff %.6g" % d})
        elif va != vb:
            entries.append({"artifact": name, "field": key,
                            "what": "%r vs %r" % (va, vb)})


def diff_runs(dir_a, dir_b, tol=0.0):
    """Field-by-field numeric diff of two sealed runs; wall time ignored."""
    ma, mb = _load_manifest(dir_a), _load_manifest(dir_b)
    entries = []
    notes = []

    if ma["experiment"] != mb["experiment"]:
        entries.append({"artifact": "manifest.json", "field": "experiment",
                        "what": "%r vs %r" % (ma["experiment"],
                                              mb["experiment"])})
    flat_a, flat_b = {}, {}
    _flatten_json(ma.get("config", {}), "config", flat_a)
    _flatten_json(mb.get("config", {}), "config", flat_b)
    for key in sorted(set(flat_a) | set(flat_b)):
        if flat_a.get(key) != flat_b.get(key):
            notes.append("%s: %r vs %r" % (key, flat_a.get(key),
                                           flat_b.get(key)))
    if ma.get("package_version") != mb.get("package_version"):
        notes.append("package_version: %r vs %r"
                     % (ma.get("package_version"),
                        mb.get("package_version")))

    names_a = set(ma.get("artifacts", {}))
    names_b = set(mb.get("artifacts", {}))
    for name in sorted(names_a ^ names_b):
        entries.append({"artifact": name, "field": "-",
                        "what": "present only in %s"
                        % (dir_a if name in names_a else dir_b)})
    for name in sorted(names_a & names_b):
        if ma["artifacts"][name]["sha256"] == mb["artifacts"][name]["sha256"]:
            continue
        pa, pb = os.path.join(dir_a, name), os.path.join(dir_b, name)
        if name.endswith(".csv"):
            _diff_csv(name, pa, pb, tol, entries)
        elif name.endswith(".json"):
            _diff_json(name, pa, pb, tol, entries)
        else:
            entries.append({"artifact": name, "field": "-",
                            "what": "binary contents differ"})
    return DiffReport(dir_a, dir_b, tol, entries, notes)

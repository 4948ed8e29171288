"""Command-line front end: ``ct phantom|simulate|reconstruct|verify|compare``.

Every command is driven by a JSON config (validated against
:data:`CONFIG_SCHEMA`; unknown keys are rejected) plus a few overriding
flags, and writes its outputs together with a manifest recording the config
hash, seed, and library versions.  Identical (config, seed) inputs produce
byte-identical outputs.

Exit codes: 0 success, 2 config/validation error, 3 optimization divergence.
"""

import argparse
import hashlib
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, theory
from .exceptions import DivergenceError
from .model import NoiseSpec, measure
from .operators import from_config as operator_from_config
from .optimize import (DEFAULT_BASE_STEP, StepSchedule, auto_schedule,
                       estimate_signal_norm, regularized_descent)
from .phantom import DENSITY_PRESETS, PhantomConfig, psnr, shepp_logan
from .preprocess import DEFAULT_LOG_EPS, log_preprocess
from .volume_io import (load_measurements, load_volume, save_measurements,
                        save_slice_pgm, save_volume)

__all__ = ["main", "CONFIG_SCHEMA", "REPORT_SCHEMA", "load_config",
           "cmd_phantom", "cmd_simulate", "cmd_reconstruct", "cmd_verify",
           "cmd_compare", "log_preprocess"]

_SCHEDULE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": ["auto", "constant", "theorem"]},
        "mu": {"type": "number", "exclusiveMinimum": 0},
        "scale": {"type": "number", "exclusiveMinimum": 0},
        "norm_x": {"oneOf": [{"type": "number", "minimum": 0},
                             {"const": "estimate"}]},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "nlct experiment config",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "phantom": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dims": {"type": "array", "minItems": 2, "maxItems": 3,
                         "items": {"type": "integer", "minimum": 16}},
                "density_scale": {"type": "number", "exclusiveMinimum": 0},
                "preset": {"enum": sorted(DENSITY_PRESETS)},
                "test_ellipsoid_density": {"type": "number"},
                "test_ellipsoid_enlargement": {"type": "number", "exclusiveMinimum": 0},
                "volume_path": {"type": "string"},
            },
        },
        "operator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["gaussian", "radon2d", "conebeam3d"]},
                "m": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "angles": {"oneOf": [{"type": "integer", "minimum": 1},
                                     {"type": "array", "items": {"type": "number"}}]},
                "det_bins": {"type": "integer", "minimum": 1},
                "det_spacing": {"type": "number", "exclusiveMinimum": 0},
                "orbit_radius": {"type": "number", "exclusiveMinimum": 0},
                "n_views": {"type": "integer", "minimum": 1},
                "det_rows": {"type": "integer", "minimum": 1},
                "det_cols": {"type": "integer", "minimum": 1},
                "step_voxels": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma": {"type": "number", "minimum": 0},
                "quant_bits": {"type": ["integer", "null"], "minimum": 1},
                "store_dtype": {"enum": ["float32", "float64"]},
            },
        },
        "reconstruction": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["nonlinear", "linearized"]},
                "iterations": {"type": "integer", "minimum": 1},
                "tv_weight": {"type": "number", "minimum": 0},
                "eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "tol": {"type": "number", "minimum": 0},
                "schedule": _SCHEDULE_SCHEMA,
                "measurements_path": {"type": "string"},
            },
        },
        "compare": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "presets": {"type": "array", "minItems": 1,
                            "items": {"enum": sorted(DENSITY_PRESETS)}},
                "iterations": {"type": "integer", "minimum": 1},
                "tv_weight": {"type": "number", "minimum": 0},
                "eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "schedule": _SCHEDULE_SCHEMA,
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "integer", "minimum": 10000},
                "trials": {"type": "integer", "minimum": 1},
                "norms": {"type": "array", "items": {"type": "number", "minimum": 0}},
            },
        },
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "nlct verification summary",
    "type": "object",
    "additionalProperties": False,
    "required": ["seed", "quick", "reports", "all_passed"],
    "properties": {
        "seed": {"type": "integer"},
        "quick": {"type": "boolean"},
        "all_passed": {"type": "boolean"},
        "reports": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["quantity", "params", "estimate", "se", "bound",
                             "direction", "passed"],
                "properties": {
                    "quantity": {"type": "string"},
                    "params": {"type": "object"},
                    "estimate": {"type": "number"},
                    "se": {"type": "number"},
                    "bound": {"type": "number"},
                    "direction": {"enum": ["lower", "upper", "band"]},
                    "passed": {"type": "boolean"},
                    "extra": {"type": "object"},
                },
            },
        },
    },
}

_DEFAULT_TV_WEIGHT = 1e-6
_DEFAULT_ITERATIONS = 500


def load_config(path):
    """Read and schema-validate a JSON config; unknown keys are rejected."""
    with open(path) as fh:
        cfg = json.load(fh)
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    return cfg


def _config_hash(cfg):
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def _write_manifest(outdir, cfg, command):
    import numba
    import scipy

    manifest = {
        "command": command,
        "config_sha256": _config_hash(cfg),
        "seed": int(cfg.get("seed", 0)),
        "versions": {
            "nlct": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
    }
    (Path(outdir) / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                           sort_keys=True) + "\n")


def _outdir(cfg):
    out = Path(cfg.get("output_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _phantom_from_config(cfg):
    blk = dict(cfg.get("phantom", {}))
    if "volume_path" in blk:
        return load_volume(blk["volume_path"])
    dims = tuple(blk.get("dims", (64, 64, 64)))
    density = blk.get("test_ellipsoid_density")
    if density is None and "preset" in blk:
        density = DENSITY_PRESETS[blk["preset"]]
    pc = PhantomConfig(
        density_scale=blk.get("density_scale", 0.25),
        test_ellipsoid_density=density,
        test_ellipsoid_enlargement=blk.get("test_ellipsoid_enlargement", 1.3),
    )
    return shepp_logan(dims, pc)


def _operator_for(cfg, dims):
    return operator_from_config(cfg["operator"], grid_dims=dims,
                                seed=int(cfg.get("seed", 0)))


def _write_previews(outdir, signal, stem="preview"):
    vol = signal.reshaped()
    if vol.ndim == 2:
        save_slice_pgm(Path(outdir) / f"{stem}.pgm", vol)
    else:
        mid = [d // 2 for d in vol.shape]
        save_slice_pgm(Path(outdir) / f"{stem}_xy.pgm", vol[:, :, mid[2]])
        save_slice_pgm(Path(outdir) / f"{stem}_xz.pgm", vol[:, mid[1], :])
        save_slice_pgm(Path(outdir) / f"{stem}_yz.pgm", vol[mid[0], :, :])


def cmd_phantom(cfg):
    out = _outdir(cfg)
    signal = _phantom_from_config(cfg)
    save_volume(out / "volume.raw", signal)
    _write_previews(out, signal)
    _write_manifest(out, cfg, "phantom")
    print(f"wrote {out / 'volume.raw'} (dims {signal.geometry.dims})")
    return 0


def _noise_from_config(cfg):
    blk = cfg.get("noise", {})
    spec = None
    if blk.get("sigma", 0) > 0 or blk.get("quant_bits") is not None:
        spec = NoiseSpec(sigma=blk.get("sigma", 0.0), quant_bits=blk.get("quant_bits"))
    dtype = np.dtype(blk.get("store_dtype", "float64"))
    return spec, dtype


def cmd_simulate(cfg):
    out = _outdir(cfg)
    truth = _phantom_from_config(cfg)
    op = _operator_for(cfg, truth.geometry.dims)
    spec, dtype = _noise_from_config(cfg)
    mset = measure(op, truth, noise_spec=spec, seed=int(cfg.get("seed", 0)),
                   store_dtype=dtype)
    save_volume(out / "truth.raw", truth)
    save_measurements(out / "measurements.raw", mset, dtype=dtype.name)
    _write_manifest(out, cfg, "simulate")
    print(f"wrote {out / 'measurements.raw'} ({mset.m} rays, max y = {mset.y.max():.6g})")
    return 0


def _schedule_from_config(blk, op, y):
    blk = dict(blk or {"mode": "auto"})
    mode = blk.get("mode", "auto")
    if mode == "auto":
        return auto_schedule(op, scale=blk.get("scale", 1.5))
    if mode == "constant":
        return StepSchedule(mode="constant", mu=blk.get("mu", 1.0))
    norm_x = blk.get("norm_x", "estimate")
    if norm_x == "estimate":
        norm_x = estimate_signal_norm(y)
    return StepSchedule(mode="theorem", norm_x=float(norm_x),
                        mu=blk.get("mu", DEFAULT_BASE_STEP))


def _reconstruct(op, mset, blk, truth=None):
    method = blk.get("method", "nonlinear")
    iters = blk.get("iterations", _DEFAULT_ITERATIONS)
    tv_weight = blk.get("tv_weight", _DEFAULT_TV_WEIGHT)
    tol = blk.get("tol", 0.0)
    geometry = truth.geometry if truth is not None else None
    if method == "linearized":
        yhat, n_clamped = log_preprocess(mset.y, eps=blk.get("eps", DEFAULT_LOG_EPS))
        sched = _schedule_from_config(blk.get("schedule"), op, mset.y)
        traj = regularized_descent(op, yhat, sched, tv_weight, max_iter=iters,
                                   tol=tol, x_ref=truth, geometry=geometry,
                                   linearized=True)
        return traj, {"method": method, "n_clamped": n_clamped}
    sched = _schedule_from_config(blk.get("schedule"), op, mset.y)
    traj = regularized_descent(op, mset, sched, tv_weight, max_iter=iters,
                               tol=tol, x_ref=truth, geometry=geometry)
    return traj, {"method": method, "n_clamped": 0}


def cmd_reconstruct(cfg):
    out = _outdir(cfg)
    blk = cfg.get("reconstruction", {})
    mpath = Path(blk.get("measurements_path", out / "measurements.raw"))
    if not mpath.exists():
        raise FileNotFoundError(f"measurements not found at {mpath}; run `ct simulate` first")
    mset = load_measurements(mpath)
    truth = None
    truth_path = Path(out / "truth.raw")
    if "phantom" in cfg:
        truth = _phantom_from_config(cfg)
    elif truth_path.exists():
        truth = load_volume(truth_path)
    if truth is None:
        raise ValueError("reconstruction needs a phantom block or truth.raw for the grid")
    op = _operator_for(cfg, truth.geometry.dims)
    traj, info = _reconstruct(op, mset, blk, truth=truth)
    recon = type(truth)(values=traj.z, geometry=truth.geometry)
    save_volume(out / "recon.raw", recon)
    _write_previews(out, recon, stem="recon")
    traj.to_csv(out / "trajectory.csv")
    metrics = {
        "method": info["method"],
        "iterations": int(traj.n_iter),
        "final_loss": float(traj.loss[-1]),
        "halvings": int(traj.halvings),
        "n_clamped": info["n_clamped"],
        "psnr_db": float(psnr(recon, truth)),
    }
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, cfg, "reconstruct")
    print(f"{info['method']} reconstruction: PSNR {metrics['psnr_db']:.2f} dB "
          f"({traj.n_iter} iterations)")
    return 0


def cmd_compare(cfg):
    out = _outdir(cfg)
    blk = cfg.get("compare", {})
    presets = blk.get("presets", ["soft_tissue", "bone", "metal"])
    results = {}
    for preset in presets:
        sub = dict(cfg)
        sub_phantom = dict(cfg.get("phantom", {}))
        sub_phantom["preset"] = preset
        sub_phantom.pop("test_ellipsoid_density", None)
        sub["phantom"] = sub_phantom
        truth = _phantom_from_config(sub)
        op = _operator_for(cfg, truth.geometry.dims)
        spec, dtype = _noise_from_config(cfg)
        mset = measure(op, truth, noise_spec=spec, seed=int(cfg.get("seed", 0)),
                       store_dtype=dtype)
        rec_blk = {
            "iterations": blk.get("iterations", _DEFAULT_ITERATIONS),
            "tv_weight": blk.get("tv_weight", _DEFAULT_TV_WEIGHT),
            "eps": blk.get("eps", DEFAULT_LOG_EPS),
            "schedule": blk.get("schedule"),
        }
        entry = {"max_y": float(mset.y.max()),
                 "saturated_rays": int(np.sum(mset.y >= 1.0))}
        for method in ("nonlinear", "linearized"):
            traj, info = _reconstruct(op, mset, {**rec_blk, "method": method}, truth=truth)
            entry[method] = {
                "psnr_db": float(psnr(traj.z, truth)),
                "halvings": int(traj.halvings),
                "n_clamped": info["n_clamped"],
            }
        entry["margin_db"] = entry["nonlinear"]["psnr_db"] - entry["linearized"]["psnr_db"]
        results[preset] = entry
        print(f"[{preset}] nonlinear {entry['nonlinear']['psnr_db']:.2f} dB, "
              f"linearized {entry['linearized']['psnr_db']:.2f} dB, "
              f"margin {entry['margin_db']:+.2f} dB")
    (out / "comparison.json").write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, cfg, "compare")
    return 0


def _report(quantity, params, estimate, se, bound, direction, passed, extra=None):
    return {"quantity": quantity, "params": params, "estimate": float(estimate),
            "se": float(se), "bound": float(bound), "direction": direction,
            "passed": bool(passed), "extra": extra or {}}


def _binom_se(rate, trials):
    return float(np.sqrt(max(rate * (1.0 - rate), 1e-12) / trials))


def cmd_verify(cfg, quick=False):
    out = _outdir(cfg)
    seed = int(cfg.get("seed", 0))
    blk = cfg.get("verify", {})
    samples = blk.get("samples", 10000 if quick else 50000)
    norms = blk.get("norms", [0.5, 1.0, 2.0])
    reports = []

    # first-iterate concentration at the claimed sampling ratio, plus a sweep
    n = 128
    trials = blk.get("trials", 50 if quick else 200)
    sweep = {}
    for fac in (5, 10, 20, 30, 40):
        sweep[fac] = theory.first_step_experiment(n, fac * n, 1.0, trials, seed=seed)
    rate5 = sweep[5]
    reports.append(_report(
        "first_step_rate_at_5n", {"n": n, "m": 5 * n, "norm_x": 1.0, "trials": trials},
        rate5, _binom_se(rate5, trials), 0.95, "lower", rate5 >= 0.95,
        extra={"rate_by_m_over_n": {str(k): v for k, v in sweep.items()}}))

    # norm estimator concentration (m stays at the claim's scale; quick mode
    # only trims the trial count)
    m_est = 100000
    t_est = 30 if quick else 100
    rate, _ = theory.norm_estimator_experiment(m_est, 1.0, t_est, seed=seed)
    reports.append(_report(
        "norm_estimate_within_2pct", {"m": m_est, "norm_x": 1.0, "trials": t_est},
        rate, _binom_se(rate, t_est), 0.95, "lower", rate >= 0.95))

    # correlation lower bounds
    for nx in norms:
        for fn in (theory.correlation_bound_case1, theory.correlation_bound_case2):
            rep = fn(nx, samples=samples, seed=seed)
            reports.append(_report(rep.quantity, rep.params, rep.estimate, rep.se,
                                   rep.bound, "lower", rep.passed, extra=rep.extra))

    # gradient smoothness constant
    for (sn, sm) in ((64, 64), (64, 256)):
        t_s = 200 if quick else 1000
        worst, bound = theory.smoothness_check(sn, sm, 1.0, t_s, seed=seed)
        reports.append(_report("smoothness_ratio", {"n": sn, "m": sm, "trials": t_s},
                               worst, 0.0, bound, "upper", worst <= bound))

    # gaussian widths
    est, se = theory.gaussian_width_m0(theory.ConeSpec("full_space", 400),
                                       samples=samples // 5 + 2000, seed=seed)
    reports.append(_report("width_full_space", {"n": 400}, est, se, 400.0, "band",
                           abs(est - 400.0) <= 0.02 * 400.0))
    for (s, nn) in ((1, 100), (5, 200)):
        est, se = theory.gaussian_width_m0(theory.ConeSpec("l1_sparse", nn, s),
                                           samples=samples // 5 + 2000, seed=seed)
        formula = theory.sparse_width_formula(s, nn)
        reports.append(_report(
            "width_l1_sparse", {"s": s, "n": nn}, est, se, formula, "band",
            abs(est - formula) <= 0.15 * formula,
            extra={"formula": formula}))

    # pseudoconvexity floor ordering: report the crossover instead of asserting
    _, _, crossover = theory.bound_crossover()
    reports.append(_report(
        "alpha_floor_crossover", {"norm_grid": [0.0, 10.0]},
        crossover if crossover is not None else -1.0, 0.0, 0.2, "band",
        crossover is not None,
        extra={"alpha_at_1": theory.combined_alpha(1.0)}))

    # sparse-recovery phase transition around the width estimate
    m0_est, _ = theory.gaussian_width_m0(theory.ConeSpec("l1_sparse", 200, 5),
                                         samples=4000, seed=seed)
    ratios = (0.2, 1.0, 3.0, 7.0, 20.0)
    m_grid = [max(1, int(np.ceil(r * m0_est))) for r in ratios]
    pt_trials = blk.get("trials", 10 if quick else 50)
    ms, rates = theory.phase_transition(m_grid, 200, 5, pt_trials, seed=seed,
                                        csv_path=out / "phase_transition.csv")
    mono = bool(np.all(np.diff(rates) >= -0.1))
    reports.append(_report(
        "phase_transition", {"n": 200, "s": 5, "trials": pt_trials,
                             "m0_estimate": float(m0_est)},
        float(rates[-1]), _binom_se(float(rates[-1]), pt_trials), 0.9, "lower",
        rates[-1] > 0.9 and rates[0] < 0.1 and mono,
        extra={"m_grid": [int(m) for m in ms], "rates": [float(r) for r in rates],
               "monotone": mono, "low_end_rate": float(rates[0])}))

    summary = {
        "seed": seed,
        "quick": bool(quick),
        "reports": reports,
        "all_passed": all(r["passed"] for r in reports),
    }
    jsonschema.validate(summary, REPORT_SCHEMA)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, cfg, "verify")
    for r in reports:
        flag = "PASS" if r["passed"] else "FAIL"
        print(f"[{flag}] {r['quantity']}: estimate={r['estimate']:.6g} "
              f"bound={r['bound']:.6g} ({r['direction']})")
    print(f"summary written to {out / 'summary.json'}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ct",
        description="Nonlinear CT reconstruction experiments and theory verification.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("phantom", "rasterize a synthetic volume and write previews"),
        ("simulate", "project a phantom into raw nonlinear measurements"),
        ("reconstruct", "recover a volume from stored measurements"),
        ("verify", "run the Monte Carlo theory-verification bundle"),
        ("compare", "nonlinear vs linearized reconstruction across density presets"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=False, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        if name == "verify":
            p.add_argument("--quick", action="store_true",
                           help="smaller sample counts (finishes in ~1-2 min)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
    except (json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        print(f"config validation failed at {path}: {exc.message}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["output_dir"] = args.out
    try:
        if args.command == "phantom":
            return cmd_phantom(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "reconstruct":
            return cmd_reconstruct(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, quick=args.quick)
        if args.command == "compare":
            return cmd_compare(cfg)
    except DivergenceError as exc:
        print(f"divergence at iteration {exc.iteration}: {exc}", file=sys.stderr)
        return 3
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

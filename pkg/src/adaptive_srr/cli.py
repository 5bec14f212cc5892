"""Command-line front end: ``adaptive-srr <subcommand> ...``.

The default output directory comes from ``$ADAPTIVE_SRR_OUT`` (else the
working directory). Failures exit nonzero after printing one JSON line
``{"error": ..., "message": ...}`` to stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .costmodel import ALGORITHMS, CostModelInput, cost_table, flops_probe
from .images import image_pool, shipped_image, skimage_pool
from .io import read_config, read_frames, read_pgm, write_frames, write_pgm
from .metrics import frame_report
from .motion import Motion
from .operators import Decimator, OperatorSet, laplacian, uniform_blur
from .registration import FlowParams, estimate_motions
from .srr import TABLE_OUTLIER, TABLE_OUTLIER_FREE, Algorithm, DivergenceError, SrrParams, bicubic_init, run_sequence
from .synth import OutlierSpec, SequenceSpec, degrade_sequence, synthesize


ENV_OUT = "ADAPTIVE_SRR_OUT"


class CliError(Exception):
    def __init__(self, message, **extra):
        super().__init__(message)
        self.extra = extra


def default_out() -> Path:
    return Path(os.environ.get(ENV_OUT, "."))


def _hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _write_manifest(path: Path, manifest: dict) -> None:
    manifest = dict(manifest)
    manifest["spec_hash"] = _hash({k: v for k, v in manifest.items() if k not in ("outputs", "spec_hash")})
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def load_image(ref: str) -> np.ndarray:
    """``builtin:<name>`` for a shipped or scikit-image sample, otherwise a PGM path."""
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        try:
            return shipped_image(f"{name}.pgm")
        except FileNotFoundError:
            return skimage_pool([name])[0]
    return read_pgm(ref)


def parse_outlier(text):
    if text in (None, "", "none"):
        return None
    try:
        onset, offset, side = (int(v) for v in text.split(":"))
    except ValueError:
        raise CliError(f"--outlier expects onset:offset:side, got {text!r}")
    return OutlierSpec(side=side, onset_frame=onset, offset_frame=offset)


def _merge(args, keys, config):
    """Flag value if given, else config file value, else the parser default."""
    out = {}
    for key, (conv, default) in keys.items():
        v = getattr(args, key, None)
        if v is None and key in config:
            v = conv(config[key])
        out[key] = default if v is None else v
    return out


def _motions_to_csv(path, motions):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "dy", "dx"])
        for t, m in enumerate(motions, 1):
            w.writerow([t, repr(m.shift[0]), repr(m.shift[1])])


def _motions_from_csv(path):
    with open(path, newline="") as fh:
        return [Motion.translation(float(r["dy"]), float(r["dx"])) for r in csv.DictReader(fh)]


def _ops(factor, laplacian_kind="isotropic"):
    lap = laplacian(laplacian_kind)
    return OperatorSet(decimator=Decimator(factor), blur=uniform_blur(3), smooth=lap, q=lap)


# --- subcommands ---------------------------------------------------------------

SYNTH_KEYS = {
    "image": (str, "builtin:camera"),
    "hr_size": (int, 256),
    "frames": (int, 200),
    "seed": (int, 0),
    "factor": (int, 2),
    "noise_var": (float, 10.0),
    "outlier": (str, None),
}


def cmd_synth(args) -> dict:
    if args.from_manifest:
        cfg = _load_manifest(args.from_manifest)["config"]
    else:
        cfg = _merge(args, SYNTH_KEYS, read_config(args.config) if args.config else {})
    out = Path(args.out or default_out())
    out.mkdir(parents=True, exist_ok=True)
    image = load_image(cfg["image"])
    spec = SequenceSpec(
        image, (cfg["hr_size"], cfg["hr_size"]), cfg["frames"], seed=cfg["seed"],
        decimation_factor=cfg["factor"], noise_variance=cfg["noise_var"], outlier=parse_outlier(cfg["outlier"]),
    )
    hr, lr, walk = synthesize(spec)
    write_frames(out / "hr.srrf", hr)
    write_frames(out / "lr.srrf", lr)
    _motions_to_csv(out / "motions.csv", walk)
    if args.pgm:
        for t, f in enumerate(lr, 1):
            write_pgm(out / f"lr_{t:04d}.pgm", f)
    manifest = {
        "command": "synth",
        "config": cfg,
        "source_sha256": hashlib.sha256(image.tobytes()).hexdigest(),
        "seeds": {"walk": cfg["seed"], "noise": [cfg["seed"], 1, "frame_index"]},
        "operators": spec.operators.describe(),
        "outputs": {"hr": "hr.srrf", "lr": "lr.srrf", "motions": "motions.csv"},
    }
    _write_manifest(out / "manifest.json", manifest)
    return {"hr_frames": len(hr), "lr_shape": list(lr[0].shape), "out": str(out)}


def cmd_degrade(args) -> dict:
    hr = read_frames(args.hr)
    spec = SequenceSpec(
        np.zeros((hr[0].shape[0] + 4, hr[0].shape[1] + 4)), hr[0].shape, len(hr), seed=args.seed,
        decimation_factor=args.factor, noise_variance=args.noise_var,
    )
    lr = degrade_sequence(hr, spec)
    out = Path(args.out or default_out() / "lr.srrf")
    write_frames(out, lr)
    return {"lr_frames": len(lr), "lr_shape": list(lr[0].shape), "out": str(out)}


RECON_KEYS = {
    "algorithm": (str, "RLMS"),
    "table": (str, None),
    "mu": (float, None),
    "alpha": (float, None),
    "alpha_t": (float, None),
    "k_iters": (int, 2),
    "motion": (str, "known"),
    "factor": (int, 2),
    "laplacian": (str, "isotropic"),
}


def resolve_params(cfg) -> SrrParams:
    alg = Algorithm.parse(cfg["algorithm"])
    base = None
    if cfg.get("table"):
        tables = {"outlier": TABLE_OUTLIER, "outlier-free": TABLE_OUTLIER_FREE}
        if cfg["table"] not in tables:
            raise CliError(f"unknown parameter table {cfg['table']!r}")
        base = tables[cfg["table"]].get(alg)
    mu = cfg["mu"] if cfg["mu"] is not None else (base.mu if base else None)
    if mu is None:
        raise CliError("--mu is required unless --table supplies it")
    alpha = cfg["alpha"] if cfg["alpha"] is not None else (base.alpha if base else 0.0)
    alpha_t = cfg["alpha_t"] if cfg["alpha_t"] is not None else (base.alpha_t if base else 0.0)
    return SrrParams(mu=mu, alpha=alpha, alpha_t=alpha_t, k_iters=cfg["k_iters"], algorithm=alg)


def cmd_reconstruct(args) -> dict:
    if args.from_manifest:
        man = _load_manifest(args.from_manifest)
        cfg, inputs = man["config"], man["inputs"]
    else:
        cfg = _merge(args, RECON_KEYS, read_config(args.config) if args.config else {})
        inputs = {"lr": args.lr, "hr": args.hr, "motions": args.motions}
    params = resolve_params(cfg)
    lr = read_frames(inputs["lr"])
    ops = _ops(cfg["factor"], cfg["laplacian"])
    mode = cfg["motion"]
    if mode == "known":
        if not inputs.get("motions"):
            raise CliError("--motion known needs --motions")
        motions = _motions_from_csv(inputs["motions"])
    elif mode in ("global", "dense"):
        motions = estimate_motions(lr, FlowParams(), cfg["factor"], mode)
    else:
        raise CliError(f"unknown motion mode {mode!r}")
    init = bicubic_init(lr[0], cfg["factor"])
    try:
        est = run_sequence(lr, motions, params, ops, init)
    except DivergenceError as exc:
        raise CliError(str(exc), frame=exc.frame_index + 1) from exc
    out = Path(args.out or default_out())
    out.mkdir(parents=True, exist_ok=True)
    write_frames(out / "sr.srrf", est)
    outputs = {"sr": "sr.srrf"}
    summary = {"frames": len(est), "out": str(out)}
    if inputs.get("hr"):
        truth = read_frames(inputs["hr"])
        reports = [frame_report(t, e, x) for t, (e, x) in enumerate(zip(est, truth), 1)]
        with open(out / "metrics.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frame", "algorithm", "mse_db", "psnr_db", "ssim"])
            for r in reports:
                w.writerow([r.frame_index, params.algorithm.value, f"{r.mse_db:.6f}", f"{r.psnr_db:.6f}", f"{r.ssim:.6f}"])
        outputs["metrics"] = "metrics.csv"
        summary["final_mse_db"] = reports[-1].mse_db
    if args.pgm:
        for t, f in enumerate(est, 1):
            write_pgm(out / f"sr_{t:04d}.pgm", f)
    manifest = {
        "command": "reconstruct",
        "config": cfg,
        "params": params.to_dict(),
        "inputs": {k: (str(Path(v).resolve()) if v else None) for k, v in inputs.items()},
        "operators": ops.describe(),
        "motion_mode": mode,
        "outputs": outputs,
    }
    _write_manifest(out / "manifest.json", manifest)
    return summary


def cmd_montecarlo(args) -> dict:
    recipes = {
        "outlier": experiments.outlier_config,
        "outlier-free": experiments.outlier_free_config,
        "illustrative": experiments.illustrative_config,
    }
    kw = {"seed": args.seed, "motion": args.motion}
    if args.frames:
        kw["frame_count"] = args.frames
    if args.hr_size:
        kw["hr_size"] = (args.hr_size, args.hr_size)
    cfg = recipes[args.experiment](args.realizations, **kw)
    images = image_pool(min_size=max(cfg.hr_size) + 32)
    curves = experiments.run_montecarlo(cfg, images=images, workers=args.workers)
    rows = experiments.aggregate(curves)
    out = Path(args.out or default_out() / f"montecarlo_{args.experiment}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "algorithm", "mean_mse_db"])
        for frame, alg, v in rows:
            w.writerow([frame, alg, f"{v:.6f}"])
    # realizations beyond the pool size reuse images with a different seed
    realizations = [
        {"index": r, "image": r % len(images), "seed": s,
         "image_sha256": hashlib.sha256(images[r % len(images)].tobytes()).hexdigest()}
        for r, s in enumerate(cfg.realization_seeds())
    ]
    manifest = {
        "command": "montecarlo",
        "config": {"experiment": args.experiment, **{k: v for k, v in vars(args).items() if k in ("realizations", "frames", "hr_size", "seed", "motion")}},
        "params": {experiments._label(k): p.to_dict() for k, p in cfg.params.items()},
        "outlier": None if cfg.outlier is None else vars(cfg.outlier),
        "realizations": realizations,
        "images_reused": cfg.realizations > len(images),
        "outputs": {"curves": out.name},
    }
    _write_manifest(out.with_suffix(".manifest.json"), manifest)
    return {"rows": len(rows), "realizations": cfg.realizations, "out": str(out)}


def cmd_psd(args) -> dict:
    pool = [load_image(p) for p in args.images] if args.images else image_pool()
    if len(pool) < 2:
        raise CliError("the innovation experiment needs at least two source images")
    res = experiments.psd_experiment(pool, realizations=args.realizations, seed=args.seed, patch_count=args.patches)
    out = Path(args.out or default_out() / "psd.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["radius", "power", "energy"])
        w.writerow([0, f"{res.dc:.9g}", f"{res.dc:.9g}"])
        for r, p, e in zip(res.radius, res.power, res.energy):
            w.writerow([int(r), f"{p:.9g}", f"{e:.9g}"])
    return {"low_quarter_fraction": res.low_quarter_fraction(), "out": str(out)}


def cmd_cost_model(args) -> dict:
    m2 = args.m * args.m
    shape = (args.m, args.m)
    nnz_m = args.nnz_m
    if nnz_m is None:
        nnz_m = _ops(2).temporal_inverse(args.alpha_t, shape).nnz()
    c = CostModelInput(m2, args.taps_h * m2, args.taps_s * m2, args.taps_q * m2, nnz_m)
    return cost_table(c)


def cmd_flops_probe(args) -> dict:
    params = {a: TABLE_OUTLIER[a] for a in ALGORITHMS}
    out = Path(args.out or default_out() / "flops.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for size in args.sizes:
        rows += flops_probe(_ops(2), (size, size), params, seed=args.seed)
    cols = ["algorithm", "height", "width", "measured_ops", "predicted_ops", "resamplings", "measured_memory", "predicted_memory"]
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols + ["match"])
        for r in rows:
            match = r["measured_ops"] == r["predicted_ops"] and r["measured_memory"] == r["predicted_memory"]
            w.writerow([r[c] for c in cols] + [int(match)])
    mismatched = [r["algorithm"] for r in rows if r["measured_ops"] != r["predicted_ops"]]
    return {"rows": len(rows), "all_match": not mismatched, "out": str(out)}


def cmd_metrics(args) -> dict:
    a, b = read_frames(args.a), read_frames(args.b)
    if len(a) != len(b):
        raise CliError(f"sequence lengths differ: {len(a)} vs {len(b)}")
    out = Path(args.out or default_out() / "metrics.csv")
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "mse_db", "psnr_db", "ssim"])
        for t, (x, y) in enumerate(zip(a, b), 1):
            r = frame_report(t, x, y)
            w.writerow([t, f"{r.mse_db:.6f}", f"{r.psnr_db:.6f}", f"{r.ssim:.6f}"])
    return {"frames": len(a), "out": str(out)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adaptive-srr", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize an HR/LR sequence from a still image")
    p.add_argument("--image", help="PGM path or builtin:<name>")
    p.add_argument("--hr-size", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--factor", type=int)
    p.add_argument("--noise-var", type=float)
    p.add_argument("--outlier", help="onset:offset:side (1-based frames, offset exclusive)")
    p.add_argument("--config")
    p.add_argument("--from-manifest")
    p.add_argument("--pgm", action="store_true", help="also export LR frames as 8-bit PGM")
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("degrade", help="blur, decimate and add noise to an HR container")
    p.add_argument("--hr", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--factor", type=int, default=2)
    p.add_argument("--noise-var", type=float, default=10.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("reconstruct", help="super-resolve an LR container")
    p.add_argument("--lr")
    p.add_argument("--hr", help="ground truth for per-frame metrics")
    p.add_argument("--motions", help="motions.csv for --motion known")
    p.add_argument("--algorithm")
    p.add_argument("--table", choices=["outlier", "outlier-free"])
    p.add_argument("--mu", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--alpha-t", type=float)
    p.add_argument("--k-iters", type=int)
    p.add_argument("--motion", choices=["known", "global", "dense"])
    p.add_argument("--factor", type=int)
    p.add_argument("--laplacian", choices=["isotropic", "four"])
    p.add_argument("--config")
    p.add_argument("--from-manifest")
    p.add_argument("--pgm", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("montecarlo", help="averaged MSE curves over realizations")
    p.add_argument("--experiment", choices=["outlier", "outlier-free", "illustrative"], default="outlier")
    p.add_argument("--realizations", type=int, default=10)
    p.add_argument("--frames", type=int)
    p.add_argument("--hr-size", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--motion", choices=["known", "global", "dense"], default="known")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("psd", help="radial PSD of synthetic innovations")
    p.add_argument("--images", nargs="*")
    p.add_argument("--realizations", type=int, default=200)
    p.add_argument("--patches", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("cost-model", help="per-iteration operation and memory counts")
    p.add_argument("--m", type=int, default=256, help="HR side length")
    p.add_argument("--taps-h", type=int, default=9)
    p.add_argument("--taps-s", type=int, default=9)
    p.add_argument("--taps-q", type=int, default=9)
    p.add_argument("--nnz-m", type=int)
    p.add_argument("--alpha-t", type=float, default=16.0)
    p.set_defaults(func=cmd_cost_model)

    p = sub.add_parser("flops-probe", help="instrumented operation counts vs the cost model")
    p.add_argument("--sizes", type=int, nargs="+", default=[16, 32])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_flops_probe)

    p = sub.add_parser("metrics", help="per-frame MSE/PSNR/SSIM between two containers")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        result = args.func(args)
    except CliError as exc:
        print(json.dumps({"error": "CliError", "message": str(exc), **exc.extra}), file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(result, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""``leafwater`` command line: synth, index, train, eval, predict, render, summarize.

Exit status is 0 on success, 1 on a validation error (including bad flags)
and 2 on an I/O error; failures also print one JSON line to stderr. Each
command writes ``manifest.json`` next to its primary output.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import IoFailure, LeafWaterError, MalformedValue
from .evaluation import Protocol, pearson_correlation_matrix, run_table2_experiment
from .indices import BandConfig, FeatureSet, feature_matrix
from .learners import (
    ForestParams, GbmParams, HyperParams, LassoParams, StackParams, fit_model, load_model, save_model,
)
from .mapper import (
    DEFAULT_NDVI_THRESHOLD, DEFAULT_STRESS_THRESHOLD, compare_to_reference, infer_map,
    read_map_rasters, render_map, superpixel_aggregate, write_map_rasters,
)
from .spectral_io import DEFAULT_TOLERANCE_NM, read_cube, read_sample_table, write_band_raster, write_cube, write_sample_table
from .synthgen import GeneratorConfig, LwcField, generate_cube, generate_samples

MANIFEST_NAME = "manifest.json"


class _UsageError(Exception):
    def __init__(self, message, usage):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message, self.format_usage())


def _digest(path) -> Optional[str]:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return None


def write_manifest(directory, command: str, args: argparse.Namespace, inputs: Sequence, outputs: Sequence) -> Path:
    """JSON sidecar: flags, input digests, seed, version, timestamp."""
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    doc = {
        "command": command,
        "flags": flags,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "seed": flags.get("seed"),
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    path = Path(directory) / MANIFEST_NAME
    try:
        path.write_text(json.dumps(doc, indent=2, default=str) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write manifest {path}: {exc}") from exc
    return path


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create directory {path}: {exc}") from exc
    return path


def _write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def _band_config(args, fallback: Optional[BandConfig] = None) -> BandConfig:
    base = fallback or BandConfig()
    return BandConfig(
        nir_nm=base.nir_nm if args.nir is None else args.nir,
        red_nm=base.red_nm if args.red is None else args.red,
        green_nm=base.green_nm if args.green is None else args.green,
        tolerance_nm=base.tolerance_nm if args.tolerance is None else args.tolerance,
    )


def _hyperparams(args) -> HyperParams:
    return HyperParams(
        gbm=GbmParams(args.gbm_trees, args.learning_rate, args.gbm_depth, args.gbm_min_leaf),
        lasso=LassoParams(n_lambdas=args.n_lambdas, cv_folds=args.lasso_folds,
                          max_iter=args.lasso_max_iter, tol=args.lasso_tol),
        rf=ForestParams(args.rf_trees, args.mtry, not args.no_bootstrap, args.rf_depth, args.rf_min_leaf),
        stack=StackParams(args.stack_folds),
    )


def _labeled(samples):
    labeled = [s for s in samples if s.lwc is not None]
    return labeled, np.array([s.lwc for s in labeled])


# --------------------------------------------------------------------------
# commands

def cmd_synth(args) -> int:
    cfg = GeneratorConfig(args.n_samples, args.start, args.stop, args.step,
                          args.lwc_min, args.lwc_max, args.noise, args.seed, args.das)
    out = Path(args.out)
    _ensure_dir(out.parent)
    samples, axis = generate_samples(cfg)
    write_sample_table(out, samples, axis)
    outputs = [out]
    if args.cube_out:
        field = LwcField(args.field, tuple(args.levels), args.field_block)
        cube, truth = generate_cube(cfg, args.width, args.height, field, args.soil_fraction)
        stem = Path(args.cube_out)
        _ensure_dir(stem.parent)
        outputs += write_cube(cube, stem)
        outputs += write_band_raster(np.where(np.isnan(truth), -9999.0, truth),
                                     str(stem) + "_truth", nodata=-9999.0, band_name="lwc_truth")
    write_manifest(out.parent, "synth", args, [], outputs)
    return 0


def cmd_index(args) -> int:
    samples, axis = read_sample_table(args.samples)
    cfg = _band_config(args)
    X, names = feature_matrix(samples, axis, cfg, FeatureSet.parse(args.features))
    lines = [",".join(["id"] + names)]
    for s, row in zip(samples, X):
        lines.append(",".join([s.sample_id] + [f"{v:.9g}" for v in row]))
    out = Path(args.out)
    _ensure_dir(out.parent)
    _write_text(out, "\n".join(lines) + "\n")
    outputs = [out]
    if args.correlation:
        R = pearson_correlation_matrix(X, names)
        corr = [",".join([""] + names)] + [
            ",".join([names[i]] + [f"{v:.6f}" for v in R[i]]) for i in range(len(names))
        ]
        outputs.append(_write_text(args.correlation, "\n".join(corr) + "\n"))
    write_manifest(out.parent, "index", args, [args.samples], outputs)
    return 0


def cmd_train(args) -> int:
    samples, axis = read_sample_table(args.samples)
    cfg = _band_config(args)
    labeled, y = _labeled(samples)
    X, names = feature_matrix(labeled, axis, cfg, FeatureSet.parse(args.features))
    model = fit_model(args.algo, X, y, _hyperparams(args), args.seed, names, band_config=cfg)
    out = Path(args.out)
    _ensure_dir(out.parent)
    save_model(model, out)
    write_manifest(out.parent, "train", args, [args.samples], [out])
    return 0


def cmd_eval(args) -> int:
    samples, axis = read_sample_table(args.samples)
    protocol = Protocol(folds=args.folds, seed=args.seed, test_fraction=args.test_fraction)
    report = run_table2_experiment(samples, axis, _band_config(args), _hyperparams(args), protocol)
    prefix = Path(args.out_prefix)
    _ensure_dir(prefix.parent)
    csv_path = _write_text(str(prefix) + ".csv", report.to_csv())
    txt_path = _write_text(str(prefix) + ".txt", report.to_table())
    sys.stdout.write(report.to_table())
    write_manifest(prefix.parent, "eval", args, [args.samples], [csv_path, txt_path])
    return 0


def cmd_predict(args) -> int:
    cube = read_cube(args.cube)
    model = load_model(args.model)
    cfg = _band_config(args, model.band_config)
    lwc_map = infer_map(cube, model, cfg, args.ndvi_threshold, args.stress_threshold, args.threads)
    prefix = Path(args.out_prefix)
    _ensure_dir(prefix.parent)
    outputs = write_map_rasters(lwc_map, prefix)
    # aggregate what was stored so the table matches a later `summarize`
    stored = read_map_rasters(f"{prefix}_lwc.hdr", f"{prefix}_mask.hdr", args.stress_threshold)
    summary = superpixel_aggregate(stored, args.block_size)
    outputs.append(_write_text(str(prefix) + "_blocks.csv", summary.to_csv()))
    if args.render:
        outputs += render_map(lwc_map, "lwc", str(prefix) + "_lwc.ppm")
        outputs += render_map(lwc_map, "stress", str(prefix) + "_stress.ppm")
    stats = lwc_map.summary()
    stats["das"] = args.das
    outputs.append(_write_text(str(prefix) + "_summary.json", json.dumps(stats, indent=2) + "\n"))
    sys.stdout.write(json.dumps(stats) + "\n")
    write_manifest(prefix.parent, "predict", args, [args.cube, args.model], outputs)
    return 0


def cmd_render(args) -> int:
    lwc_map = read_map_rasters(args.lwc, args.mask, args.stress_threshold)
    out = Path(args.out)
    _ensure_dir(out.parent)
    outputs = render_map(lwc_map, args.mode, out)
    write_manifest(out.parent, "render", args, [args.lwc, args.mask], outputs)
    return 0


def _read_reference(path, shape) -> np.ndarray:
    ref = np.full(shape, np.nan)
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read reference {path}: {exc}") from exc
    header = [h.strip() for h in lines[0].split(",")]
    try:
        ir, ic, il = header.index("block_row"), header.index("block_col"), header.index("lwc")
    except ValueError:
        raise MalformedValue("reference CSV needs block_row,block_col,lwc columns") from None
    for k, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        try:
            r, c = int(cells[ir]), int(cells[ic])
            value = float(cells[il]) if cells[il].strip() else np.nan
        except (ValueError, IndexError):
            raise MalformedValue(f"bad reference row {line!r}", row=k) from None
        if not (0 <= r < shape[0] and 0 <= c < shape[1]):
            raise MalformedValue(f"reference block ({r}, {c}) outside grid {shape}", row=k)
        ref[r, c] = value
    return ref


def cmd_summarize(args) -> int:
    lwc_map = read_map_rasters(args.lwc, args.mask, args.stress_threshold)
    summary = superpixel_aggregate(lwc_map, args.block_size)
    out = Path(args.out)
    _ensure_dir(out.parent)
    outputs = [_write_text(out, summary.to_csv())]
    inputs = [args.lwc, args.mask]
    if args.reference:
        inputs.append(args.reference)
        result = compare_to_reference(summary, _read_reference(args.reference, summary.mean_lwc.shape))
        doc = {"rmse": result.rmse, "r2": None if np.isnan(result.r2) else result.r2, "n_blocks": result.n_blocks}
        outputs.append(_write_text(str(out.with_suffix("")) + "_comparison.json",
                                   json.dumps(doc, indent=2) + "\n"))
        sys.stdout.write(json.dumps(doc) + "\n")
    write_manifest(out.parent, "summarize", args, inputs, outputs)
    return 0


# --------------------------------------------------------------------------
# parser

def _add_band_flags(p):
    g = p.add_argument_group("bands")
    g.add_argument("--nir", type=float, default=None, help="NIR band centre in nm (default 800)")
    g.add_argument("--red", type=float, default=None, help="red band centre in nm (default 670)")
    g.add_argument("--green", type=float, default=None, help="green band centre in nm (default 550)")
    g.add_argument("--tolerance", type=float, default=None,
                   help=f"max distance to the nearest band in nm (default {DEFAULT_TOLERANCE_NM:g})")


def _add_model_flags(p):
    g = p.add_argument_group("hyperparameters")
    g.add_argument("--gbm-trees", type=int, default=200)
    g.add_argument("--learning-rate", type=float, default=0.1)
    g.add_argument("--gbm-depth", type=int, default=3)
    g.add_argument("--gbm-min-leaf", type=int, default=2)
    g.add_argument("--n-lambdas", type=int, default=60)
    g.add_argument("--lasso-folds", type=int, default=5)
    g.add_argument("--lasso-max-iter", type=int, default=100_000)
    g.add_argument("--lasso-tol", type=float, default=1e-7)
    g.add_argument("--rf-trees", type=int, default=200)
    g.add_argument("--mtry", type=int, default=None)
    g.add_argument("--no-bootstrap", action="store_true")
    g.add_argument("--rf-depth", type=int, default=None)
    g.add_argument("--rf-min-leaf", type=int, default=1)
    g.add_argument("--stack-folds", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="leafwater", description="Leaf water content from hyperspectral reflectance.")
    parser.add_argument("--version", action="version", version=f"leafwater {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic sample table (and optionally a cube)")
    p.add_argument("--out", required=True, help="sample CSV to write")
    p.add_argument("--n-samples", type=int, default=500)
    p.add_argument("--start", type=float, default=400.0)
    p.add_argument("--stop", type=float, default=1000.0)
    p.add_argument("--step", type=float, default=2.0)
    p.add_argument("--lwc-min", type=float, default=0.6)
    p.add_argument("--lwc-max", type=float, default=0.95)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--das", type=int, default=36)
    p.add_argument("--cube-out", default=None, help="cube path stem; also writes <stem>_truth")
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--field", choices=["blocks", "gradient"], default="blocks")
    p.add_argument("--levels", type=float, nargs=2, default=[0.70, 0.88])
    p.add_argument("--field-block", type=int, default=16)
    p.add_argument("--soil-fraction", type=float, default=0.25)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("index", help="compute spectral indices per sample")
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--features", choices=["three", "eight", "eleven"], default="eleven")
    p.add_argument("--correlation", default=None, help="also write the Pearson matrix to this CSV")
    _add_band_flags(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("train", help="fit a model on labelled samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--algo", choices=["gbm", "lasso", "rf", "stacked"], default="gbm")
    p.add_argument("--features", choices=["three", "eight", "eleven"], default="eleven")
    p.add_argument("--seed", type=int, default=42)
    _add_band_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="held-out comparison of all algorithms and feature sets")
    p.add_argument("--samples", required=True)
    p.add_argument("--out-prefix", required=True, help="writes <prefix>.csv and <prefix>.txt")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--test-fraction", type=float, default=None,
                   help="use one holdout split of this fraction instead of k-fold CV")
    _add_band_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="per-pixel LWC and stress map for a cube")
    p.add_argument("--cube", required=True, help="cube header (.hdr)")
    p.add_argument("--model", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--ndvi-threshold", type=float, default=DEFAULT_NDVI_THRESHOLD)
    p.add_argument("--stress-threshold", type=float, default=DEFAULT_STRESS_THRESHOLD)
    p.add_argument("--block-size", type=int, default=10, help="super-pixel side in pixels")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--render", action="store_true", help="also write <prefix>_lwc.ppm and <prefix>_stress.ppm")
    p.add_argument("--das", type=int, default=None, help="days after sowing, recorded in the summary")
    _add_band_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("render", help="render an LWC or stress map to PPM")
    p.add_argument("--lwc", required=True, help="<prefix>_lwc.hdr")
    p.add_argument("--mask", required=True, help="<prefix>_mask.hdr")
    p.add_argument("--mode", choices=["lwc", "stress"], default="lwc")
    p.add_argument("--stress-threshold", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("summarize", help="super-pixel block summary, optionally against a reference")
    p.add_argument("--lwc", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--block-size", type=int, required=True)
    p.add_argument("--reference", default=None, help="CSV with block_row,block_col,lwc")
    p.add_argument("--stress-threshold", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_summarize)
    return parser


def _error_line(kind: str, message: str, context: Optional[dict] = None) -> None:
    doc = {"error": kind, "message": message}
    if context:
        doc["context"] = context
    sys.stderr.write(json.dumps(doc, default=str) + "\n")


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(exc.usage)
        _error_line("UsageError", str(exc))
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except LeafWaterError as exc:
        _error_line(type(exc).__name__, str(exc), exc.context)
        return 1
    except OSError as exc:
        _error_line(type(exc).__name__, str(exc))
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

"""Per-pixel LWC inference over cubes, stress labels, super-pixels and rendering."""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, GridMismatch, IoFailure, MalformedValue, ZeroVariance
from .evaluation import r_squared, rmse
from .indices import INDEX_NAMES, BandConfig, evaluate_indices, resolve_bands
from .learners.model import TrainedModel, _predict_unchecked
from .spectral_io import HyperspectralCube, parse_envi_header, read_band_raster, write_band_raster

log = logging.getLogger(__name__)

DEFAULT_NDVI_THRESHOLD = 0.7
DEFAULT_STRESS_THRESHOLD = 0.79
RASTER_NODATA = -9999.0
_ROWS_PER_CHUNK = 32


class MaskReason(enum.IntEnum):
    VALID = 0
    NDVI_BELOW_THRESHOLD = 1
    NODATA = 2
    INDEX_INVALID = 3


@dataclass(eq=False)
class LwcStressMap:
    """``lwc`` is NaN wherever ``mask_reason`` is not VALID."""

    lwc: np.ndarray
    mask_reason: np.ndarray
    ndvi_threshold: float = DEFAULT_NDVI_THRESHOLD
    stress_threshold: float = DEFAULT_STRESS_THRESHOLD
    n_clamped: int = 0

    @property
    def height(self) -> int:
        return self.lwc.shape[0]

    @property
    def width(self) -> int:
        return self.lwc.shape[1]

    @property
    def valid(self) -> np.ndarray:
        return self.mask_reason == MaskReason.VALID

    @property
    def stressed(self) -> np.ndarray:
        """Stress labels; only meaningful where ``valid`` (False elsewhere)."""
        with np.errstate(invalid="ignore"):
            return self.valid & (self.lwc < self.stress_threshold)

    def summary(self) -> dict:
        valid = self.valid
        vals = self.lwc[valid]
        out = {
            "n_pixels": int(self.lwc.size),
            "n_valid": int(valid.sum()),
            "n_stressed": int(self.stressed.sum()),
            "n_clamped": int(self.n_clamped),
            "ndvi_threshold": self.ndvi_threshold,
            "stress_threshold": self.stress_threshold,
        }
        for reason in MaskReason:
            out[f"n_{reason.name.lower()}"] = int(np.sum(self.mask_reason == reason))
        out["masked_fraction"] = 1.0 - out["n_valid"] / max(out["n_pixels"], 1)
        out["stressed_fraction"] = out["n_stressed"] / out["n_valid"] if vals.size else None
        out["mean_lwc"] = float(vals.mean()) if vals.size else None
        out["min_lwc"] = float(vals.min()) if vals.size else None
        out["max_lwc"] = float(vals.max()) if vals.size else None
        return out


def _model_bands(model: TrainedModel, band_config: BandConfig):
    unknown = [n for n in model.feature_names if n not in INDEX_NAMES]
    if unknown:
        raise DimensionMismatch(f"model features {unknown} are not spectral indices")
    names = list(model.feature_names)
    if "ndvi" not in names:
        names.append("ndvi")
    return names


def _infer_rows(cube, model, band_config, bands, names, r0, r1,
                ndvi_threshold, stress_threshold, lwc_out, reason_out):
    block = cube.data[r0:r1]
    pix = block.reshape(-1, block.shape[2])
    columns = {nm: pix[:, j] for nm, j in bands.items()}
    vals = evaluate_indices(columns, names, band_config)
    feat_cols = [names.index(n) for n in model.feature_names]
    ndvi = vals[:, names.index("ndvi")]

    reason = np.full(pix.shape[0], MaskReason.VALID, dtype=np.uint8)
    if cube.nodata_value is not None:
        nodata = np.any(pix == np.float32(cube.nodata_value), axis=1)
    else:
        nodata = np.zeros(pix.shape[0], dtype=bool)
    invalid = ~np.all(np.isfinite(vals), axis=1) & ~nodata
    low = ~nodata & ~invalid & (ndvi < ndvi_threshold)
    reason[low] = MaskReason.NDVI_BELOW_THRESHOLD
    reason[invalid] = MaskReason.INDEX_INVALID
    reason[nodata] = MaskReason.NODATA

    lwc = np.full(pix.shape[0], np.nan)
    ok = reason == MaskReason.VALID
    clamped = 0
    if ok.any():
        pred = _predict_unchecked(model, np.ascontiguousarray(vals[ok][:, feat_cols]))
        clamped = int(np.sum((pred < 0.0) | (pred > 1.0)))
        lwc[ok] = np.clip(pred, 0.0, 1.0)
    lwc_out[r0:r1] = lwc.reshape(r1 - r0, -1)
    reason_out[r0:r1] = reason.reshape(r1 - r0, -1)
    return clamped


def infer_map(cube: HyperspectralCube, model: TrainedModel, band_config: Optional[BandConfig] = None,
              ndvi_threshold: float = DEFAULT_NDVI_THRESHOLD,
              stress_threshold: float = DEFAULT_STRESS_THRESHOLD,
              threads: int = 1) -> LwcStressMap:
    """Predict LWC for every vegetated pixel of ``cube``.

    Pixels are checked in order: nodata sentinel, invalid index, NDVI below
    ``ndvi_threshold``; survivors are predicted, clamped to [0, 1] and
    labelled stressed when LWC < ``stress_threshold``. Rows are split into
    chunks and each chunk writes a disjoint slice, so any thread count gives
    the same map.
    """
    if band_config is None:
        band_config = model.band_config or BandConfig()
    if threads < 1:
        raise MalformedValue(f"threads must be >= 1, got {threads}")
    names = _model_bands(model, band_config)
    bands = resolve_bands(cube.axis, names, band_config)  # fails before the pixel loop

    H, W = cube.height, cube.width
    lwc = np.full((H, W), np.nan)
    reason = np.zeros((H, W), dtype=np.uint8)
    chunks = [(r, min(r + _ROWS_PER_CHUNK, H)) for r in range(0, H, _ROWS_PER_CHUNK)]
    args = (ndvi_threshold, stress_threshold, lwc, reason)

    if threads == 1 or len(chunks) == 1:
        clamped = [_infer_rows(cube, model, band_config, bands, names, r0, r1, *args)
                   for r0, r1 in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_infer_rows, cube, model, band_config, bands, names, r0, r1, *args)
                       for r0, r1 in chunks]
            clamped = [f.result() for f in futures]
    n_clamped = int(sum(clamped))
    if n_clamped:
        log.warning("clamped %d LWC predictions into [0, 1]", n_clamped)
    return LwcStressMap(lwc, reason, float(ndvi_threshold), float(stress_threshold), n_clamped)


# --------------------------------------------------------------------------
# super-pixels

@dataclass(eq=False)
class SuperPixelSummary:
    """Block statistics; ``mean_lwc`` and ``stressed_fraction`` are NaN for blocks without valid pixels."""

    block_size: int
    mean_lwc: np.ndarray
    valid_count: np.ndarray
    stressed_fraction: np.ndarray

    @property
    def masked(self) -> np.ndarray:
        return self.valid_count == 0

    def to_csv(self) -> str:
        lines = ["block_row,block_col,row0,col0,mean_lwc,valid_count,stressed_fraction"]
        bs = self.block_size
        for i in range(self.mean_lwc.shape[0]):
            for j in range(self.mean_lwc.shape[1]):
                m = self.mean_lwc[i, j]
                s = self.stressed_fraction[i, j]
                lines.append(
                    f"{i},{j},{i * bs},{j * bs},"
                    f"{'' if np.isnan(m) else format(m, '.9g')},{int(self.valid_count[i, j])},"
                    f"{'' if np.isnan(s) else format(s, '.9g')}"
                )
        return "\n".join(lines) + "\n"


def _block_sum(a: np.ndarray, bs: int) -> np.ndarray:
    H, W = a.shape
    bh, bw = -(-H // bs), -(-W // bs)
    padded = np.zeros((bh * bs, bw * bs), dtype=np.float64)
    padded[:H, :W] = a
    return padded.reshape(bh, bs, bw, bs).sum(axis=(1, 3))


def superpixel_aggregate(lwc_map: LwcStressMap, block_size: int) -> SuperPixelSummary:
    """Non-overlapping ``block_size`` squares from (0, 0); edge blocks may be smaller."""
    if int(block_size) != block_size or block_size < 1:
        raise MalformedValue(f"block_size must be a positive integer, got {block_size}")
    bs = int(block_size)
    valid = lwc_map.valid
    count = _block_sum(valid.astype(np.float64), bs)
    total = _block_sum(np.where(valid, lwc_map.lwc, 0.0), bs)
    n_stressed = _block_sum(lwc_map.stressed.astype(np.float64), bs)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, total / np.maximum(count, 1), np.nan)
        frac = np.where(count > 0, n_stressed / np.maximum(count, 1), np.nan)
    return SuperPixelSummary(bs, mean, count.astype(np.int64), frac)


@dataclass
class ComparisonResult:
    rmse: float
    r2: float
    residuals: np.ndarray
    n_blocks: int


def compare_to_reference(summary: SuperPixelSummary, reference) -> ComparisonResult:
    """Metrics of block means against per-block reference LWC (NaN = no reference).

    With a single mutually valid block R^2 is undefined and ZeroVariance is
    raised; its context carries the RMSE. A constant reference over several
    blocks yields ``r2 = nan`` alongside a valid RMSE.
    """
    reference = np.asarray(reference, dtype=np.float64)
    if reference.shape != summary.mean_lwc.shape:
        raise GridMismatch(
            f"reference grid {reference.shape} differs from summary grid {summary.mean_lwc.shape}"
        )
    both = np.isfinite(reference) & np.isfinite(summary.mean_lwc)
    if not both.any():
        raise GridMismatch("no block is valid in both summary and reference")
    residuals = np.where(both, summary.mean_lwc - reference, np.nan)
    n = int(both.sum())
    err = rmse(reference[both], summary.mean_lwc[both])
    if n == 1:
        raise ZeroVariance(f"R^2 is undefined for a single block (rmse={err:.9g})", rmse=err, n_blocks=1)
    try:
        r2 = r_squared(reference[both], summary.mean_lwc[both])
    except ZeroVariance:
        log.warning("reference is constant over %d blocks; R^2 undefined", n)
        r2 = float("nan")
    return ComparisonResult(err, r2, residuals, n)


# --------------------------------------------------------------------------
# rasters and rendering

RESERVED_COLOR = (0, 0, 0)
LWC_RAMP = ((0.0, (166, 97, 26)), (0.5, (245, 245, 245)), (1.0, (1, 102, 94)))
STRESS_COLORS = {"stressed": (215, 48, 39), "unstressed": (26, 152, 80), "masked": RESERVED_COLOR}


def lwc_colors(values: np.ndarray) -> np.ndarray:
    """Piecewise-linear ramp over [0, 1]; channels rounded half-to-even."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    stops = np.array([s for s, _ in LWC_RAMP])
    cols = np.array([c for _, c in LWC_RAMP], dtype=np.float64)
    rgb = np.stack([np.interp(v, stops, cols[:, k]) for k in range(3)], axis=-1)
    return np.rint(rgb).astype(np.uint8)


def map_to_rgb(lwc_map: LwcStressMap, mode: str) -> np.ndarray:
    mode = mode.lower()
    valid = lwc_map.valid
    rgb = np.zeros((lwc_map.height, lwc_map.width, 3), dtype=np.uint8)
    rgb[:] = RESERVED_COLOR
    if mode == "lwc":
        rgb[valid] = lwc_colors(lwc_map.lwc[valid])
    elif mode == "stress":
        stressed = lwc_map.stressed
        rgb[valid & stressed] = STRESS_COLORS["stressed"]
        rgb[valid & ~stressed] = STRESS_COLORS["unstressed"]
    else:
        raise MalformedValue(f"unknown render mode {mode!r} (lwc|stress)")
    return rgb


def write_ppm(rgb: np.ndarray, path) -> Path:
    path = Path(path)
    h, w, _ = rgb.shape
    try:
        with path.open("wb") as fh:
            fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            fh.write(np.ascontiguousarray(rgb, dtype=np.uint8).tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6" or int(parts[3]) != 255:
        raise MalformedValue(f"{path} is not an 8-bit P6 pixmap")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4], dtype=np.uint8, count=w * h * 3).reshape(h, w, 3)


def _legend(lwc_map: LwcStressMap, mode: str) -> str:
    lines = [f"mode = {mode}", f"masked = {RESERVED_COLOR}"]
    if mode == "lwc":
        lines += [f"lwc {s:g} = {c}" for s, c in LWC_RAMP]
        lines.append("interpolation = piecewise linear per channel, rounded half-to-even")
    else:
        lines += [f"stressed (lwc < {lwc_map.stress_threshold:g}) = {STRESS_COLORS['stressed']}",
                  f"unstressed = {STRESS_COLORS['unstressed']}"]
    lines.append(f"ndvi threshold = {lwc_map.ndvi_threshold:g}")
    return "\n".join(lines) + "\n"


def render_map(lwc_map: LwcStressMap, mode: str, path) -> list[Path]:
    """Write a P6 pixmap plus ``<path>.legend.txt`` describing the colours."""
    mode = mode.lower()
    ppm = write_ppm(map_to_rgb(lwc_map, mode), path)
    legend = ppm.with_name(ppm.name + ".legend.txt")
    try:
        legend.write_text(_legend(lwc_map, mode), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {legend}: {exc}") from exc
    return [ppm, legend]


def write_map_rasters(lwc_map: LwcStressMap, prefix) -> list[Path]:
    """``<prefix>_lwc`` (float32, nodata -9999) and ``<prefix>_mask`` (reason codes)."""
    prefix = str(prefix)
    lwc = np.where(lwc_map.valid, lwc_map.lwc, RASTER_NODATA)
    out = write_band_raster(lwc, prefix + "_lwc", nodata=RASTER_NODATA, band_name="lwc")
    out += write_band_raster(lwc_map.mask_reason.astype(np.float32), prefix + "_mask", band_name="mask_reason")
    hdr = Path(prefix + "_lwc.hdr")
    with hdr.open("a", encoding="utf-8") as fh:
        fh.write(f"ndvi threshold = {lwc_map.ndvi_threshold!r}\n")
        fh.write(f"stress threshold = {lwc_map.stress_threshold!r}\n")
        fh.write(f"clamped pixels = {lwc_map.n_clamped}\n")
    return out


def read_map_rasters(lwc_path, mask_path, stress_threshold: Optional[float] = None,
                     ndvi_threshold: Optional[float] = None) -> LwcStressMap:
    lwc, nodata = read_band_raster(lwc_path)
    mask, _ = read_band_raster(mask_path)
    if lwc.shape != mask.shape:
        raise GridMismatch(f"lwc raster {lwc.shape} and mask raster {mask.shape} differ")
    hdr_path = Path(str(lwc_path)[:-4] + ".hdr" if str(lwc_path).endswith(".hdr") else str(lwc_path) + ".hdr")
    hdr = parse_envi_header(hdr_path.read_text(encoding="utf-8"))
    if stress_threshold is None:
        stress_threshold = float(hdr.get("stress threshold", DEFAULT_STRESS_THRESHOLD))
    if ndvi_threshold is None:
        ndvi_threshold = float(hdr.get("ndvi threshold", DEFAULT_NDVI_THRESHOLD))
    reason = mask.astype(np.uint8)
    valid = reason == MaskReason.VALID
    values = np.where(valid, lwc.astype(np.float64), np.nan)
    return LwcStressMap(values, reason, ndvi_threshold, stress_threshold,
                        int(hdr.get("clamped pixels", 0)))

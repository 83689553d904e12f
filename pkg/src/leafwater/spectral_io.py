"""Sample tables, ENVI-style cubes and wavelength lookup.

Sample tables are CSV files with the metadata columns
``id,das,nitrogen,carbon,cn_ratio,lwc`` followed by one ``w<nm>`` column per
band. Cubes are flat float32 binaries with a ``key = value`` text header.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    EmptyInput,
    IoFailure,
    MalformedValue,
    MissingColumn,
    MissingWavelengths,
    NoBandInTolerance,
    NonMonotonicAxis,
    SizeMismatch,
    UnsupportedDataType,
)

METADATA_COLUMNS = ("id", "das", "nitrogen", "carbon", "cn_ratio", "lwc")
REFLECTANCE_MAX = 1.5
DEFAULT_TOLERANCE_NM = 5.0

_INTERLEAVES = ("bsq", "bil", "bip")
_DATA_EXTENSIONS = ("", ".img", ".dat", ".raw", ".bsq", ".bil", ".bip")


@dataclass(frozen=True)
class WavelengthAxis:
    """Strictly increasing band centres in nanometres."""

    wavelengths_nm: np.ndarray

    def __post_init__(self):
        wl = np.array(self.wavelengths_nm, dtype=np.float64)
        if wl.ndim != 1 or wl.size < 2:
            raise MalformedValue("wavelength axis needs at least 2 bands")
        if not np.all(np.isfinite(wl)):
            raise MalformedValue("wavelength axis contains non-finite values")
        if not np.all(np.diff(wl) > 0):
            raise NonMonotonicAxis("wavelengths must be strictly increasing")
        if wl[0] < 300.0 or wl[-1] > 1100.0:
            raise MalformedValue(
                f"wavelengths must lie in [300, 1100] nm, got [{wl[0]}, {wl[-1]}]"
            )
        wl.setflags(write=False)
        object.__setattr__(self, "wavelengths_nm", wl)

    def __len__(self) -> int:
        return int(self.wavelengths_nm.size)

    def __eq__(self, other):
        if not isinstance(other, WavelengthAxis):
            return NotImplemented
        return np.array_equal(self.wavelengths_nm, other.wavelengths_nm)

    def __hash__(self):
        return hash(self.wavelengths_nm.tobytes())

    def band_index(self, target_nm: float, tolerance_nm: float = DEFAULT_TOLERANCE_NM) -> int:
        return band_index_for(self, target_nm, tolerance_nm)


@dataclass(frozen=True)
class SpectralSample:
    sample_id: str
    das: int
    reflectance: np.ndarray
    lwc: Optional[float] = None
    nitrogen: Optional[float] = None
    carbon: Optional[float] = None
    cn_ratio: Optional[float] = None

    def __post_init__(self):
        refl = np.array(self.reflectance, dtype=np.float64)
        if refl.ndim != 1:
            raise MalformedValue("reflectance must be a vector", sample=self.sample_id)
        _check_reflectance(refl, self.sample_id)
        if self.das < 0:
            raise MalformedValue(f"das must be >= 0, got {self.das}", sample=self.sample_id)
        if self.lwc is not None and not (0.0 <= self.lwc <= 1.0):
            raise MalformedValue(f"lwc must lie in [0, 1], got {self.lwc}", sample=self.sample_id)
        refl.setflags(write=False)
        object.__setattr__(self, "reflectance", refl)


def _check_reflectance(refl: np.ndarray, sample_id: str) -> None:
    if not np.all(np.isfinite(refl)):
        raise MalformedValue("non-finite reflectance", sample=sample_id)
    bad = (refl < 0.0) | (refl > REFLECTANCE_MAX)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise MalformedValue(
            f"reflectance {refl[j]} outside [0, {REFLECTANCE_MAX}] at band {j}",
            sample=sample_id,
        )


@dataclass(frozen=True)
class HyperspectralCube:
    """Reflectance raster addressed as ``data[row, col, band]``."""

    data: np.ndarray
    axis: WavelengthAxis
    nodata_value: Optional[float] = None

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 3:
            raise SizeMismatch(f"cube data must be 3-D, got shape {data.shape}")
        if data.shape[2] != len(self.axis):
            raise SizeMismatch(
                f"cube has {data.shape[2]} bands but axis has {len(self.axis)}"
            )
        finite = np.isfinite(data)
        if self.nodata_value is not None:
            finite |= data == np.float32(self.nodata_value)
        if not finite.all():
            raise MalformedValue("cube contains non-finite values that are not nodata")
        if data is self.data and data.flags.writeable:
            data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def n_bands(self) -> int:
        return self.data.shape[2]

    def nodata_mask(self) -> np.ndarray:
        """Boolean (rows, cols) mask of pixels holding the sentinel in any band."""
        if self.nodata_value is None:
            return np.zeros((self.height, self.width), dtype=bool)
        return np.any(self.data == np.float32(self.nodata_value), axis=2)


def band_index_for(axis: WavelengthAxis, target_nm: float, tolerance_nm: float = DEFAULT_TOLERANCE_NM) -> int:
    """Index of the band nearest ``target_nm``; equidistant bands resolve low."""
    if not tolerance_nm > 0:
        raise MalformedValue(f"tolerance must be positive, got {tolerance_nm}")
    wl = axis.wavelengths_nm
    dist = np.abs(wl - target_nm)
    # argmin returns the first minimum, i.e. the lower wavelength on ties
    idx = int(np.argmin(dist))
    if dist[idx] > tolerance_nm:
        raise NoBandInTolerance(
            f"no band within {tolerance_nm} nm of {target_nm} nm "
            f"(nearest available: {wl[idx]} nm)",
            target_nm=target_nm,
            nearest_nm=float(wl[idx]),
        )
    return idx


# --------------------------------------------------------------------------
# sample tables

_WL_COLUMN = re.compile(r"^w(.+)$")


def _parse_optional(cell: str, row: int, col: str) -> Optional[float]:
    cell = cell.strip()
    if cell == "":
        return None
    try:
        value = float(cell)
    except ValueError:
        raise MalformedValue(f"non-numeric value {cell!r}", row=row, column=col) from None
    if not math.isfinite(value):
        raise MalformedValue(f"non-finite value {cell!r}", row=row, column=col)
    return value


def read_sample_table(path) -> tuple[list[SpectralSample], WavelengthAxis]:
    """Parse a sample CSV into samples plus their shared wavelength axis.

    Rows with an empty ``lwc`` cell are kept with ``lwc=None``.
    """
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot open sample table {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumn(f"{path} has no header row") from None
        for name in METADATA_COLUMNS:
            if name not in header:
                raise MissingColumn(f"required column {name!r} absent", column=name)
        meta_pos = {name: header.index(name) for name in METADATA_COLUMNS}

        wl_pos, wl_values = [], []
        for j, name in enumerate(header):
            if name in METADATA_COLUMNS:
                continue
            m = _WL_COLUMN.match(name)
            if not m:
                continue
            try:
                wl_values.append(float(m.group(1)))
            except ValueError:
                raise MalformedValue(f"wavelength header {name!r} is not numeric", column=name) from None
            wl_pos.append(j)
        if len(wl_values) >= 2 and not np.all(np.diff(wl_values) > 0):
            raise NonMonotonicAxis(
                "wavelength columns are not strictly increasing", wavelengths=wl_values
            )
        axis = WavelengthAxis(np.asarray(wl_values))

        samples = []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != len(header):
                raise MalformedValue(
                    f"row has {len(row)} cells, header has {len(header)}", row=rownum
                )
            sample_id = row[meta_pos["id"]].strip()
            das = _parse_optional(row[meta_pos["das"]], rownum, "das")
            if das is None or das != int(das):
                raise MalformedValue("das must be an integer", row=rownum, column="das")
            refl = np.empty(len(wl_pos))
            for k, j in enumerate(wl_pos):
                value = _parse_optional(row[j], rownum, header[j])
                if value is None:
                    raise MalformedValue("empty reflectance cell", row=rownum, column=header[j])
                refl[k] = value
            try:
                sample = SpectralSample(
                    sample_id=sample_id,
                    das=int(das),
                    reflectance=refl,
                    lwc=_parse_optional(row[meta_pos["lwc"]], rownum, "lwc"),
                    nitrogen=_parse_optional(row[meta_pos["nitrogen"]], rownum, "nitrogen"),
                    carbon=_parse_optional(row[meta_pos["carbon"]], rownum, "carbon"),
                    cn_ratio=_parse_optional(row[meta_pos["cn_ratio"]], rownum, "cn_ratio"),
                )
            except MalformedValue as exc:
                exc.context.setdefault("row", rownum)
                raise
            samples.append(sample)
    return samples, axis


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.9g}"


def _wl_name(nm: float) -> str:
    return f"w{nm:g}" if float(f"{nm:g}") == nm else f"w{nm!r}"


def write_sample_table(path, samples: Sequence[SpectralSample], axis: WavelengthAxis) -> None:
    """Write samples as CSV with 9 significant digits per value."""
    path = Path(path)
    header = list(METADATA_COLUMNS) + [_wl_name(w) for w in axis.wavelengths_nm]
    try:
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for s in samples:
                if len(s.reflectance) != len(axis):
                    raise SizeMismatch(
                        f"sample {s.sample_id} has {len(s.reflectance)} bands, axis has {len(axis)}"
                    )
                writer.writerow(
                    [s.sample_id, str(s.das), _fmt(s.nitrogen), _fmt(s.carbon),
                     _fmt(s.cn_ratio), _fmt(s.lwc)]
                    + [f"{v:.9g}" for v in s.reflectance]
                )
    except OSError as exc:
        raise IoFailure(f"cannot write sample table {path}: {exc}") from exc


# --------------------------------------------------------------------------
# ENVI-style cubes

def _stem(path) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix.lower() == ".hdr" else path


def parse_envi_header(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines, joining ``{...}`` values across lines."""
    lines = text.splitlines()
    if lines and lines[0].strip().upper() == "ENVI":
        lines = lines[1:]
    out: dict[str, str] = {}
    buf = None
    key = None
    for line in lines:
        if buf is not None:
            buf += " " + line.strip()
            if "}" in line:
                out[key] = buf
                buf = None
            continue
        if "=" not in line:
            continue
        k, v = line.split("=", 1)
        key, v = k.strip().lower(), v.strip()
        if v.startswith("{") and "}" not in v:
            buf = v
        else:
            out[key] = v
    if buf is not None:
        raise MalformedValue(f"unterminated brace value for header key {key!r}")
    return out


def _brace_list(value: str) -> list[str]:
    return [t.strip() for t in value.strip().strip("{}").split(",") if t.strip()]


def _header_int(hdr: dict, key: str) -> int:
    if key not in hdr:
        raise MissingColumn(f"header key {key!r} missing", column=key)
    try:
        return int(hdr[key])
    except ValueError:
        raise MalformedValue(f"header key {key!r} is not an integer: {hdr[key]!r}") from None


def _find_binary(stem: Path) -> Path:
    for ext in _DATA_EXTENSIONS:
        candidate = stem.with_name(stem.name + ext)
        if candidate.is_file():
            return candidate
    raise IoFailure(f"no binary companion found for header {stem}.hdr")


def _read_raw(header_path) -> tuple[np.ndarray, dict[str, str]]:
    stem = _stem(header_path)
    hdr_path = stem.with_name(stem.name + ".hdr")
    try:
        hdr = parse_envi_header(hdr_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read header {hdr_path}: {exc}") from exc

    samples = _header_int(hdr, "samples")
    lines = _header_int(hdr, "lines")
    bands = _header_int(hdr, "bands")
    dtype_code = _header_int(hdr, "data type")
    if dtype_code != 4:
        raise UnsupportedDataType(f"data type {dtype_code} unsupported (only 4 = float32)")
    interleave = hdr.get("interleave", "bsq").lower()
    if interleave not in _INTERLEAVES:
        raise UnsupportedDataType(f"unknown interleave {interleave!r}")
    byte_order = int(hdr.get("byte order", "0"))
    offset = int(hdr.get("header offset", "0"))
    dtype = np.dtype("<f4" if byte_order == 0 else ">f4")

    bin_path = _find_binary(stem)
    try:
        raw = bin_path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {bin_path}: {exc}") from exc
    expected = samples * lines * bands * 4
    if len(raw) - offset != expected:
        raise SizeMismatch(
            f"binary holds {len(raw) - offset} bytes, header implies {expected} "
            f"({samples}x{lines}x{bands} float32)"
        )
    flat = np.frombuffer(raw, dtype=dtype, offset=offset)
    if interleave == "bsq":
        arr = flat.reshape(bands, lines, samples).transpose(1, 2, 0)
    elif interleave == "bil":
        arr = flat.reshape(lines, bands, samples).transpose(0, 2, 1)
    else:
        arr = flat.reshape(lines, samples, bands)
    return np.ascontiguousarray(arr, dtype=np.float32), hdr


def _nodata_from(hdr: dict) -> Optional[float]:
    if "data ignore value" not in hdr:
        return None
    return float(hdr["data ignore value"])


def read_cube(header_path) -> HyperspectralCube:
    """Load a cube; BSQ, BIL and BIP are all normalised to (row, col, band)."""
    arr, hdr = _read_raw(header_path)
    if "wavelength" not in hdr:
        raise MissingWavelengths(f"{header_path} has no wavelength list")
    wl = np.array([float(t) for t in _brace_list(hdr["wavelength"])])
    if wl.size != arr.shape[2]:
        raise SizeMismatch(f"header lists {wl.size} wavelengths for {arr.shape[2]} bands")
    return HyperspectralCube(arr, WavelengthAxis(wl), _nodata_from(hdr))


def _header_text(lines, samples, bands, interleave, nodata, extra: Iterable[str] = ()) -> str:
    out = [
        "ENVI",
        f"samples = {samples}",
        f"lines = {lines}",
        f"bands = {bands}",
        "header offset = 0",
        "file type = ENVI Standard",
        "data type = 4",
        f"interleave = {interleave}",
        "byte order = 0",
    ]
    if nodata is not None:
        out.append(f"data ignore value = {float(nodata)!r}")
    out.extend(extra)
    return "\n".join(out) + "\n"


def _write_pair(stem: Path, header: str, payload: bytes) -> list[Path]:
    hdr_path = stem.with_name(stem.name + ".hdr")
    bin_path = stem.with_name(stem.name + ".img")
    try:
        bin_path.write_bytes(payload)
        hdr_path.write_text(header, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write cube {stem}: {exc}") from exc
    return [hdr_path, bin_path]


def write_cube(cube: HyperspectralCube, path) -> list[Path]:
    """Write ``<stem>.hdr`` + ``<stem>.img`` (BSQ, little-endian float32)."""
    if cube.width == 0 or cube.height == 0:
        raise EmptyInput("refusing to write a zero-area cube")
    stem = _stem(path)
    wl = ", ".join(repr(float(w)) for w in cube.axis.wavelengths_nm)
    header = _header_text(
        cube.height, cube.width, cube.n_bands, "bsq", cube.nodata_value,
        ["wavelength units = Nanometers", f"wavelength = {{{wl}}}"],
    )
    payload = np.ascontiguousarray(cube.data.transpose(2, 0, 1), dtype="<f4").tobytes()
    return _write_pair(stem, header, payload)


def write_band_raster(array: np.ndarray, path, nodata: Optional[float] = None,
                      band_name: str = "band") -> list[Path]:
    """Write a single-band float32 raster (no wavelength axis)."""
    array = np.asarray(array, dtype=np.float32)
    if array.ndim != 2 or array.size == 0:
        raise EmptyInput(f"band raster must be non-empty 2-D, got shape {array.shape}")
    stem = _stem(path)
    header = _header_text(
        array.shape[0], array.shape[1], 1, "bsq", nodata, [f"band names = {{{band_name}}}"]
    )
    return _write_pair(stem, header, np.ascontiguousarray(array, dtype="<f4").tobytes())


def read_band_raster(path) -> tuple[np.ndarray, Optional[float]]:
    arr, hdr = _read_raw(path)
    if arr.shape[2] != 1:
        raise SizeMismatch(f"expected a single-band raster, got {arr.shape[2]} bands")
    return arr[:, :, 0].copy(), _nodata_from(hdr)

"""Water-sensitive spectral indices.

Every index is a vectorised function of reflectance at a handful of bands, so
the same code path serves a single spectrum (scalars) and a whole cube
(arrays of pixels). Denominators whose magnitude falls below
:data:`DENOMINATOR_EPS` mark the result invalid (NaN) instead of producing
``inf``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DegenerateDenominator, MalformedValue
from .spectral_io import DEFAULT_TOLERANCE_NM, SpectralSample, WavelengthAxis, band_index_for

DENOMINATOR_EPS = 1e-12

INDEX_NAMES = (
    "ndvi", "green_ndvi", "rdvi", "mtvi2", "water_index", "npci",
    "osavi", "red_edge", "nir1", "red_blue", "water_band",
)

FIXED_BANDS_NM = (900.0, 970.0, 680.0, 430.0, 800.0, 670.0, 750.0, 710.0, 847.0, 660.0, 420.0, 791.0)


class FeatureSet(enum.Enum):
    THREE = "three"
    EIGHT = "eight"
    ELEVEN = "eleven"

    @property
    def names(self) -> tuple[str, ...]:
        return FEATURE_SETS[self]

    @classmethod
    def parse(cls, value) -> "FeatureSet":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise MalformedValue(f"unknown feature set {value!r}") from None


_THREE = ("nir1", "red_blue", "water_band")
_EIGHT = ("ndvi", "green_ndvi", "rdvi", "mtvi2", "water_index", "npci", "osavi", "red_edge")

FEATURE_SETS = {
    FeatureSet.THREE: _THREE,
    FeatureSet.EIGHT: _EIGHT,
    FeatureSet.ELEVEN: _THREE + _EIGHT,
}


@dataclass(frozen=True)
class BandConfig:
    """Band centres standing in for the broad nir/red/green channels."""

    nir_nm: float = 800.0
    red_nm: float = 670.0
    green_nm: float = 550.0
    tolerance_nm: float = DEFAULT_TOLERANCE_NM

    def __post_init__(self):
        for name in ("nir_nm", "red_nm", "green_nm"):
            v = getattr(self, name)
            if not 300.0 <= v <= 1100.0:
                raise MalformedValue(f"{name}={v} outside [300, 1100] nm")
        if not self.tolerance_nm > 0:
            raise MalformedValue(f"tolerance_nm must be positive, got {self.tolerance_nm}")

    def to_dict(self) -> dict:
        return {"nir_nm": self.nir_nm, "red_nm": self.red_nm,
                "green_nm": self.green_nm, "tolerance_nm": self.tolerance_nm}


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    bad = ~(np.abs(den) >= DENOMINATOR_EPS)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / np.where(bad, 1.0, den)
    return np.where(bad, np.nan, out)


def _safe_sqrt(x):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        return np.where(x >= 0.0, np.sqrt(np.maximum(x, 0.0)), np.nan)


def normalized_difference(a, b):
    return _safe_div(np.subtract(a, b), np.add(a, b))


def _mtvi2(nir, red, green):
    num = 1.5 * (1.2 * (nir - green) - 2.5 * (red - green))
    radicand = (2.0 * nir + 1.0) ** 2 - (6.0 * nir - 5.0 * _safe_sqrt(red)) - 0.5
    return _safe_div(num, _safe_sqrt(radicand))


def _osavi(r800, r670):
    return _safe_div(1.16 * (r800 - r670), r800 + r670 + 0.16)


# name -> (band keys, function). Keys "nir"/"red"/"green" come from BandConfig.
_INDEX_TABLE: dict[str, tuple[tuple, Callable]] = {
    "ndvi": (("nir", "red"), normalized_difference),
    "green_ndvi": (("nir", "green"), normalized_difference),
    "rdvi": (("nir", "red"), lambda n, r: _safe_div(n - r, _safe_sqrt(n + r))),
    "mtvi2": (("nir", "red", "green"), _mtvi2),
    "water_index": ((900.0, 970.0), _safe_div),
    "npci": ((680.0, 430.0), normalized_difference),
    "osavi": ((800.0, 670.0), _osavi),
    "red_edge": ((750.0, 710.0), _safe_div),
    "nir1": ((800.0, 847.0), normalized_difference),
    "red_blue": ((660.0, 420.0), normalized_difference),
    "water_band": ((791.0, 970.0), normalized_difference),
}


def _band_nm(key, config: BandConfig) -> float:
    if key == "nir":
        return config.nir_nm
    if key == "red":
        return config.red_nm
    if key == "green":
        return config.green_nm
    return float(key)


def required_bands(names: Sequence[str], config: BandConfig) -> list[float]:
    """Wavelengths (nm) needed to evaluate ``names``, deduplicated, in first-use order."""
    out = []
    for name in names:
        for key in _INDEX_TABLE[name][0]:
            nm = _band_nm(key, config)
            if nm not in out:
                out.append(nm)
    return out


def resolve_bands(axis: WavelengthAxis, names: Sequence[str], config: BandConfig) -> dict[float, int]:
    """Map each needed wavelength to a band index; fails fast on any gap."""
    return {nm: band_index_for(axis, nm, config.tolerance_nm) for nm in required_bands(names, config)}


def evaluate_indices(columns: Mapping[float, np.ndarray], names: Sequence[str],
                     config: BandConfig) -> np.ndarray:
    """Evaluate ``names`` from per-wavelength reflectance columns.

    ``columns`` maps a wavelength (nm) to reflectance values of any shape;
    the result stacks one index per trailing column, NaN where invalid.
    """
    out = []
    for name in names:
        keys, fn = _INDEX_TABLE[name]
        args = [np.asarray(columns[_band_nm(k, config)], dtype=np.float64) for k in keys]
        out.append(fn(*args))
    return np.stack(out, axis=-1) if out else np.empty((0,))


def index_values(reflectance: np.ndarray, axis: WavelengthAxis, names: Sequence[str],
                 config: BandConfig) -> np.ndarray:
    """Indices for spectra laid out as ``(..., bands)``."""
    reflectance = np.asarray(reflectance)
    bands = resolve_bands(axis, names, config)
    columns = {nm: reflectance[..., j] for nm, j in bands.items()}
    return evaluate_indices(columns, names, config)


@dataclass(frozen=True)
class IndexVector:
    ndvi: float
    green_ndvi: float
    rdvi: float
    mtvi2: float
    water_index: float
    npci: float
    osavi: float
    red_edge: float
    nir1: float
    red_blue: float
    water_band: float

    @property
    def invalid(self) -> frozenset:
        """Names of indices whose denominator (or radicand) was degenerate."""
        return frozenset(n for n in INDEX_NAMES if not np.isfinite(getattr(self, n)))

    def is_valid(self, names: Sequence[str] = INDEX_NAMES) -> bool:
        return not (self.invalid & set(names))

    def select(self, names: Sequence[str]) -> np.ndarray:
        return np.array([getattr(self, n) for n in names], dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return {n: getattr(self, n) for n in INDEX_NAMES}


def compute_index_vector(reflectance, axis: WavelengthAxis, config: BandConfig = BandConfig()) -> IndexVector:
    """All eleven indices for one spectrum.

    Raises NoBandInTolerance if the axis misses a required band. A degenerate
    denominator leaves that index as NaN and lists it in ``invalid``.
    """
    reflectance = np.asarray(reflectance, dtype=np.float64)
    if reflectance.shape != (len(axis),):
        raise MalformedValue(
            f"spectrum length {reflectance.shape} does not match axis length {len(axis)}"
        )
    values = index_values(reflectance, axis, INDEX_NAMES, config)
    return IndexVector(*(float(v) for v in values))


def feature_matrix(samples: Sequence[SpectralSample], axis: WavelengthAxis,
                   config: BandConfig = BandConfig(),
                   feature_set=FeatureSet.ELEVEN) -> tuple[np.ndarray, list[str]]:
    """Stack the chosen index columns for every sample.

    Column order is fixed: THREE is ``nir1, red_blue, water_band``; EIGHT is
    ``ndvi, green_ndvi, rdvi, mtvi2, water_index, npci, osavi, red_edge``;
    ELEVEN is THREE followed by EIGHT.
    """
    names = list(FeatureSet.parse(feature_set).names)
    if not samples:
        return np.empty((0, len(names))), names
    refl = np.vstack([s.reflectance for s in samples])
    if refl.shape[1] != len(axis):
        raise MalformedValue("samples do not share the given wavelength axis")
    X = index_values(refl, axis, names, config)
    bad_rows = ~np.all(np.isfinite(X), axis=1)
    if bad_rows.any():
        i = int(np.argmax(bad_rows))
        bad_cols = [names[j] for j in np.flatnonzero(~np.isfinite(X[i]))]
        raise DegenerateDenominator(
            f"sample {samples[i].sample_id!r} has invalid indices {bad_cols}",
            sample=samples[i].sample_id,
            indices=bad_cols,
        )
    return X, names

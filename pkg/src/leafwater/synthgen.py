"""Deterministic synthetic spectra and cubes with known leaf water content.

Spectra start from a fixed vegetation shape (blue floor, green bump at
550 nm, red well at 670 nm, red edge near 718 nm, NIR plateau). Water
content then acts through narrow, compactly supported features:

* a 970 nm absorption trough whose depth grows linearly with LWC,
* a dip at 847 nm (against an untouched 800 nm shoulder),
* a rise at 660 nm paired with a drop at 420 nm,
* a weaker dip at 710 nm that only ``red_edge`` sees.

The ``nir1``, ``red_blue`` and ``water_band`` indices carry most of the
signal; the 710 nm dip gives the larger feature sets a little extra.
Per-sample nuisance terms independent of LWC perturb the bands behind the
other indices (900, 680/670, 550, 430, 710/750 nm), and zero-mean Gaussian
noise is added to every band. None of this models real leaf optics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidConfig
from .spectral_io import HyperspectralCube, SpectralSample, WavelengthAxis

SOIL_NODATA = np.nan
REFLECTANCE_FLOOR = 1e-4
REFLECTANCE_CEIL = 1.5

# LWC feature strengths (fractional change per unit LWC)
TROUGH_970_DEPTH = 0.75
DIP_847_DEPTH = 0.60
RISE_660 = 0.25
DROP_420_DEPTH = 0.80
DIP_710_DEPTH = 0.90


@dataclass(frozen=True)
class GeneratorConfig:
    n_samples: int = 500
    start_nm: float = 400.0
    stop_nm: float = 1000.0
    step_nm: float = 2.0
    lwc_min: float = 0.6
    lwc_max: float = 0.95
    noise: float = 0.01
    seed: int = 42
    das: int = 36

    def __post_init__(self):
        if self.n_samples < 0:
            raise InvalidConfig(f"n_samples must be >= 0, got {self.n_samples}")
        if not self.step_nm > 0:
            raise InvalidConfig(f"step must be positive, got {self.step_nm}")
        if not (300.0 <= self.start_nm < self.stop_nm <= 1100.0):
            raise InvalidConfig(f"axis [{self.start_nm}, {self.stop_nm}] must be ordered within [300, 1100]")
        if not (0.0 <= self.lwc_min <= self.lwc_max <= 1.0):
            raise InvalidConfig(f"lwc bounds ({self.lwc_min}, {self.lwc_max}) must be ordered within [0, 1]")
        if not self.noise >= 0:
            raise InvalidConfig(f"noise must be >= 0, got {self.noise}")
        if self.das < 0:
            raise InvalidConfig(f"das must be >= 0, got {self.das}")

    def axis(self) -> WavelengthAxis:
        n = int(np.floor((self.stop_nm - self.start_nm) / self.step_nm + 1e-9)) + 1
        return WavelengthAxis(self.start_nm + self.step_nm * np.arange(n))


def _window(wl, center, half_width):
    """Raised-cosine bump, exactly zero beyond ``half_width``."""
    d = (wl - center) / half_width
    return np.where(np.abs(d) < 1.0, 0.5 * (1.0 + np.cos(np.pi * d)), 0.0)


def _gauss(wl, center, sigma):
    return np.exp(-0.5 * ((wl - center) / sigma) ** 2)


def vegetation_base(wl: np.ndarray) -> np.ndarray:
    edge = 1.0 / (1.0 + np.exp(-(wl - 718.0) / 10.0))
    visible = 0.05 + 0.07 * _gauss(wl, 550.0, 30.0) - 0.025 * _gauss(wl, 670.0, 25.0)
    plateau = 0.47 - 0.03 * np.clip((wl - 800.0) / 200.0, 0.0, None)
    return (1.0 - edge) * visible + edge * plateau


def soil_spectrum(wl: np.ndarray) -> np.ndarray:
    """Flat, slowly rising bare-soil curve; NDVI(800, 670) is about 0.2."""
    return 0.10 + 0.08 / (1.0 + np.exp(-(wl - 740.0) / 30.0))


def _lwc_spectra(wl: np.ndarray, lwc: np.ndarray) -> np.ndarray:
    """Noise-free spectra (len(lwc), bands) carrying only the water features."""
    base = vegetation_base(wl)[None, :]
    w = lwc[:, None]
    refl = base * (1.0 - TROUGH_970_DEPTH * w * _window(wl, 970.0, 32.0))
    refl = refl * (1.0 - DIP_847_DEPTH * w * _window(wl, 847.0, 12.0))
    refl = refl * (1.0 - DROP_420_DEPTH * w * _window(wl, 420.0, 7.0))
    refl = refl * (1.0 - DIP_710_DEPTH * w * _window(wl, 710.0, 6.0))
    refl = refl + RISE_660 * w * _window(wl, 660.0, 7.0)
    return refl


def _nuisance(wl: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    """Additive LWC-independent perturbations that avoid 420/660/791/800/847/970 nm."""
    a900 = rng.uniform(-0.10, 0.10, size=(n, 1))
    a675 = rng.uniform(-0.015, 0.01, size=(n, 1))
    a550 = rng.uniform(-0.03, 0.03, size=(n, 1))
    a432 = rng.uniform(-0.02, 0.03, size=(n, 1))
    a730 = rng.uniform(-0.06, 0.06, size=(n, 1))
    return (a900 * _window(wl, 900.0, 28.0)
            + a675 * _window(wl, 675.0, 8.0)
            + a550 * _window(wl, 550.0, 35.0)
            + a432 * _window(wl, 432.0, 6.0)
            + a730 * _window(wl, 730.0, 28.0))


def _noisy(refl: np.ndarray, rng: np.random.Generator, noise: float) -> np.ndarray:
    if noise > 0:
        refl = refl + rng.normal(0.0, noise, size=refl.shape)
    return np.clip(refl, REFLECTANCE_FLOOR, REFLECTANCE_CEIL)


def spectra_for(lwc, config: GeneratorConfig, rng: np.random.Generator) -> np.ndarray:
    """Vegetation spectra for the given LWC values, shape (len(lwc), bands)."""
    wl = config.axis().wavelengths_nm
    lwc = np.asarray(lwc, dtype=np.float64)
    refl = _lwc_spectra(wl, lwc) + _nuisance(wl, rng, lwc.size)
    return _noisy(refl, rng, config.noise)


def generate_samples(config: GeneratorConfig = GeneratorConfig()) -> tuple[list[SpectralSample], WavelengthAxis]:
    """``config.n_samples`` labelled spectra; a pure function of ``config``."""
    rng = np.random.default_rng(config.seed)
    axis = config.axis()
    lwc = rng.uniform(config.lwc_min, config.lwc_max, size=config.n_samples)
    nitrogen = rng.uniform(0.8, 3.5, size=config.n_samples)
    carbon = rng.uniform(38.0, 46.0, size=config.n_samples)
    spectra = spectra_for(lwc, config, rng)
    samples = [
        SpectralSample(
            sample_id=f"s{i:04d}",
            das=config.das,
            reflectance=spectra[i],
            lwc=float(lwc[i]),
            nitrogen=float(nitrogen[i]),
            carbon=float(carbon[i]),
            cn_ratio=float(carbon[i] / nitrogen[i]),
        )
        for i in range(config.n_samples)
    ]
    return samples, axis


@dataclass(frozen=True)
class LwcField:
    """Spatial LWC layout for synthetic cubes.

    ``gradient`` ramps linearly from ``levels[0]`` (left column) to
    ``levels[1]`` (right column). ``blocks`` tiles square blocks of
    ``block_size`` pixels in a checkerboard of ``levels[0]``/``levels[1]``.
    """

    kind: str = "blocks"
    levels: tuple = (0.70, 0.88)
    block_size: int = 16

    def __post_init__(self):
        if self.kind not in ("gradient", "blocks"):
            raise InvalidConfig(f"unknown lwc field kind {self.kind!r}")
        if len(self.levels) != 2 or not all(0.0 <= v <= 1.0 for v in self.levels):
            raise InvalidConfig(f"levels must be two values in [0, 1], got {self.levels}")
        if self.block_size < 1:
            raise InvalidConfig(f"block_size must be >= 1, got {self.block_size}")

    def render(self, height: int, width: int) -> np.ndarray:
        lo, hi = self.levels
        if self.kind == "gradient":
            t = np.linspace(0.0, 1.0, width) if width > 1 else np.zeros(1)
            return np.broadcast_to(lo + (hi - lo) * t, (height, width)).copy()
        r = np.arange(height)[:, None] // self.block_size
        c = np.arange(width)[None, :] // self.block_size
        return np.where((r + c) % 2 == 0, lo, hi).astype(np.float64)


def generate_cube(config: GeneratorConfig, width: int, height: int,
                  lwc_field: LwcField = LwcField(), soil_fraction: float = 0.0
                  ) -> tuple[HyperspectralCube, np.ndarray]:
    """Cube plus ground-truth LWC raster (NaN on soil pixels).

    Exactly ``round(soil_fraction * width * height)`` pixels, picked by the
    seeded generator, hold the soil spectrum instead of vegetation.
    """
    if width < 1 or height < 1:
        raise InvalidConfig(f"cube must be at least 1x1, got {width}x{height}")
    if not 0.0 <= soil_fraction <= 1.0:
        raise InvalidConfig(f"soil_fraction must lie in [0, 1], got {soil_fraction}")
    rng = np.random.default_rng(config.seed)
    axis = config.axis()
    wl = axis.wavelengths_nm
    truth = lwc_field.render(height, width)
    n_pix = width * height
    flat_truth = truth.ravel().copy()

    n_soil = int(round(soil_fraction * n_pix))
    soil = np.zeros(n_pix, dtype=bool)
    soil[rng.permutation(n_pix)[:n_soil]] = True

    spectra = _lwc_spectra(wl, flat_truth) + _nuisance(wl, rng, n_pix)
    spectra[soil] = soil_spectrum(wl)[None, :]
    spectra = _noisy(spectra, rng, config.noise)
    flat_truth[soil] = SOIL_NODATA

    data = spectra.reshape(height, width, wl.size).astype(np.float32)
    return HyperspectralCube(data, axis), flat_truth.reshape(height, width)

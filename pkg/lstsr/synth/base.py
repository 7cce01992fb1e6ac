import enum
import numpy as np

from pydantic import BaseModel, model_validator
from typing import Optional, Tuple
from lstsr.raster.base import GridKind, RasterGrid

LST_BOUNDS = (200.0, 350.0)
NDVI_BOUNDS = (0.05, 0.9)
MIN_SIZE = 64


class Generator(enum.Enum):
    GRF = 'grf'
    LINEAR_NDVI = 'linear_ndvi'
    CHECKER = 'checker'
    RAMP = 'ramp'


class FieldSpec(BaseModel):
    """
    Recipe for a synthetic LST field.

    Attributes:
        generator (Generator): Field family.
        seed (int): Random seed; generation is deterministic under it.
        size (int): Side of the square grid in pixels, >= 64.
        pixel_size_m (float): Ground pixel size. Defaults to 1000.
        value_range (Tuple[float, float]): Kelvin bounds of every value, inside [200, 350].
        mean (float): Mean temperature of `grf` and `checker` fields.
        std (float): Standard deviation of `grf` fields, half-contrast of `checker` fields.
        corr_length (float): Gaussian smoothing length in pixels (`grf`, `linear_ndvi`); checker cell side.
        slope (float): LST per NDVI unit of `linear_ndvi` fields.
        intercept (float): LST at zero NDVI of `linear_ndvi` fields.
        noise (float): Gaussian noise sigma added to `linear_ndvi` LST.
    """
    generator: Generator = Generator.GRF
    seed: int = 0
    size: int = 256
    pixel_size_m: float = 1000.0
    value_range: Tuple[float, float] = (250.0, 340.0)
    mean: float = 295.0
    std: float = 5.0
    corr_length: float = 8.0
    slope: float = -20.0
    intercept: float = 305.0
    noise: float = 0.0

    @model_validator(mode='after')
    def _check_invariants(self) -> 'FieldSpec':
        low, high = self.value_range
        if self.size < MIN_SIZE:
            raise ValueError(f'size must be >= {MIN_SIZE}, got {self.size}')
        if not LST_BOUNDS[0] <= low < high <= LST_BOUNDS[1]:
            raise ValueError(f'value_range must be an increasing pair inside {LST_BOUNDS}, got {self.value_range}')
        if self.pixel_size_m <= 0 or self.corr_length <= 0:
            raise ValueError('pixel_size_m and corr_length must be > 0')
        if self.std < 0 or self.noise < 0:
            raise ValueError('std and noise must be >= 0')
        if self.generator == Generator.LINEAR_NDVI:
            trend = [self.slope * v + self.intercept for v in NDVI_BOUNDS]
            if min(trend) < low or max(trend) > high:
                raise ValueError(f'linear trend {trend} over NDVI {NDVI_BOUNDS} leaves value_range {self.value_range}')
        return self


def gaussian_random_field(shape: Tuple[int, int], corr_length: float, rng: np.random.Generator) -> np.ndarray:
    """
    Zero-mean, unit-variance stationary field by spectral synthesis.

    White noise is filtered with the transfer function of a Gaussian kernel of width `corr_length`
    pixels, then divided by the filter's RMS gain so the expected variance is one.
    """
    fy = np.fft.fftfreq(shape[0])[:, None]
    fx = np.fft.fftfreq(shape[1])[None, :]
    transfer = np.exp(-2.0 * np.pi ** 2 * corr_length ** 2 * (fx ** 2 + fy ** 2))
    noise = rng.standard_normal(shape)
    field = np.real(np.fft.ifft2(np.fft.fft2(noise) * transfer))
    return field / np.sqrt(np.mean(transfer ** 2))


def _grid(values: np.ndarray, spec: FieldSpec, kind: GridKind = GridKind.LST) -> RasterGrid:
    return RasterGrid.from_array(values, pixel_size_m=spec.pixel_size_m, kind=kind)


def generate(spec: FieldSpec) -> Tuple[RasterGrid, Optional[RasterGrid]]:
    """
    Generate a synthetic LST grid, plus its fine NDVI grid for `linear_ndvi`.

    `linear_ndvi` fields satisfy `lst = slope * ndvi + intercept + noise` pixel by pixel, with NDVI
    kept in [0.05, 0.9]. All LST values lie inside `spec.value_range`.

    Returns:
        Tuple[RasterGrid, Optional[RasterGrid]]: LST grid and the NDVI grid (None for other generators).
    """
    rng = np.random.default_rng(spec.seed)
    shape = (spec.size, spec.size)
    low, high = spec.value_range

    if spec.generator == Generator.GRF:
        values = spec.mean + spec.std * gaussian_random_field(shape, spec.corr_length, rng)
        return _grid(np.clip(values, low, high), spec), None

    if spec.generator == Generator.LINEAR_NDVI:
        centre = 0.5 * (NDVI_BOUNDS[0] + NDVI_BOUNDS[1])
        ndvi = np.clip(centre + 0.15 * gaussian_random_field(shape, spec.corr_length, rng), *NDVI_BOUNDS)
        lst = spec.slope * ndvi + spec.intercept
        if spec.noise > 0:
            lst = np.clip(lst + spec.noise * rng.standard_normal(shape), low, high)
        return _grid(lst, spec), _grid(ndvi, spec, GridKind.NDVI)

    if spec.generator == Generator.CHECKER:
        cell = max(1, int(round(spec.corr_length)))
        rows, cols = np.indices(shape) // cell
        sign = np.where((rows + cols) % 2 == 0, -1.0, 1.0)
        return _grid(np.clip(spec.mean + spec.std * sign, low, high), spec), None

    ramp = np.linspace(low, high, spec.size)
    return _grid(np.tile(ramp, (spec.size, 1)), spec), None

import math
import numpy as np

from fractions import Fraction
from typing import Union
from lstsr.raster.base import Patch, PatchLike, as_array
from lstsr.utils.errors import ShapeError

Ratio = Union[int, float, Fraction]


def _check_divides(shape, ratio: int):
    if not isinstance(ratio, (int, np.integer)) or ratio < 1:
        raise ShapeError(f'ratio must be a positive integer, got {ratio!r}')
    if shape[0] % ratio or shape[1] % ratio:
        raise ShapeError(f'ratio {ratio} does not divide patch shape {shape}')


def norml4_downsample(hr: PatchLike, ratio: int) -> Patch:
    """
    Radiometric (Norm-L4) degradation: every coarse pixel is the fourth root of the
    block mean of T^4, following the Stefan-Boltzmann law.

    Args:
        hr (PatchLike): Fine field in Kelvin, nodata-free and strictly positive.
        ratio (int): Block side; must divide both dimensions.

    Returns:
        Patch: Coarse field of shape `hr.shape // ratio`.

    Raises:
        ShapeError: If `ratio` does not divide the shape.
        ValueError: If any temperature is non-positive.
    """
    data = as_array(hr)
    _check_divides(data.shape, ratio)
    if np.any(data <= 0):
        raise ValueError('Norm-L4 degradation needs strictly positive temperatures')
    h, w = data.shape
    blocks = (data ** 4).reshape(h // ratio, ratio, w // ratio, ratio)
    return Patch(data=blocks.mean(axis=(1, 3)) ** 0.25)


def block_mean(hr: PatchLike, ratio: int) -> Patch:
    """Plain (linear) block mean over `ratio x ratio` blocks."""
    data = as_array(hr)
    _check_divides(data.shape, ratio)
    h, w = data.shape
    return Patch(data=data.reshape(h // ratio, ratio, w // ratio, ratio).mean(axis=(1, 3)))


def overlap_matrix(n_in: int, ratio: Ratio) -> np.ndarray:
    """
    Area-overlap weights `A[i, j]`: fraction of coarse cell `i` covered by fine cell `j`.

    Coarse cell `i` spans `[i*ratio, (i+1)*ratio)` in fine pixel units; rows sum to 1.
    """
    ratio = Fraction(ratio).limit_denominator(10 ** 6)
    if ratio <= 0:
        raise ShapeError(f'ratio must be positive, got {ratio}')
    n_out = math.floor(Fraction(n_in) / ratio)
    if n_out < 1:
        raise ShapeError(f'ratio {ratio} leaves no coarse pixel out of {n_in} fine pixels')
    weights = np.zeros((n_out, n_in), dtype=np.float64)
    for i in range(n_out):
        lo, hi = i * ratio, (i + 1) * ratio
        for j in range(math.floor(lo), math.ceil(hi)):
            overlap = min(hi, j + 1) - max(lo, j)
            if overlap > 0:
                weights[i, j] = float(overlap / ratio)
    return weights


def area_weighted_downsample(hr: PatchLike, ratio: Ratio) -> Patch:
    """
    Area-weighted linear downsampling by a possibly non-integer ratio.

    Each coarse pixel is the mean of the fine field over its footprint, fine pixels being
    weighted by their exact rectangle overlap. Integer ratios reduce to block means.

    Args:
        hr (PatchLike): Fine field, nodata-free.
        ratio (Ratio): Coarse pixel size over fine pixel size, e.g. `Fraction(250, 90)`.

    Returns:
        Patch: Coarse field with `floor(n / ratio)` pixels per axis.

    Raises:
        ShapeError: If the output would be smaller than one pixel.
    """
    data = as_array(hr)
    if np.isnan(data).any():
        raise ValueError('area-weighted downsampling needs a nodata-free field')
    rows = overlap_matrix(data.shape[0], ratio)
    cols = overlap_matrix(data.shape[1], ratio)
    return Patch(data=rows @ data @ cols.T)

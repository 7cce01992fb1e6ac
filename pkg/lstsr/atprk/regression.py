import numpy as np

from typing import Tuple
from lstsr.raster.base import GridKind, RasterGrid
from lstsr.utils.errors import ShapeError


def fit_regression(lst_coarse: RasterGrid, ndvi_coarse: RasterGrid) -> Tuple[float, float, RasterGrid]:
    """
    Ordinary least squares `lst = slope * ndvi + intercept` over pixels valid in both grids.

    Returns:
        Tuple[float, float, RasterGrid]: slope (K per NDVI unit), intercept (K) and the residual grid
            `lst - (slope * ndvi + intercept)`, nodata wherever either input is nodata.

    Raises:
        ShapeError: Grids differ in shape.
        ValueError: Fewer than two valid pixels, or NDVI without variance.
    """
    if lst_coarse.shape != ndvi_coarse.shape:
        raise ShapeError(f'LST grid {lst_coarse.shape} and NDVI grid {ndvi_coarse.shape} differ in shape')
    valid = ~(lst_coarse.nodata_mask | ndvi_coarse.nodata_mask)
    y = lst_coarse.values[valid]
    x = ndvi_coarse.values[valid]
    if x.size < 2:
        raise ValueError(f'regression needs at least 2 valid pixels, got {x.size}')
    dx = x - x.mean()
    sxx = np.dot(dx, dx)
    if sxx == 0:
        raise ValueError('NDVI has zero variance over the valid pixels; the regression is degenerate')
    slope = float(np.dot(dx, y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())

    residuals = np.full(lst_coarse.shape, np.nan)
    residuals[valid] = y - (slope * x + intercept)
    return slope, intercept, RasterGrid.from_array(residuals, lst_coarse.pixel_size_m, kind=GridKind.RESIDUAL)

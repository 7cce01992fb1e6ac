import numpy as np

from typing import Optional, Tuple
from lstsr.atprk.kriging import AtprkModel, atpk_residuals, DEFAULT_NEIGHBORHOOD
from lstsr.atprk.regression import fit_regression
from lstsr.atprk.variogram import Variogram, fit_variogram, DEFAULT_LAGS
from lstsr.raster.base import GridKind, RasterGrid
from lstsr.resample.degrade import area_weighted_downsample
from lstsr.utils.errors import ShapeError
from lstsr.utils.logs import print_text


def fit_atprk(
    lst_coarse: RasterGrid,
    ndvi_coarse: RasterGrid,
    ratio: int,
    neighborhood: int = DEFAULT_NEIGHBORHOOD,
    n_lags: int = DEFAULT_LAGS,
    quadrature: Optional[int] = None
) -> Tuple[AtprkModel, RasterGrid]:
    """
    Fit the coarse regression and the residual variogram.

    Constant NDVI degenerates the regression to slope 0 and intercept = mean coarse LST;
    too few residual pixels for a variogram fall back to a pure nugget at their variance.

    Returns:
        Tuple[AtprkModel, RasterGrid]: The fitted model and the coarse residual grid.
    """
    try:
        slope, intercept, residuals = fit_regression(lst_coarse, ndvi_coarse)
    except ValueError as e:
        print_text(f'Regression degenerate ({e}); using the coarse mean as trend', style='yellow')
        valid = lst_coarse.values[~lst_coarse.nodata_mask]
        slope, intercept = 0.0, float(valid.mean())
        residuals = lst_coarse.with_values(lst_coarse.values - intercept, kind=GridKind.RESIDUAL)
    try:
        variogram = fit_variogram(residuals, n_lags)
    except ValueError:
        valid = residuals.values[~residuals.nodata_mask]
        variogram = Variogram.pure_nugget(float(np.var(valid)), residuals.pixel_size_m)
    model = AtprkModel(slope=slope, intercept=intercept, variogram=variogram,
                       ratio=ratio, neighborhood=neighborhood, quadrature=quadrature)
    return model, residuals


def atprk_sharpen(
    lst_coarse: RasterGrid,
    ndvi_fine: RasterGrid,
    ratio: int,
    neighborhood: int = DEFAULT_NEIGHBORHOOD,
    n_lags: int = DEFAULT_LAGS,
    quadrature: Optional[int] = None,
    verbose: bool = False
) -> RasterGrid:
    """
    Area-To-Point Regression Kriging.

    The LST~NDVI regression fitted at the coarse scale is applied to the fine NDVI, and the kriged
    coarse residuals are added back so that the result aggregates to the coarse observation.

    Args:
        lst_coarse (RasterGrid): Cloud-free coarse LST.
        ndvi_fine (RasterGrid): Fine NDVI, `ratio` times larger in both dimensions.
        ratio (int): Integer downscaling ratio.
        neighborhood (int): Kriging window side in coarse pixels. Defaults to 5.
        n_lags (int): Variogram lag bins. Defaults to 10.
        quadrature (int, optional): Support quadrature points per side. Defaults to `ratio`.
        verbose (bool): Show a progress bar over the kriging rows.

    Returns:
        RasterGrid: Fine LST at `lst_coarse.pixel_size_m / ratio`, with the kriging metadata.

    Raises:
        ShapeError: NDVI dimensions are not `ratio` times the LST dimensions.
        ValueError: Nodata in either input.
    """
    expected = (lst_coarse.height * ratio, lst_coarse.width * ratio)
    if ndvi_fine.shape != expected:
        raise ShapeError(f'fine NDVI must be {expected} for ratio {ratio}, got {ndvi_fine.shape}')
    if lst_coarse.has_nodata or ndvi_fine.has_nodata:
        raise ValueError('ATPRK needs cloud-free LST and gap-free NDVI')

    ndvi_coarse = RasterGrid.from_array(
        area_weighted_downsample(ndvi_fine.values, ratio).data,
        pixel_size_m=lst_coarse.pixel_size_m,
        kind=GridKind.NDVI
    )
    model, residuals = fit_atprk(lst_coarse, ndvi_coarse, ratio, neighborhood, n_lags, quadrature)
    fine_residuals = atpk_residuals(residuals, model, verbose=verbose)
    trend = model.slope * ndvi_fine.values + model.intercept
    return RasterGrid.from_array(
        trend + fine_residuals.values,
        pixel_size_m=lst_coarse.pixel_size_m / ratio,
        metadata={**fine_residuals.metadata, 'slope': model.slope, 'intercept': model.intercept}
    )

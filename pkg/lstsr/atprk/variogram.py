import enum
import numpy as np
import pandas as pd

from pydantic import BaseModel, model_validator
from scipy.optimize import least_squares
from lstsr.raster.base import RasterGrid
from lstsr.utils.internal_data import InternalDataFrame

MIN_VARIOGRAM_PIXELS = 30
DEFAULT_LAGS = 10


class VariogramModel(enum.Enum):
    EXPONENTIAL = 'exponential'


class Variogram(BaseModel):
    """
    Isotropic exponential semivariogram `nugget + (sill - nugget) (1 - exp(-3 h / range_m))`.

    Attributes:
        model (VariogramModel): Model family.
        nugget (float): Discontinuity at the origin.
        sill (float): Total sill, the semivariance plateau.
        range_m (float): Practical range in meters.
    """
    model: VariogramModel = VariogramModel.EXPONENTIAL
    nugget: float
    sill: float
    range_m: float

    class Config:
        frozen = True

    @model_validator(mode='after')
    def _check_invariants(self) -> 'Variogram':
        if not self.sill >= self.nugget >= 0:
            raise ValueError(f'need sill >= nugget >= 0, got sill={self.sill}, nugget={self.nugget}')
        if self.range_m <= 0:
            raise ValueError(f'range_m must be > 0, got {self.range_m}')
        return self

    @classmethod
    def pure_nugget(cls, variance: float, range_m: float) -> 'Variogram':
        return cls(nugget=variance, sill=variance, range_m=range_m)

    @property
    def is_pure_nugget(self) -> bool:
        return self.nugget == self.sill

    def gamma(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=np.float64)
        value = self.nugget + (self.sill - self.nugget) * (1.0 - np.exp(-3.0 * h / self.range_m))
        return np.where(h > 0, value, 0.0)

    def covariance(self, h: np.ndarray) -> np.ndarray:
        """Point covariance `sill - gamma(h)`, equal to the sill at zero lag."""
        return self.sill - self.gamma(h)


def empirical_semivariogram(residuals: RasterGrid, n_lags: int = DEFAULT_LAGS) -> InternalDataFrame:
    """
    Matheron semivariogram on lag bins one pixel wide.

    Every pixel pair within `n_lags` pixels is visited once via shifted arrays; bin `k` gathers
    pairs with `round(distance / pixel) == k`.

    Returns:
        InternalDataFrame: Columns lag_m (mean pair distance), gamma and count, for non-empty bins.
    """
    values = residuals.values
    height, width = values.shape
    n_lags = max(1, min(n_lags, max(height, width) - 1))
    sums = np.zeros(n_lags + 1)
    counts = np.zeros(n_lags + 1)
    distances = np.zeros(n_lags + 1)
    for dy in range(0, n_lags + 1):
        for dx in range(-n_lags, n_lags + 1):
            if dy == 0 and dx <= 0:
                continue
            d = np.hypot(dy, dx)
            k = int(np.rint(d))
            if k > n_lags or dy >= height or abs(dx) >= width:
                continue
            a = values[dy:, max(dx, 0):width + min(dx, 0)]
            b = values[:height - dy, max(-dx, 0):width - max(dx, 0)]
            diff = (a - b)[~np.isnan(a - b)]
            if diff.size:
                sums[k] += np.dot(diff, diff)
                counts[k] += diff.size
                distances[k] += d * diff.size
    keep = counts > 0
    return pd.DataFrame({
        'lag_m': distances[keep] / counts[keep] * residuals.pixel_size_m,
        'gamma': sums[keep] / (2.0 * counts[keep]),
        'count': counts[keep].astype(np.int64),
    })


def _exponential(params: np.ndarray, lags: np.ndarray) -> np.ndarray:
    psill, range_m, nugget = params
    return nugget + psill * (1.0 - np.exp(-3.0 * lags / range_m))


def fit_variogram(residuals: RasterGrid, n_lags: int = DEFAULT_LAGS) -> Variogram:
    """
    Fit an exponential variogram to a residual grid by count-weighted least squares.

    A fitted practical range shorter than the first lag is reported as a pure nugget of the fitted
    total sill; a failed fit falls back to a pure nugget at the sample variance.

    Args:
        residuals (RasterGrid): Coarse residual grid; nodata pixels are skipped.
        n_lags (int): Number of one-pixel lag bins. Defaults to 10.

    Returns:
        Variogram: Fitted model, lags in meters.

    Raises:
        ValueError: Fewer than 30 valid pixels.
    """
    valid = residuals.values[~residuals.nodata_mask]
    if valid.size < MIN_VARIOGRAM_PIXELS:
        raise ValueError(f'variogram fitting needs at least {MIN_VARIOGRAM_PIXELS} valid pixels, got {valid.size}')
    variance = float(np.var(valid))
    first_lag = residuals.pixel_size_m
    if variance == 0:
        return Variogram.pure_nugget(0.0, first_lag)

    table = empirical_semivariogram(residuals, n_lags)
    lags = table['lag_m'].to_numpy()
    # fit in variance units so tiny residual fields are as well scaled as large ones
    gamma = table['gamma'].to_numpy() / variance
    weight = np.sqrt(table['count'].to_numpy())
    if len(lags) < 3:
        return Variogram.pure_nugget(variance, first_lag)

    x0 = [max(gamma.max() - gamma.min(), 1e-3), 0.25 * lags.max(), gamma.min()]
    bounds = ([0.0, 1e-3 * first_lag, 0.0], [10.0 * gamma.max(), 10.0 * lags.max(), gamma.max()])
    try:
        fit = least_squares(lambda p: weight * (_exponential(p, lags) - gamma), x0, bounds=bounds)
    except (ValueError, np.linalg.LinAlgError):
        return Variogram.pure_nugget(variance, first_lag)
    if not fit.success or not np.all(np.isfinite(fit.x)):
        return Variogram.pure_nugget(variance, first_lag)

    psill, range_m, nugget = fit.x
    sill = (psill + nugget) * variance
    if range_m < first_lag:
        return Variogram.pure_nugget(sill, first_lag)
    return Variogram(nugget=nugget * variance, sill=sill, range_m=float(range_m))

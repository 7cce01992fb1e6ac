import warnings
import numpy as np

from pydantic import BaseModel, model_validator
from scipy.linalg import LinAlgError, LinAlgWarning, solve
from typing import Dict, List, Optional, Tuple
from lstsr.atprk.variogram import Variogram
from lstsr.raster.base import GridKind, RasterGrid
from lstsr.utils.logs import print_error, progress_task
from lstsr.utils.parallel import ordered_map

DEFAULT_NEIGHBORHOOD = 5
JITTER = 1e-8

Layout = Tuple[int, int, int, int]


class AtprkModel(BaseModel):
    """
    Fitted regression plus the kriging setup for its residuals.

    Attributes:
        slope (float): Regression slope, K per NDVI unit.
        intercept (float): Regression intercept, K.
        variogram (Variogram): Point variogram of the coarse residuals.
        ratio (int): Coarse-to-fine ratio.
        neighborhood (int): Side of the coarse window used per kriging solve. Defaults to 5.
        quadrature (int, optional): Points per side discretizing a coarse support. Defaults to `ratio`.
    """
    slope: float = 0.0
    intercept: float = 0.0
    variogram: Variogram
    ratio: int
    neighborhood: int = DEFAULT_NEIGHBORHOOD
    quadrature: Optional[int] = None

    class Config:
        frozen = True

    @model_validator(mode='after')
    def _check_invariants(self) -> 'AtprkModel':
        if self.ratio < 1:
            raise ValueError(f'ratio must be >= 1, got {self.ratio}')
        if self.neighborhood < 1:
            raise ValueError(f'neighborhood must be >= 1, got {self.neighborhood}')
        if self.quadrature is not None and self.quadrature < 1:
            raise ValueError(f'quadrature must be >= 1, got {self.quadrature}')
        return self

    @property
    def points_per_side(self) -> int:
        return self.quadrature or self.ratio


def _support_offsets(points: int, pixel: float) -> np.ndarray:
    """Quadrature (or fine-pixel centre) offsets inside one pixel, relative to its centre, `(points^2, 2)`."""
    u = ((np.arange(points) + 0.5) / points - 0.5) * pixel
    yy, xx = np.meshgrid(u, u, indexing='ij')
    return np.stack([yy.ravel(), xx.ravel()], axis=1)


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sqrt(((a[..., :, None, :] - b[..., None, :, :]) ** 2).sum(axis=-1))


def regularized_covariances(
    variogram: Variogram,
    offsets: np.ndarray,
    pixel_size_m: float,
    ratio: int,
    points: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Area-to-area and area-to-point covariances for a neighborhood of coarse supports.

    Args:
        variogram (Variogram): Point variogram.
        offsets (np.ndarray): `(n, 2)` neighbor positions in coarse pixels relative to the target pixel.
        pixel_size_m (float): Coarse pixel size.
        ratio (int): Fine pixels per coarse pixel side.
        points (int): Quadrature points per coarse pixel side.

    Returns:
        Tuple[np.ndarray, np.ndarray]: `(n, n)` coarse-to-coarse and `(n, ratio^2)` coarse-to-fine-point covariances.
    """
    quad = _support_offsets(points, pixel_size_m)
    supports = offsets[:, None, :] * pixel_size_m + quad[None, :, :]
    flat = supports.reshape(-1, 2)
    n, q2 = supports.shape[:2]
    area_area = variogram.covariance(_distances(flat, flat)).reshape(n, q2, n, q2).mean(axis=(1, 3))
    fine = _support_offsets(ratio, pixel_size_m)
    area_point = variogram.covariance(_distances(supports, fine[None])).mean(axis=1)
    return area_area, area_point


def _neighbor_offsets(layout: Layout) -> np.ndarray:
    r0, r1, c0, c1 = layout
    rows, cols = np.meshgrid(np.arange(r0, r1 + 1), np.arange(c0, c1 + 1), indexing='ij')
    return np.stack([rows.ravel(), cols.ravel()], axis=1).astype(np.float64)


def kriging_weights(
    model: AtprkModel,
    layout: Layout,
    pixel_size_m: float
) -> Tuple[np.ndarray, bool]:
    """
    Solve the ordinary area-to-point kriging system of one neighborhood layout.

    Covariances are scaled by the sill; a singular or ill-conditioned system is retried with
    `1e-8` added to the covariance diagonal (`1e-8 * sill` in physical units).

    Returns:
        Tuple[np.ndarray, bool]: `(n_neighbors, ratio^2)` weights, one column per fine pixel of the
            target coarse pixel, and whether jitter was needed.
    """
    offsets = _neighbor_offsets(layout)
    area_area, area_point = regularized_covariances(
        model.variogram, offsets, pixel_size_m, model.ratio, model.points_per_side)
    scale = model.variogram.sill if model.variogram.sill > 0 else 1.0
    n = len(offsets)
    lhs = np.ones((n + 1, n + 1))
    lhs[:n, :n] = area_area / scale
    lhs[n, n] = 0.0
    rhs = np.ones((n + 1, area_point.shape[1]))
    rhs[:n] = area_point / scale

    jitter = model.variogram.sill <= 0
    if not jitter:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter('error', LinAlgWarning)
                return solve(lhs, rhs)[:n], False
        except (LinAlgError, LinAlgWarning):
            jitter = True
    lhs[:n, :n] += JITTER * np.eye(n)
    return solve(lhs, rhs)[:n], jitter


def _layout(i: int, j: int, height: int, width: int, half: int) -> Layout:
    return (max(0, i - half) - i, min(height - 1, i + half) - i,
            max(0, j - half) - j, min(width - 1, j + half) - j)


def atpk_residuals(residual_coarse: RasterGrid, model: AtprkModel, verbose: bool = False) -> RasterGrid:
    """
    Downscale coarse residuals by area-to-point kriging.

    Each fine pixel is a weighted sum of the coarse residuals in the `neighborhood` x `neighborhood`
    window around its coarse pixel (clipped at the borders); weights sum to one. Weights are solved
    once per distinct window layout. `verbose` shows a progress bar over coarse rows.

    Returns:
        RasterGrid: Fine residual grid (`ratio` times larger) with metadata `kriging_jitter`
            and `max_weight_sum_error`.

    Raises:
        ValueError: Nodata in the coarse residuals.
    """
    if residual_coarse.has_nodata:
        print_error('Kriging needs a gap-free residual grid: fill or crop nodata pixels first')
        raise ValueError('coarse residual grid contains nodata')
    values = residual_coarse.values
    height, width = values.shape
    r = model.ratio
    half = model.neighborhood // 2

    layouts = sorted({_layout(i, j, height, width, half) for i in range(height) for j in range(width)})
    solved: Dict[Layout, Tuple[np.ndarray, bool]] = dict(
        zip(layouts, ordered_map(lambda lay: kriging_weights(model, lay, residual_coarse.pixel_size_m), layouts)))
    jitter = any(flag for _, flag in solved.values())
    weight_sum_error = max(float(np.max(np.abs(w.sum(axis=0) - 1.0))) for w, _ in solved.values())

    def downscale_row(i: int) -> np.ndarray:
        block = np.empty((r, width * r))
        for j in range(width):
            layout = _layout(i, j, height, width, half)
            r0, r1, c0, c1 = layout
            neighbors = values[i + r0:i + r1 + 1, j + c0:j + c1 + 1].ravel()
            block[:, j * r:(j + 1) * r] = (neighbors @ solved[layout][0]).reshape(r, r)
        return block

    with progress_task('Kriging residuals', total=height, visible=verbose) as advance:
        def tracked_row(i: int) -> np.ndarray:
            block = downscale_row(i)
            advance()
            return block

        fine: List[np.ndarray] = ordered_map(tracked_row, range(height))
    return RasterGrid.from_array(
        np.vstack(fine),
        pixel_size_m=residual_coarse.pixel_size_m / r,
        kind=GridKind.RESIDUAL,
        metadata={'kriging_jitter': jitter, 'max_weight_sum_error': weight_sum_error}
    )

import numpy as np

from lstsr.raster.base import Patch, PatchLike, as_array
from lstsr.resample.degrade import norml4_downsample
from lstsr.utils.errors import ShapeError

CUBIC_A = -0.5


def cubic_kernel(t: np.ndarray, a: float = CUBIC_A) -> np.ndarray:
    """Cubic convolution kernel; `a = -0.5` is the Catmull-Rom member."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    near = ((a + 2) * t - (a + 3)) * t * t + 1
    far = ((a * t - 5 * a) * t + 8 * a) * t - 4 * a
    return np.where(t <= 1, near, np.where(t < 2, far, 0.0))


def bicubic_matrix(n_in: int, ratio: int, a: float = CUBIC_A) -> np.ndarray:
    """
    Interpolation weights `W[i, j]` from `n_in` samples to `n_in * ratio` outputs.

    Half-pixel-centred alignment: output `i` sits at input coordinate `(i + 0.5) / ratio - 0.5`.
    Taps beyond the border are folded onto the edge sample (replicate padding).
    """
    n_out = n_in * ratio
    x = (np.arange(n_out) + 0.5) / ratio - 0.5
    base = np.floor(x).astype(np.int64)
    frac = x - base
    weights = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.arange(n_out)
    for k in range(-1, 3):
        idx = np.clip(base + k, 0, n_in - 1)
        np.add.at(weights, (rows, idx), cubic_kernel(frac - k, a))
    return weights


def bicubic_upsample(lr: PatchLike, ratio: int, a: float = CUBIC_A) -> Patch:
    """
    Bicubic (cubic convolution) upsampling by an integer ratio.

    Args:
        lr (PatchLike): Coarse field, nodata-free.
        ratio (int): Integer scale factor, >= 2.
        a (float): Kernel parameter. Defaults to -0.5.

    Returns:
        Patch: Field of shape `lr.shape * ratio`.

    Raises:
        ShapeError: If `ratio` < 2.
    """
    if not isinstance(ratio, (int, np.integer)) or ratio < 2:
        raise ShapeError(f'upsampling ratio must be an integer >= 2, got {ratio!r}')
    data = as_array(lr)
    if np.isnan(data).any():
        raise ValueError('bicubic upsampling needs a nodata-free field')
    rows = bicubic_matrix(data.shape[0], ratio, a)
    cols = bicubic_matrix(data.shape[1], ratio, a)
    return Patch(data=rows @ data @ cols.T)


def make_ilr(hr: PatchLike, ratio: int) -> Patch:
    """Interpolated Low Resolution input: Norm-L4 degradation followed by bicubic upsampling."""
    return bicubic_upsample(norml4_downsample(hr, ratio), ratio)

import numpy as np

from typing import List
from lstsr.raster.base import RasterGrid, Patch
from lstsr.utils.errors import ShapeError

DEFAULT_PATCH_SIZE = 64


def extract_patches(grid: RasterGrid, size: int = DEFAULT_PATCH_SIZE, stride: int = None) -> List[Patch]:
    """
    Slice a grid into square windows on a stride lattice, discarding any window that touches nodata.

    Args:
        grid (RasterGrid): Source grid.
        size (int): Window side in pixels. Defaults to 64.
        stride (int, optional): Lattice step in pixels. Defaults to `size` (non-overlapping tiling).

    Returns:
        List[Patch]: Clean windows in row-major order of their offsets.

    Raises:
        ShapeError: If `size` exceeds the grid or `stride` < 1.
    """
    stride = size if stride is None else stride
    if size < 1 or size > min(grid.width, grid.height):
        raise ShapeError(f'patch size {size} does not fit a {grid.width}x{grid.height} grid')
    if stride < 1:
        raise ShapeError(f'stride must be >= 1, got {stride}')

    # summed-area table of the nodata mask: one O(1) lookup per window
    mask = grid.nodata_mask.astype(np.int64)
    table = np.zeros((grid.height + 1, grid.width + 1), dtype=np.int64)
    table[1:, 1:] = mask.cumsum(axis=0).cumsum(axis=1)

    patches = []
    for row in range(0, grid.height - size + 1, stride):
        for col in range(0, grid.width - size + 1, stride):
            cloudy = (table[row + size, col + size] - table[row, col + size]
                      - table[row + size, col] + table[row, col])
            if cloudy:
                continue
            patches.append(Patch(data=grid.values[row:row + size, col:col + size], row=row, col=col))
    return patches

import numpy as np

from typing import List, Tuple
from lstsr.networks.mrunet import MruNet
from lstsr.raster.base import RasterGrid
from lstsr.resample.interpolate import bicubic_upsample
from lstsr.utils.errors import ShapeError
from lstsr.utils.logs import print_error, progress_task
from lstsr.utils.parallel import ordered_map

TILE_SIZE = 64
TILE_OVERLAP = 8


def tile_starts(length: int, tile: int, overlap: int) -> List[int]:
    """Tile offsets along one axis; the last tile is pushed flush with the far edge."""
    stride = tile - overlap
    starts = list(range(0, length - tile + 1, stride))
    if starts[-1] + tile < length:
        starts.append(length - tile)
    return starts


def feather_window(tile: int, overlap: int) -> np.ndarray:
    """Separable linear ramp over `overlap` pixels at every tile border; strictly positive."""
    i = np.arange(tile) + 0.5
    ramp = np.minimum(1.0, np.minimum(i, tile - i) / max(overlap, 1))
    return np.outer(ramp, ramp)


def super_resolve(
    net: MruNet,
    lr_grid: RasterGrid,
    ratio: int,
    tile: int = TILE_SIZE,
    overlap: int = TILE_OVERLAP,
    verbose: bool = False
) -> RasterGrid:
    """
    Super-resolve a cloud-free coarse grid by `ratio`.

    The grid is bicubically upsampled, normalized by the network's norm_max and run in eval mode
    over `tile` x `tile` windows overlapping by `overlap` pixels; overlaps are blended with feathered
    weights. A grid that upsamples to exactly one tile is run without blending.

    Args:
        net (MruNet): Trained network.
        lr_grid (RasterGrid): Coarse LST grid without nodata.
        ratio (int): Integer upsampling ratio.
        tile (int): Tile size, divisible by `2 ** levels`. Defaults to 64.
        overlap (int): Tile overlap in pixels. Defaults to 8.
        verbose (bool): Show a progress bar over tiles.

    Returns:
        RasterGrid: Fine grid with `pixel_size_m = lr_grid.pixel_size_m / ratio`.

    Raises:
        ValueError: Nodata in the input.
        ShapeError: Upsampled grid smaller than one tile, or a tile size the network cannot process.
    """
    if lr_grid.has_nodata:
        print_error('Super-resolution needs a cloud-free grid: fill or crop nodata pixels first')
        raise ValueError('input grid contains nodata')
    if tile % net.config.divisor:
        raise ShapeError(f'tile size {tile} must be divisible by 2^levels = {net.config.divisor}')
    if not 0 <= overlap < tile:
        raise ShapeError(f'overlap must lie in [0, {tile}), got {overlap}')

    ilr = bicubic_upsample(lr_grid.values, ratio).data
    height, width = ilr.shape
    if height < tile or width < tile:
        raise ShapeError(f'upsampled grid {height}x{width} is smaller than one {tile}x{tile} tile')
    normalized = ilr / net.norm_max

    positions: List[Tuple[int, int]] = [
        (r, c) for r in tile_starts(height, tile, overlap) for c in tile_starts(width, tile, overlap)
    ]

    with progress_task('Super-resolving tiles', total=len(positions), visible=verbose) as advance:
        def run_tile(position: Tuple[int, int]) -> np.ndarray:
            r, c = position
            window = normalized[r:r + tile, c:c + tile]
            prediction = net.predict(window[None, None])[0, 0].astype(np.float64)
            advance()
            return prediction

        predictions = ordered_map(run_tile, positions)
    if len(positions) == 1:
        blended = predictions[0]
    else:
        weights = feather_window(tile, overlap)
        total = np.zeros_like(normalized)
        weight_sum = np.zeros_like(normalized)
        for (r, c), prediction in zip(positions, predictions):
            total[r:r + tile, c:c + tile] += weights * prediction
            weight_sum[r:r + tile, c:c + tile] += weights
        blended = total / weight_sum

    return RasterGrid.from_array(
        blended * net.norm_max,
        pixel_size_m=lr_grid.pixel_size_m / ratio,
        kind=lr_grid.kind
    )

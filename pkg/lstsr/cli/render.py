import numpy as np

from pathlib import Path
from typing import Union
from lstsr.raster.base import RasterGrid

# zero dynamic range has no stretch; such grids render uniformly at this level
DEGENERATE_GRAY = 128


def to_grayscale(grid: RasterGrid) -> np.ndarray:
    """Min-max stretch of the valid pixels onto uint8; nodata maps to 0."""
    values = grid.values
    valid = ~np.isnan(values)
    out = np.zeros(values.shape, dtype=np.uint8)
    if not valid.any():
        return out
    low, high = float(values[valid].min()), float(values[valid].max())
    if high == low:
        out[valid] = DEGENERATE_GRAY
        return out
    stretched = np.rint((values[valid] - low) / (high - low) * 255.0)
    out[valid] = np.clip(stretched, 0, 255).astype(np.uint8)
    return out


def dump_grayscale(grid: RasterGrid, path: Union[str, Path]) -> None:
    """
    Write an 8-bit grayscale rendering of a grid.

    `.png` paths go through matplotlib; anything else is written as a binary netpbm (`P5`) image.

    Raises:
        OSError: If the file cannot be written.
    """
    path = Path(path)
    pixels = to_grayscale(grid)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == '.png':
        from matplotlib import image
        image.imsave(path, pixels, cmap='gray', vmin=0, vmax=255)
        return
    header = f'P5\n{grid.width} {grid.height}\n255\n'.encode('ascii')
    path.write_bytes(header + pixels.tobytes(order='C'))

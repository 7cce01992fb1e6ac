from .base import RasterGrid, Patch, GridKind, NODATA, as_array, bit_equal
from .io import load_grid, store_grid, grid_paths
from .patches import extract_patches, DEFAULT_PATCH_SIZE

from typing import Optional
from lstsr.methods.base import SuperResolutionMethod
from lstsr.networks.mrunet import MruNet
from lstsr.raster.base import RasterGrid
from lstsr.training.inference import super_resolve, TILE_SIZE, TILE_OVERLAP


class MruNetMethod(SuperResolutionMethod):
    """
    A trained Multi-residual U-Net applied by tiled inference.

    Attributes:
        net (MruNet): Trained network (carries its norm_max).
        tile (int): Tile size. Defaults to 64.
        overlap (int): Tile overlap in pixels. Defaults to 8.
    """
    name: str = 'mrunet'
    net: MruNet
    tile: int = TILE_SIZE
    overlap: int = TILE_OVERLAP

    def super_resolve(self, lr_grid: RasterGrid, ratio: int, ndvi_fine: Optional[RasterGrid] = None) -> RasterGrid:
        return super_resolve(self.net, lr_grid, ratio, tile=self.tile, overlap=self.overlap, verbose=self.verbose)

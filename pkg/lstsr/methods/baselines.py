from typing import Optional
from lstsr.atprk.kriging import DEFAULT_NEIGHBORHOOD
from lstsr.atprk.sharpen import atprk_sharpen
from lstsr.methods.base import SuperResolutionMethod
from lstsr.raster.base import RasterGrid
from lstsr.resample.interpolate import bicubic_upsample


class BicubicMethod(SuperResolutionMethod):
    """Cubic-convolution upsampling; the floor baseline."""
    name: str = 'bicubic'

    def super_resolve(self, lr_grid: RasterGrid, ratio: int, ndvi_fine: Optional[RasterGrid] = None) -> RasterGrid:
        upsampled = bicubic_upsample(lr_grid.values, ratio)
        return lr_grid.with_values(upsampled.data, pixel_size_m=lr_grid.pixel_size_m / ratio)


class AtprkMethod(SuperResolutionMethod):
    """Area-To-Point Regression Kriging on a fine NDVI covariate."""
    name: str = 'atprk'
    neighborhood: int = DEFAULT_NEIGHBORHOOD

    @property
    def needs_ndvi(self) -> bool:
        return True

    def super_resolve(self, lr_grid: RasterGrid, ratio: int, ndvi_fine: Optional[RasterGrid] = None) -> RasterGrid:
        if ndvi_fine is None:
            raise ValueError('ATPRK needs a fine NDVI grid')
        return atprk_sharpen(lr_grid, ndvi_fine, ratio, neighborhood=self.neighborhood, verbose=self.verbose)

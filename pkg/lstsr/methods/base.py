from abc import ABC, abstractmethod
from pydantic import BaseModel
from typing import Optional
from lstsr.raster.base import RasterGrid


class SuperResolutionMethod(BaseModel, ABC):
    """
    Base class of every super-resolution method.

    Attributes:
        name (str): Label used in benchmark tables.
        verbose (bool): Show progress bars while super-resolving. Defaults to False.
    """
    name: str
    verbose: bool = False

    class Config:
        arbitrary_types_allowed = True

    @property
    def needs_ndvi(self) -> bool:
        return False

    @abstractmethod
    def super_resolve(self, lr_grid: RasterGrid, ratio: int, ndvi_fine: Optional[RasterGrid] = None) -> RasterGrid:
        """
        Produce a fine grid from a coarse LST grid.

        Args:
            lr_grid (RasterGrid): Coarse, cloud-free LST.
            ratio (int): Integer upsampling ratio.
            ndvi_fine (RasterGrid, optional): Fine NDVI covariate, for methods that use one.

        Returns:
            RasterGrid: Fine LST, `ratio` times larger, at `lr_grid.pixel_size_m / ratio`.
        """

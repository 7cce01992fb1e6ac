import enum

from fractions import Fraction
from pydantic import BaseModel, model_validator
from lstsr.raster.base import Patch, PatchLike, RasterGrid
from lstsr.resample.degrade import norml4_downsample, area_weighted_downsample
from lstsr.resample.interpolate import bicubic_upsample


class ResampleMethod(enum.Enum):
    NORM_L4 = 'norm_l4'
    AREA_WEIGHTED = 'area_weighted'
    BICUBIC_UP = 'bicubic_up'


class ResampleSpec(BaseModel):
    """
    A resampling operator and its scale factor.

    Attributes:
        ratio (float): Scale factor, >= 2. Must be integral for `norm_l4` and `bicubic_up`.
        method (ResampleMethod): Operator to apply.
    """
    ratio: float
    method: ResampleMethod = ResampleMethod.NORM_L4

    @model_validator(mode='after')
    def _check_ratio(self) -> 'ResampleSpec':
        if self.ratio < 2:
            raise ValueError(f'ratio must be >= 2, got {self.ratio}')
        if self.method != ResampleMethod.AREA_WEIGHTED and not float(self.ratio).is_integer():
            raise ValueError(f'{self.method.value} needs an integer ratio, got {self.ratio}')
        return self

    @property
    def upsamples(self) -> bool:
        return self.method == ResampleMethod.BICUBIC_UP

    def apply(self, patch: PatchLike) -> Patch:
        if self.method == ResampleMethod.NORM_L4:
            return norml4_downsample(patch, int(self.ratio))
        if self.method == ResampleMethod.AREA_WEIGHTED:
            return area_weighted_downsample(patch, Fraction(self.ratio).limit_denominator(10 ** 6))
        return bicubic_upsample(patch, int(self.ratio))

    def apply_grid(self, grid: RasterGrid) -> RasterGrid:
        """Resample a nodata-free grid and rescale its pixel size accordingly."""
        out = self.apply(grid.to_patch())
        scale = 1.0 / self.ratio if self.upsamples else self.ratio
        return grid.with_values(out.data, pixel_size_m=grid.pixel_size_m * scale)

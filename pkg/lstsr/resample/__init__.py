from .base import ResampleSpec, ResampleMethod
from .degrade import norml4_downsample, area_weighted_downsample, block_mean, overlap_matrix
from .interpolate import bicubic_upsample, bicubic_matrix, cubic_kernel, make_ilr

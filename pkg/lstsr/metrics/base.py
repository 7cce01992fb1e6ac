import math
import numpy as np

from typing import Tuple
from lstsr.raster.base import PatchLike, as_array
from lstsr.utils.errors import ShapeError

SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(gt: PatchLike, sr: PatchLike) -> Tuple[np.ndarray, np.ndarray]:
    gt, sr = as_array(gt), as_array(sr)
    if gt.shape != sr.shape:
        raise ShapeError(f'ground truth {gt.shape} and prediction {sr.shape} differ in shape')
    if np.isnan(gt).any() or np.isnan(sr).any():
        raise ValueError('metrics need nodata-free images')
    return gt, sr


def mse(gt: PatchLike, sr: PatchLike) -> float:
    gt, sr = _pair(gt, sr)
    return float(np.mean((gt - sr) ** 2))


def rmse(gt: PatchLike, sr: PatchLike) -> float:
    """Root mean squared pixel difference, in the units of the inputs."""
    return math.sqrt(mse(gt, sr))


def dynamic_range(gt: PatchLike) -> float:
    """Highest minus lowest pixel value of an image."""
    data = as_array(gt)
    return float(data.max() - data.min())


def psnr_with_flag(gt: PatchLike, sr: PatchLike) -> Tuple[float, bool]:
    """
    PSNR and a degeneracy flag.

    The flag is set when the ground truth is constant (zero dynamic range) but the prediction differs,
    in which case PSNR is -inf.
    """
    error = rmse(gt, sr)
    if error == 0:
        return math.inf, False
    dr = dynamic_range(gt)
    if dr == 0:
        return -math.inf, True
    return 20.0 * math.log10(dr / error), False


def psnr(gt: PatchLike, sr: PatchLike) -> float:
    """
    Peak signal-to-noise ratio `20 log10(DR_gt / RMSE)`, in decibels.

    The peak is the dynamic range of the ground truth, so the metric is not symmetric.
    Returns +inf for identical images and -inf for a constant ground truth with nonzero error.
    """
    return psnr_with_flag(gt, sr)[0]


def ssim(gt: PatchLike, sr: PatchLike) -> float:
    """
    Structural similarity from whole-image statistics.

    Means, population variances and the covariance are taken over the full image.
    Stabilizers are `c1 = (0.01 DR_gt)^2` and `c2 = (0.03 DR_gt)^2`.
    """
    gt, sr = _pair(gt, sr)
    if np.array_equal(gt, sr):
        return 1.0
    dr = dynamic_range(gt)
    c1 = (SSIM_K1 * dr) ** 2
    c2 = (SSIM_K2 * dr) ** 2
    mu_gt, mu_sr = gt.mean(), sr.mean()
    d_gt, d_sr = gt - mu_gt, sr - mu_sr
    var_gt = np.mean(d_gt * d_gt)
    var_sr = np.mean(d_sr * d_sr)
    cov = np.mean(d_gt * d_sr)
    luminance_num = 2 * mu_gt * mu_sr + c1
    luminance_den = mu_gt ** 2 + mu_sr ** 2 + c1
    structure_num = 2 * cov + c2
    structure_den = var_gt + var_sr + c2
    if structure_den == 0:
        # both images constant and the ground truth has zero range
        return float(luminance_num / luminance_den)
    return float((luminance_num * structure_num) / (luminance_den * structure_den))

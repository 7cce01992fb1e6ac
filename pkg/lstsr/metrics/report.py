import math
import numpy as np
import pandas as pd

from pathlib import Path
from pydantic import BaseModel, model_validator
from typing import List, Optional, Sequence, Tuple, Union
from lstsr.metrics.base import psnr_with_flag, ssim, dynamic_range, mse
from lstsr.raster.base import PatchLike, as_array
from lstsr.utils.internal_data import InternalDataFrame, write_csv
from lstsr.utils.parallel import ordered_map

METRIC_COLUMNS = ['id', 'rmse', 'psnr', 'ssim', 'dr']


class MetricReport(BaseModel):
    """
    Aggregate scores over a set of (ground truth, prediction) pairs.

    PSNR and SSIM are per-image means; RMSE is pooled over all pixels of all images. Infinite per-image
    PSNRs (identical pairs, constant ground truths) are counted rather than averaged.

    Attributes:
        rmse (float): Pooled RMSE, in Kelvin.
        psnr (float): Mean of the finite per-image PSNRs, in decibels; +inf when every pair is identical,
            -inf when no pair has a finite PSNR otherwise.
        ssim (float): Mean per-image SSIM.
        dynamic_range (float): Mean ground-truth dynamic range, in Kelvin.
        n_images (int): Number of scored pairs.
        degenerate (int): Pairs whose PSNR was -inf because the ground truth was constant.
        identical (int): Pairs whose PSNR was +inf because prediction and ground truth agree exactly.
        per_image (InternalDataFrame): One row per pair with columns id, rmse, psnr, ssim, dr.
    """
    rmse: float
    psnr: float
    ssim: float
    dynamic_range: float
    n_images: int
    degenerate: int = 0
    identical: int = 0
    per_image: Optional[InternalDataFrame] = None

    class Config:
        arbitrary_types_allowed = True

    @model_validator(mode='after')
    def _check_invariants(self) -> 'MetricReport':
        if self.rmse < 0:
            raise ValueError(f'rmse must be >= 0, got {self.rmse}')
        if self.ssim > 1 + 1e-9:
            raise ValueError(f'ssim must be <= 1, got {self.ssim}')
        if self.dynamic_range < 0:
            raise ValueError(f'dynamic_range must be >= 0, got {self.dynamic_range}')
        return self

    def summary(self) -> dict:
        return {
            'rmse': self.rmse, 'psnr': self.psnr, 'ssim': self.ssim,
            'dr': self.dynamic_range, 'n_images': self.n_images
        }

    def to_csv(self, path: Union[str, Path]) -> None:
        """Write the per-image table."""
        write_csv(self.per_image, path)

    def __rich__(self) -> str:
        return (
            f'[bold]{self.n_images} images[/bold]: RMSE={self.rmse:.4f} K, '
            f'PSNR={self.psnr:.2f} dB, SSIM={self.ssim:.4f}, DR={self.dynamic_range:.2f} K'
        )


def _score_pair(pair: Tuple[PatchLike, PatchLike]) -> Tuple[float, float, bool, float, float, int]:
    gt, sr = pair
    pair_mse = mse(gt, sr)
    value, degenerate = psnr_with_flag(gt, sr)
    return pair_mse, value, degenerate, ssim(gt, sr), dynamic_range(gt), as_array(gt).size


def _mean_psnr(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    if finite.size:
        return float(finite.mean())
    return math.inf if np.all(values == math.inf) else -math.inf


def evaluate_set(
    pairs: Sequence[Tuple[PatchLike, PatchLike]],
    ids: Optional[Sequence] = None
) -> MetricReport:
    """
    Score every (gt, sr) pair and aggregate.

    Args:
        pairs (Sequence[Tuple[PatchLike, PatchLike]]): Ground truth and prediction, in Kelvin.
        ids (Sequence, optional): Row identifiers for the per-image table. Defaults to 0..n-1.

    Returns:
        MetricReport: Aggregates plus the per-image table.

    Raises:
        ValueError: If `pairs` is empty or `ids` has a different length.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError('evaluate_set needs at least one (gt, sr) pair')
    ids = list(range(len(pairs))) if ids is None else list(ids)
    if len(ids) != len(pairs):
        raise ValueError(f'got {len(ids)} ids for {len(pairs)} pairs')

    scores = ordered_map(_score_pair, pairs)
    squared = np.array([s[0] for s in scores])
    sizes = np.array([s[5] for s in scores])
    per_image = pd.DataFrame({
        'id': ids,
        'rmse': np.sqrt(squared),
        'psnr': [s[1] for s in scores],
        'ssim': [s[3] for s in scores],
        'dr': [s[4] for s in scores],
    }, columns=METRIC_COLUMNS)

    return MetricReport(
        rmse=float(np.sqrt(np.sum(squared * sizes) / np.sum(sizes))),
        psnr=_mean_psnr(per_image['psnr'].to_numpy(dtype=np.float64)),
        ssim=float(per_image['ssim'].mean()),
        dynamic_range=float(per_image['dr'].mean()),
        n_images=len(pairs),
        degenerate=sum(1 for s in scores if s[2]),
        identical=int(np.sum(per_image['psnr'] == math.inf)),
        per_image=per_image
    )


def reports_table(reports: Sequence[Tuple[str, MetricReport]]) -> InternalDataFrame:
    """One row per named report: method, rmse, psnr, ssim, dr, n_images."""
    rows: List[dict] = [{'method': name, **report.summary()} for name, report in reports]
    return pd.DataFrame(rows, columns=['method', 'rmse', 'psnr', 'ssim', 'dr', 'n_images'])

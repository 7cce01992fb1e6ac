import numpy as np
import pandas as pd

from fractions import Fraction
from pathlib import Path
from pydantic import BaseModel
from typing import Dict, List, Optional, Sequence, Union
from lstsr.methods.base import SuperResolutionMethod
from lstsr.methods.baselines import BicubicMethod
from lstsr.metrics.report import MetricReport, evaluate_set
from lstsr.raster.base import GridKind, RasterGrid
from lstsr.resample.degrade import area_weighted_downsample, norml4_downsample
from lstsr.utils.errors import ShapeError
from lstsr.utils.internal_data import InternalDataFrame, write_csv
from lstsr.utils.logs import print_dataframe, print_error, print_text
from lstsr.utils.parallel import ordered_map

BENCHMARK_COLUMNS = ['method', 'rmse', 'psnr', 'ssim', 'dr', 'n_images', 'wins_vs_bicubic', 'bicubic_win_dr']


class BenchmarkResult(BaseModel):
    """
    Method comparison on one set of images.

    Attributes:
        table (InternalDataFrame): One row per method: aggregate rmse / psnr / ssim / dr, n_images,
            wins_vs_bicubic (images where the method's PSNR beats bicubic) and bicubic_win_dr
            (mean ground-truth dynamic range of the images where bicubic wins).
        reports (Dict[str, MetricReport]): Full per-image reports by method name.
    """
    table: InternalDataFrame
    reports: Dict[str, MetricReport]

    class Config:
        arbitrary_types_allowed = True

    def to_csv(self, path: Union[str, Path]) -> None:
        write_csv(self.table, path)


def degrade_grid(gt: RasterGrid, ratio: int) -> RasterGrid:
    """Norm-L4 degradation of a ground-truth grid, pixel size scaled by `ratio`."""
    return RasterGrid.from_array(norml4_downsample(gt.values, ratio).data, pixel_size_m=gt.pixel_size_m * ratio)


def _with_bicubic(methods: Sequence[SuperResolutionMethod]) -> List[SuperResolutionMethod]:
    methods = list(methods)
    if not any(isinstance(m, BicubicMethod) for m in methods):
        methods.insert(0, BicubicMethod())
    return methods


def _compare(
    methods: Sequence[SuperResolutionMethod],
    references: Sequence[RasterGrid],
    inputs: Sequence[RasterGrid],
    ratio: int,
    ndvi_grids: Optional[Sequence[RasterGrid]],
    verbose: bool
) -> BenchmarkResult:
    reports: Dict[str, MetricReport] = {}
    for method in methods:
        if method.needs_ndvi and ndvi_grids is None:
            print_error(f'Skipping "{method.name}": it needs fine NDVI grids and none were given')
            continue
        if verbose:
            print_text(f'Running {method.name} on {len(inputs)} images ...')

        def run(index: int) -> np.ndarray:
            ndvi = ndvi_grids[index] if ndvi_grids is not None else None
            return method.super_resolve(inputs[index], ratio, ndvi).values

        predictions = ordered_map(run, range(len(inputs)))
        reports[method.name] = evaluate_set([(ref.values, pred) for ref, pred in zip(references, predictions)])

    baseline = next(m.name for m in methods if isinstance(m, BicubicMethod))
    base_psnr = reports[baseline].per_image['psnr'].to_numpy()
    dr = reports[baseline].per_image['dr'].to_numpy()
    rows = []
    for name, report in reports.items():
        row = {'method': name, **report.summary(), 'wins_vs_bicubic': 0, 'bicubic_win_dr': np.nan}
        if name != baseline:
            psnr = report.per_image['psnr'].to_numpy()
            bicubic_wins = base_psnr > psnr
            row['wins_vs_bicubic'] = int(np.sum(psnr > base_psnr))
            row['bicubic_win_dr'] = float(dr[bicubic_wins].mean()) if bicubic_wins.any() else np.nan
        rows.append(row)
    table = pd.DataFrame(rows, columns=BENCHMARK_COLUMNS)
    if verbose:
        print_dataframe(table, title='Benchmark')
    return BenchmarkResult(table=table, reports=reports)


def benchmark(
    gt_grids: Sequence[RasterGrid],
    methods: Sequence[SuperResolutionMethod],
    ratio: int = 4,
    ndvi_grids: Optional[Sequence[RasterGrid]] = None,
    verbose: bool = False
) -> BenchmarkResult:
    """
    Degrade every ground truth with Norm-L4, super-resolve it with every method and score in Kelvin.

    Bicubic is always included as the floor baseline. Methods that need NDVI are skipped
    with a warning when `ndvi_grids` is not given.

    Args:
        gt_grids (Sequence[RasterGrid]): Cloud-free ground-truth grids.
        methods (Sequence[SuperResolutionMethod]): Methods to compare.
        ratio (int): Degradation ratio. Defaults to 4.
        ndvi_grids (Sequence[RasterGrid], optional): Fine NDVI aligned with each ground truth.
        verbose (bool): Print progress and the table.

    Returns:
        BenchmarkResult: One table row per method that ran.
    """
    if not gt_grids:
        raise ValueError('benchmark needs at least one ground-truth grid')
    if ndvi_grids is not None and len(ndvi_grids) != len(gt_grids):
        raise ValueError(f'got {len(ndvi_grids)} NDVI grids for {len(gt_grids)} ground truths')
    inputs = [degrade_grid(gt, ratio) for gt in gt_grids]
    return _compare(_with_bicubic(methods), gt_grids, inputs, ratio, ndvi_grids, verbose)


def reference_at(fine_reference: RasterGrid, pixel_size_m: float) -> RasterGrid:
    """Area-weighted aggregation of a finer reference onto a coarser target pixel size."""
    factor = Fraction(pixel_size_m / fine_reference.pixel_size_m).limit_denominator(10 ** 6)
    if factor < 1:
        raise ShapeError(f'reference pixel {fine_reference.pixel_size_m} m is coarser than the target {pixel_size_m} m')
    values = fine_reference.values if factor == 1 else area_weighted_downsample(fine_reference.values, factor).data
    return RasterGrid.from_array(values, pixel_size_m=pixel_size_m, kind=GridKind.LST)


def crossscale_validation(
    methods: Sequence[SuperResolutionMethod],
    coarse_grids: Sequence[RasterGrid],
    fine_references: Sequence[RasterGrid],
    ratio: int,
    ndvi_grids: Optional[Sequence[RasterGrid]] = None,
    verbose: bool = False
) -> BenchmarkResult:
    """
    Score methods applied directly to coarse observations against independent finer references.

    Each reference is aggregated by area weighting to the target pixel size
    (`coarse pixel / ratio`) and must then match the super-resolved shape.
    """
    if len(coarse_grids) != len(fine_references) or not coarse_grids:
        raise ValueError('need one fine reference per coarse grid, and at least one pair')
    references = []
    for coarse, fine in zip(coarse_grids, fine_references):
        reference = reference_at(fine, coarse.pixel_size_m / ratio)
        expected = (coarse.height * ratio, coarse.width * ratio)
        if reference.shape != expected:
            raise ShapeError(f'reference aggregates to {reference.shape}, expected {expected}')
        references.append(reference)
    return _compare(_with_bicubic(methods), references, list(coarse_grids), ratio, ndvi_grids, verbose)

import math
import numpy as np
import pandas as pd
import pytest

from lstsr.metrics import METRIC_COLUMNS, evaluate_set, psnr, psnr_with_flag, reports_table, rmse, ssim
from lstsr.utils.errors import ShapeError
from utils import smooth_field


def test_rmse_basics():
    gt = smooth_field(16)
    assert rmse(gt, gt) == 0.0
    assert rmse(gt, gt + 0.5) == pytest.approx(0.5, abs=1e-12)


def test_rmse_matches_loop_summation():
    rng = np.random.default_rng(0)
    gt, sr = rng.uniform(280, 320, size=(2, 9, 7))
    total = 0.0
    for i in range(gt.shape[0]):
        for j in range(gt.shape[1]):
            total += (gt[i, j] - sr[i, j]) ** 2
    assert rmse(gt, sr) == pytest.approx(math.sqrt(total / gt.size), abs=1e-12)
    assert rmse(gt, sr) == rmse(sr, gt)


def test_metrics_reject_bad_pairs():
    with pytest.raises(ShapeError):
        rmse(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        ssim(np.array([[1.0, float("nan")]]), np.ones((1, 2)))


def test_psnr_values():
    gt = np.array([[300.0, 400.0]])
    # DR 100, RMSE 1
    assert psnr(gt, gt + 1.0) == pytest.approx(40.0, abs=1e-12)
    assert psnr(gt, gt) == math.inf
    assert psnr_with_flag(np.full((2, 2), 300.0), np.full((2, 2), 301.0)) == (-math.inf, True)


def test_psnr_decreases_with_rmse_and_is_asymmetric():
    gt = smooth_field(16, amplitude=10.0)
    values = [psnr(gt, gt + offset) for offset in (0.1, 0.5, 1.0, 2.0)]
    assert values == sorted(values, reverse=True)

    flat = np.full((4, 4), 300.0)
    flat[0, 0] = 301.0
    wide = flat.copy()
    wide[1, 1] = 310.0
    assert psnr(flat, wide) != psnr(wide, flat)


def test_ssim_identity_and_bounds():
    gt = smooth_field(16, amplitude=5.0)
    assert ssim(gt, gt) == pytest.approx(1.0, abs=1e-12)

    flipped = -gt + 2 * gt.mean()
    assert ssim(gt, flipped) < 0

    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rng.uniform(250, 330, size=(2, 8, 8))
        assert abs(ssim(a, b)) <= 1 + 1e-9


def test_ssim_matches_formula():
    rng = np.random.default_rng(2)
    gt = rng.uniform(290, 310, size=(6, 6))
    sr = gt + rng.normal(0, 1, size=(6, 6))
    dr = gt.max() - gt.min()
    c1, c2 = (0.01 * dr) ** 2, (0.03 * dr) ** 2
    cov = np.mean((gt - gt.mean()) * (sr - sr.mean()))
    expected = ((2 * gt.mean() * sr.mean() + c1) * (2 * cov + c2)) / (
        (gt.mean() ** 2 + sr.mean() ** 2 + c1) * (gt.var() + sr.var() + c2))
    assert ssim(gt, sr) == pytest.approx(expected, abs=1e-12)


def _loop_oracles(gt, sr):
    """rmse, psnr and ssim from explicit per-pixel loops."""
    n = gt.size
    values_gt, values_sr = gt.ravel().tolist(), sr.ravel().tolist()
    mu_gt, mu_sr = sum(values_gt) / n, sum(values_sr) / n
    squared = var_gt = var_sr = cov = 0.0
    for a, b in zip(values_gt, values_sr):
        squared += (a - b) ** 2
        var_gt += (a - mu_gt) ** 2
        var_sr += (b - mu_sr) ** 2
        cov += (a - mu_gt) * (b - mu_sr)
    error = math.sqrt(squared / n)
    dr = max(values_gt) - min(values_gt)
    c1, c2 = (0.01 * dr) ** 2, (0.03 * dr) ** 2
    similarity = ((2 * mu_gt * mu_sr + c1) * (2 * cov / n + c2)) / (
        (mu_gt ** 2 + mu_sr ** 2 + c1) * (var_gt / n + var_sr / n + c2))
    return error, 20 * math.log10(dr / error), similarity


def test_metrics_match_loop_oracles_on_random_pairs():
    rng = np.random.default_rng(11)
    for _ in range(100):
        gt = rng.uniform(270, 320, size=(8, 8))
        sr = gt + rng.normal(0, rng.uniform(0.1, 5.0), size=(8, 8))
        expected_rmse, expected_psnr, expected_ssim = _loop_oracles(gt, sr)
        assert rmse(gt, sr) == pytest.approx(expected_rmse, rel=1e-10)
        assert psnr(gt, sr) == pytest.approx(expected_psnr, rel=1e-10)
        assert ssim(gt, sr) == pytest.approx(expected_ssim, rel=1e-10, abs=1e-10)
        assert ssim(gt, gt) == 1.0


def test_evaluate_set_single_identical_pair():
    gt = smooth_field(8)
    report = evaluate_set([(gt, gt)])
    assert report.rmse == 0.0
    assert report.psnr == math.inf
    assert report.ssim == 1.0
    assert report.n_images == 1
    assert list(report.per_image.columns) == METRIC_COLUMNS


def test_evaluate_set_aggregates():
    gt = smooth_field(8, amplitude=10.0)
    report = evaluate_set([(gt, gt + 1.0), (gt, gt + 3.0)], ids=['a', 'b'])
    assert report.n_images == 2
    # equal image sizes: pooled RMSE is the root of the mean MSE
    assert report.rmse == pytest.approx(math.sqrt((1.0 + 9.0) / 2), abs=1e-12)
    assert report.psnr == pytest.approx((psnr(gt, gt + 1.0) + psnr(gt, gt + 3.0)) / 2, abs=1e-12)
    assert report.ssim == pytest.approx((ssim(gt, gt + 1.0) + ssim(gt, gt + 3.0)) / 2, abs=1e-12)
    assert report.per_image['id'].tolist() == ['a', 'b']

    with pytest.raises(ValueError):
        evaluate_set([])
    with pytest.raises(ValueError):
        evaluate_set([(gt, gt)], ids=['a', 'b'])


def test_evaluate_set_counts_degenerate_pairs():
    flat = np.full((4, 4), 300.0)
    gt = smooth_field(4)
    report = evaluate_set([(flat, flat + 1.0), (gt, gt + 0.1)])
    assert report.degenerate == 1 and report.identical == 0
    assert report.psnr == pytest.approx(psnr(gt, gt + 0.1), abs=1e-12)

    assert evaluate_set([(flat, flat + 1.0)]).psnr == -math.inf


@pytest.mark.parametrize("extra", [
    [],
    ["identical"],
    ["identical", "degenerate"],
])
def test_evaluate_set_averages_finite_psnr_only(extra):
    gt = smooth_field(8, amplitude=10.0)
    flat = np.full((8, 8), 300.0)
    pairs = [(gt, gt + 1.0), (gt, gt + 2.0)]
    pairs += [(gt, gt) if kind == "identical" else (flat, flat + 1.0) for kind in extra]
    report = evaluate_set(pairs)
    assert np.isfinite(report.psnr)
    assert report.psnr == pytest.approx((psnr(gt, gt + 1.0) + psnr(gt, gt + 2.0)) / 2, abs=1e-12)
    assert report.identical == extra.count("identical")
    assert report.degenerate == extra.count("degenerate")


def test_evaluate_set_without_finite_psnr():
    gt = smooth_field(8)
    flat = np.full((8, 8), 300.0)
    assert evaluate_set([(gt, gt), (gt, gt)]).psnr == math.inf
    mixed = evaluate_set([(gt, gt), (flat, flat + 1.0)])
    assert mixed.psnr == -math.inf
    assert mixed.identical == 1 and mixed.degenerate == 1


def test_report_csv_and_table(tmp_path):
    gt = smooth_field(8)
    report = evaluate_set([(gt, gt + 0.5)], ids=['scene'])
    report.to_csv(tmp_path / 'report.csv')
    frame = pd.read_csv(tmp_path / 'report.csv')
    assert list(frame.columns) == METRIC_COLUMNS
    assert frame['rmse'][0] == pytest.approx(0.5)

    table = reports_table([('bicubic', report), ('mrunet', report)])
    assert table['method'].tolist() == ['bicubic', 'mrunet']
    assert list(table.columns) == ['method', 'rmse', 'psnr', 'ssim', 'dr', 'n_images']

from .base import rmse, psnr, psnr_with_flag, ssim, mse, dynamic_range
from .report import MetricReport, evaluate_set, reports_table, METRIC_COLUMNS

from .benchmark import (
    BenchmarkResult, benchmark, crossscale_validation, degrade_grid, reference_at, BENCHMARK_COLUMNS
)

"""Benchmark harness: data handling, metrics, grid search, orchestration, CLI."""

from .config import BenchConfig, DatasetSpec, load_config
from .data import Dataset, SplitPlan, load_csv, sample_and_split
from .metrics import ImprovementRecord, bootstrap_ci, improvement, rmse
from .runner import run_benchmark
from .search import grid_search

__all__ = [
    "BenchConfig",
    "Dataset",
    "DatasetSpec",
    "ImprovementRecord",
    "SplitPlan",
    "bootstrap_ci",
    "grid_search",
    "improvement",
    "load_config",
    "load_csv",
    "rmse",
    "run_benchmark",
    "sample_and_split",
]

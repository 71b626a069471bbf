"""RMSE, percentile-bootstrap confidence intervals and fusion improvement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rmse(y, y_hat) -> float:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
    if y.size != y_hat.size:
        raise ValueError(f"length mismatch: {y.size} vs {y_hat.size}")
    if y.size == 0:
        raise ValueError("rmse of empty arrays")
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def bootstrap_ci(y, y_hat, n_boot: int = 1000, seed: int = 0, level: float = 0.95):
    """Percentile bootstrap interval for RMSE over resampled (y, y_hat) pairs.

    Percentiles use linear interpolation.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
    n = y.size
    if n < 2 or y_hat.size != n:
        raise ValueError("need n >= 2 paired values")
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    sq = (y - y_hat) ** 2
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_boot, n))
    stats = np.sqrt(sq[idx].mean(axis=1))
    tail = 100 * (1 - level) / 2
    lo, hi = np.percentile(stats, [tail, 100 - tail])
    return float(lo), float(hi)


@dataclass(frozen=True)
class ImprovementRecord:
    gnn: str
    hybrid: str
    rmse_gnn: float
    rmse_hybrid: float
    delta_rmse: float
    pct_improvement: float


def improvement(rmse_gnn: float, rmse_hybrid: float, gnn="gnn", hybrid="gnn+fp") -> ImprovementRecord:
    """Absolute and percentage RMSE reduction of the fusion model over the plain GNN."""
    if not (np.isfinite(rmse_gnn) and np.isfinite(rmse_hybrid)):
        raise ValueError("RMSE values must be finite")
    if rmse_gnn <= 0:
        raise ValueError("rmse_gnn must be positive")
    delta = rmse_gnn - rmse_hybrid
    return ImprovementRecord(gnn, hybrid, rmse_gnn, rmse_hybrid, delta, delta / rmse_gnn * 100.0)

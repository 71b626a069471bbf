"""Hyperparameter grid search on an inner train/validation split."""

from __future__ import annotations

import itertools
import logging
from dataclasses import replace

import numpy as np

from ..models import ModelConfig, TrainingDiverged, train
from .data import round_half_up
from .metrics import rmse

log = logging.getLogger(__name__)


class GridSearchError(RuntimeError):
    pass


def expand_grid(grid) -> list[dict]:
    """A dict of lists becomes its Cartesian product (first key outermost); a list passes through."""
    if isinstance(grid, dict):
        keys = list(grid)
        return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]
    return [dict(p) for p in grid]


def inner_split(n: int, seed: int, fraction: float = 0.8):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    cut = round_half_up(fraction * n)
    if cut == n:
        cut = n - 1
    return perm[:cut], perm[cut:]


def grid_search(base: ModelConfig, graphs, targets, grid, fingerprints=None, seed=None):
    """Pick the grid point with the lowest inner-validation RMSE.

    The training data is re-split 80/20 with ``seed`` (default
    ``base.seed``). Points whose training diverges are skipped; ties keep
    the earliest point. Returns ``(best_config, [(point, rmse_or_None), ...])``.
    """
    points = expand_grid(grid)
    if not points:
        raise GridSearchError("empty grid")
    graphs = list(graphs)
    y = np.asarray(targets, dtype=np.float64)
    fps = None if fingerprints is None else np.asarray(fingerprints)
    tr, va = inner_split(len(graphs), base.seed if seed is None else seed)
    g_tr = [graphs[i] for i in tr]
    g_va = [graphs[i] for i in va]
    f_tr = None if fps is None else fps[tr]
    f_va = None if fps is None else fps[va]
    results = []
    best, best_score = None, np.inf
    for point in points:
        cfg = replace(base, **point)
        try:
            model = train(cfg, g_tr, y[tr], f_tr)
            pred = model.predict(g_va, f_va)
        except TrainingDiverged as exc:
            log.info("%s %s diverged: %s", cfg.name, point, exc)
            results.append((point, None))
            continue
        score = rmse(y[va], pred) if np.all(np.isfinite(pred)) else np.nan
        if not np.isfinite(score):
            results.append((point, None))
            continue
        results.append((point, score))
        if score < best_score:
            best, best_score = cfg, score
    if best is None:
        raise GridSearchError(f"all {len(points)} grid points diverged for {base.name}")
    return best, results

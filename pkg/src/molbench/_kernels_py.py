"""Pure-numpy versions of the compiled kernels.

Every function here accumulates in the same order as its Cython twin, so
the two backends return bit-identical results.
"""

import numpy as np


def scatter_add_rows(values, index, n_out):
    """``out[index[k]] += values[k]`` for k in order."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    out = np.zeros((n_out, values.shape[1]), dtype=np.float64)
    np.add.at(out, np.asarray(index, dtype=np.int64), values)
    return out


def segment_max(values, index, n_out):
    """Column-wise maximum of ``values`` rows per segment; ``-inf`` for empty segments."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    out = np.full((n_out, values.shape[1]), -np.inf)
    np.maximum.at(out, np.asarray(index, dtype=np.int64), values)
    return out


def best_split(X, y, rows, features, min_leaf):
    """Best variance-reduction split of ``rows`` over candidate ``features``.

    Returns ``(feature, threshold, score)`` maximizing
    ``S_L**2 / n_L + S_R**2 / n_R``; feature is -1 when no split satisfies
    ``min_leaf``. Ties resolve to the earliest feature, then lowest threshold.
    """
    rows = np.asarray(rows, dtype=np.int64)
    features = np.asarray(features, dtype=np.int64)
    n = rows.size
    if n < 2 * min_leaf or features.size == 0:
        return -1, 0.0, -np.inf
    xs = X[np.ix_(rows, features)]
    order = np.argsort(xs, axis=0, kind="stable")
    xs_sorted = np.take_along_axis(xs, order, axis=0)
    ys = y[rows][order]
    csum = np.cumsum(ys, axis=0)
    total = csum[-1]
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    left = csum[:-1]
    right = total - left
    score = left * left / n_left + right * right / (n - n_left)
    valid = xs_sorted[:-1] < xs_sorted[1:]
    pos = np.arange(1, n)
    valid &= ((pos >= min_leaf) & (n - pos >= min_leaf))[:, None]
    if not valid.any():
        return -1, 0.0, -np.inf
    score = np.where(valid, score, -np.inf).T  # feature-major for tie-breaking
    flat = int(np.argmax(score))
    k, i = divmod(flat, n - 1)
    threshold = 0.5 * (xs_sorted[i, k] + xs_sorted[i + 1, k])
    return int(features[k]), float(threshold), float(score[k, i])

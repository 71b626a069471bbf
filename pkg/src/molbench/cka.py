"""Centered Kernel Alignment with an RBF kernel and a median bandwidth.

Two bandwidth conventions are supported:

``median_sq`` (default)
    sigma is the median of pairwise squared distances, used as
    ``exp(-d2 / (2 sigma^2))``.
``sqrt_median``
    sigma is the square root of that median, i.e. the usual median
    heuristic ``exp(-d2 / (2 median(d2)))``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

SIGMA_CONVENTIONS = ("median_sq", "sqrt_median")


class DegenerateRepresentation(ValueError):
    pass


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    sigma: float


@dataclass(frozen=True)
class CkaScore:
    value: float
    n_samples: int

    def __float__(self):
        return self.value


def _as_samples(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"expected an (n, d) matrix, got shape {X.shape}")
    return X


def median_sq_dist(X) -> float:
    """Median off-diagonal squared Euclidean distance; 1.0 if all points coincide."""
    X = _as_samples(X)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    med = float(np.median(pdist(X, "sqeuclidean")))
    return med if med > 0 else 1.0


def rbf_gram(X, sigma_convention: str = "median_sq") -> GramMatrix:
    X = _as_samples(X)
    if sigma_convention not in SIGMA_CONVENTIONS:
        raise ValueError(f"sigma_convention must be one of {SIGMA_CONVENTIONS}")
    med = median_sq_dist(X)
    sigma = med if sigma_convention == "median_sq" else float(np.sqrt(med))
    d2 = squareform(pdist(X, "sqeuclidean"))
    return GramMatrix(np.exp(-d2 / (2.0 * sigma * sigma)), sigma)


def center_gram(K) -> np.ndarray:
    """``H K H`` with ``H = I - 11'/n``, computed by double mean subtraction."""
    K = np.asarray(K, dtype=np.float64)
    Kc = K - K.mean(axis=0, keepdims=True)
    return Kc - Kc.mean(axis=1, keepdims=True)


def hsic(Kc, Lc) -> float:
    """Biased HSIC of two already-centered Gram matrices."""
    n = Kc.shape[0]
    return float(np.sum(Kc * Lc)) / (n - 1) ** 2


def cka(X, Y, sigma_convention: str = "median_sq") -> CkaScore:
    X, Y = _as_samples(X), _as_samples(Y)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"row counts differ: {X.shape[0]} vs {Y.shape[0]}")
    n = X.shape[0]
    if n < 3:
        raise ValueError("need at least 3 samples")
    Kc = center_gram(rbf_gram(X, sigma_convention).values)
    Lc = center_gram(rbf_gram(Y, sigma_convention).values)
    kk, ll = hsic(Kc, Kc), hsic(Lc, Lc)
    if kk <= 0 or ll <= 0:
        raise DegenerateRepresentation("degenerate representation: constant embedding")
    return CkaScore(hsic(Kc, Lc) / np.sqrt(kk * ll), n)


def cka_matrix(embeddings: dict, sigma_convention: str = "median_sq") -> tuple[list, np.ndarray]:
    """Pairwise CKA for named embeddings; unit diagonal, NaN where degenerate."""
    names = list(embeddings)
    m = len(names)
    grams = {}
    for name in names:
        try:
            Kc = center_gram(rbf_gram(embeddings[name], sigma_convention).values)
        except ValueError:
            Kc = None
        grams[name] = Kc if Kc is not None and hsic(Kc, Kc) > 0 else None
    out = np.full((m, m), np.nan)
    for i, a in enumerate(names):
        for j in range(i, m):
            b = names[j]
            Ka, Kb = grams[a], grams[b]
            if Ka is None or Kb is None:
                continue
            value = 1.0 if i == j else hsic(Ka, Kb) / np.sqrt(hsic(Ka, Ka) * hsic(Kb, Kb))
            out[i, j] = out[j, i] = value
    return names, out


def write_matrix_csv(path, row_labels, col_labels, matrix, corner="") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([corner, *col_labels])
        for label, row in zip(row_labels, matrix):
            w.writerow([label, *(format_float(v) for v in row)])


def format_float(v) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    return f"{float(v):.6g}"

"""Regressors: single-layer GNN, GNN+fingerprint fusion, ridge and random forest.

GNN path::

    conv(6 -> h) -> ReLU -> mean pool -> Linear(h, h) -> ReLU -> Linear(h, 1)

Hybrid path adds a fingerprint branch ``Linear(fp_bits, h) -> ReLU`` and
concatenates it with the pooled graph embedding before the head, whose
first layer then maps ``2h -> h``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import ad, kernels
from .ad import Tensor
from .gnn import LAYER_KINDS, BatchedGraphs, apply_conv, global_mean_pool, init_conv
from .graphrep import N_FEATURES, FeatureStats

GNN_MODELS = LAYER_KINDS
HYBRID_MODELS = tuple(f"{k}+fp" for k in LAYER_KINDS)
BASELINE_MODELS = ("linreg", "rf")
ABSENT_MODELS = ("svm", "xgboost")
MODEL_NAMES = BASELINE_MODELS + GNN_MODELS + HYBRID_MODELS


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite training loss {loss} at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class ModelConfig:
    layer_kind: str
    hidden_dim: int = 64
    lr: float = 1e-3
    epochs: int = 100
    seed: int = 0
    use_fingerprint: bool = False
    fp_bits: int = 1024
    normalize_features: bool = True
    sage_l2_norm: bool = False
    standardize_targets: bool = True

    def __post_init__(self):
        if self.layer_kind not in LAYER_KINDS:
            raise ValueError(f"layer_kind must be one of {LAYER_KINDS}, got {self.layer_kind!r}")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    @property
    def name(self) -> str:
        return self.layer_kind + ("+fp" if self.use_fingerprint else "")

    @classmethod
    def from_name(cls, name: str, **kw) -> "ModelConfig":
        kind, _, suffix = name.lower().partition("+")
        if suffix not in ("", "fp"):
            raise ValueError(f"unknown model {name!r}")
        return cls(layer_kind=kind, use_fingerprint=suffix == "fp", **kw)


def init_params(config: ModelConfig) -> dict[str, Tensor]:
    """Glorot-uniform weights and zero biases, drawn in a fixed order from ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    h = config.hidden_dim
    raw = init_conv(config.layer_kind, N_FEATURES, h, rng)
    head_in = h
    if config.use_fingerprint:
        raw["fp.W"] = ad.glorot_uniform(rng, config.fp_bits, h)
        raw["fp.b"] = np.zeros((1, h))
        head_in = 2 * h
    raw["head.W1"] = ad.glorot_uniform(rng, head_in, h)
    raw["head.b1"] = np.zeros((1, h))
    raw["head.W2"] = ad.glorot_uniform(rng, h, 1)
    raw["head.b2"] = np.zeros((1, 1))
    return {k: Tensor(v, requires_grad=True) for k, v in raw.items()}


def graph_embedding(config: ModelConfig, params, batch: BatchedGraphs) -> Tensor:
    h = ad.relu(apply_conv(config.layer_kind, batch, params, sage_l2_norm=config.sage_l2_norm))
    return global_mean_pool(h, batch)


def _head(params, z):
    h = ad.relu(ad.add_row_broadcast(ad.matmul(z, params["head.W1"]), params["head.b1"]))
    return ad.add_row_broadcast(ad.matmul(h, params["head.W2"]), params["head.b2"])


def gnn_forward(config: ModelConfig, params, batch: BatchedGraphs):
    """Return ``(predictions (n x 1), pooled embedding (n x h))``."""
    pooled = graph_embedding(config, params, batch)
    return _head(params, pooled), pooled


def hybrid_forward(config: ModelConfig, params, batch: BatchedGraphs, fingerprints):
    """Return ``(predictions (n x 1), fused embedding (n x 2h))``."""
    fps = np.asarray(fingerprints, dtype=np.float64)
    if fps.shape != (batch.n_graphs, config.fp_bits):
        raise ValueError(
            f"fingerprints must be ({batch.n_graphs}, {config.fp_bits}), got {fps.shape}"
        )
    pooled = graph_embedding(config, params, batch)
    fp_emb = ad.relu(ad.add_row_broadcast(ad.matmul(fps, params["fp.W"]), params["fp.b"]))
    fused = ad.concat_cols(pooled, fp_emb)
    return _head(params, fused), fused


def forward(config: ModelConfig, params, batch, fingerprints=None):
    if config.use_fingerprint:
        if fingerprints is None:
            raise ValueError(f"{config.name} needs fingerprints")
        return hybrid_forward(config, params, batch, fingerprints)
    return gnn_forward(config, params, batch)


@dataclass
class TrainedModel:
    config: ModelConfig
    parameters: dict[str, np.ndarray]
    feature_stats: FeatureStats
    train_loss_curve: list[float] = field(default_factory=list)
    target_mean: float = 0.0
    target_scale: float = 1.0

    def _batch(self, graphs):
        graphs = list(graphs)
        x = np.concatenate([g.features for g in graphs])
        return BatchedGraphs.from_graphs(graphs, features=self.feature_stats.transform(x))

    def _run(self, graphs, fingerprints):
        params = {k: Tensor(v) for k, v in self.parameters.items()}
        return forward(self.config, params, self._batch(graphs), fingerprints)

    def predict(self, graphs, fingerprints=None) -> np.ndarray:
        pred, _ = self._run(graphs, fingerprints)
        return pred.value[:, 0] * self.target_scale + self.target_mean

    def embed(self, graphs, fingerprints=None) -> np.ndarray:
        """Pooled (GNN) or concatenated (hybrid) embedding, one row per graph."""
        _, emb = self._run(graphs, fingerprints)
        return emb.value.copy()

    def graph_embedding(self, graphs) -> np.ndarray:
        """Post-pooling graph-branch embedding, available for both families."""
        params = {k: Tensor(v) for k, v in self.parameters.items()}
        return graph_embedding(self.config, params, self._batch(graphs)).value.copy()


def train(config: ModelConfig, graphs, targets, fingerprints=None) -> TrainedModel:
    """Full-batch Adam on MSE for ``config.epochs`` epochs.

    The recorded loss of an epoch is the loss before that epoch's update,
    in standardized target units when ``config.standardize_targets``.
    Raises :class:`TrainingDiverged` on a non-finite loss.
    """
    graphs = list(graphs)
    y = np.asarray(targets, dtype=np.float64).reshape(-1, 1)
    if not graphs:
        raise ValueError("empty training set")
    if y.shape[0] != len(graphs):
        raise ValueError("one target per graph required")
    mu, scale = 0.0, 1.0
    if config.standardize_targets:
        mu = float(y.mean())
        sd = float(y.std())
        scale = sd if sd > 1e-12 else 1.0
    stats = FeatureStats.fit(graphs) if config.normalize_features else FeatureStats.identity()
    x = np.concatenate([g.features for g in graphs])
    batch = BatchedGraphs.from_graphs(graphs, features=stats.transform(x))
    params = init_params(config)
    opt = ad.Adam(list(params.values()), lr=config.lr)
    target = Tensor((y - mu) / scale)
    curve = []
    for epoch in range(config.epochs):
        opt.zero_grad()
        pred, _ = forward(config, params, batch, fingerprints)
        loss = ad.mse(pred, target)
        value = float(loss.value[0, 0])
        if not np.isfinite(value):
            raise TrainingDiverged(epoch, value)
        curve.append(value)
        ad.backward(loss)
        opt.step()
    final = {k: p.value.copy() for k, p in params.items()}
    if not all(np.all(np.isfinite(v)) for v in final.values()):
        raise TrainingDiverged(config.epochs, float("nan"))
    return TrainedModel(config, final, stats, curve, mu, scale)


# --------------------------------------------------------------------------
# linear baseline


class SingularSystemError(np.linalg.LinAlgError):
    pass


@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float
    ridge: float


def linreg_fit(X, y, ridge: float = 1e-6) -> LinearModel:
    """Least squares with an unpenalized intercept and an L2 penalty ``ridge``.

    Solved in closed form on centered data, which is the same as solving
    ``(X'X + ridge I) w = X'y`` with an intercept column that is left out
    of the penalty.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or y.size == 0:
        raise ValueError("X must be (n, p) with n = len(y) >= 1")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    A = Xc.T @ Xc + ridge * np.eye(X.shape[1])
    if ridge == 0 and np.linalg.matrix_rank(A) < X.shape[1]:
        raise SingularSystemError("normal equations are singular; use ridge > 0")
    w = np.linalg.solve(A, Xc.T @ (y - y_mean))
    return LinearModel(w, float(y_mean - x_mean @ w), ridge)


def linreg_predict(model: LinearModel, X) -> np.ndarray:
    return np.asarray(X, dtype=np.float64) @ model.weights + model.intercept


# --------------------------------------------------------------------------
# random forest baseline


@dataclass
class Tree:
    """Flat binary tree; ``feature == -1`` marks a leaf. Rows with x <= threshold go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.value[node]


def fit_tree(X, y, rows, rng, max_depth=None, min_leaf=1, max_features=None) -> Tree:
    """CART regression tree grown on ``rows`` (may contain repeats).

    At each node, features are drawn without replacement in chunks of
    ``max_features`` until one yields a valid split.
    """
    n_features = X.shape[1]
    k = n_features if max_features is None else max(1, min(max_features, n_features))
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(r):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(np.mean(y[r])))
        return len(feature) - 1

    root = new_node(rows)
    stack = [(root, np.asarray(rows, dtype=np.int64), 0)]
    while stack:
        node, r, depth = stack.pop()
        if (max_depth is not None and depth >= max_depth) or r.size < 2 * min_leaf:
            continue
        yr = y[r]
        if np.all(yr == yr[0]):
            continue
        parent = yr.sum() ** 2 / r.size
        order = rng.permutation(n_features)
        f = -1
        for start in range(0, n_features, k):
            f, thr, score = kernels.best_split(X, y, r, order[start : start + k], min_leaf)
            if f >= 0:
                break
        if f < 0 or score - parent <= 1e-12 * max(1.0, abs(parent)):
            continue
        mask = X[r, f] <= thr
        lr, rr = r[mask], r[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(lr)
        right[node] = new_node(rr)
        stack.append((right[node], rr, depth + 1))
        stack.append((left[node], lr, depth + 1))
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
    )


@dataclass
class RandomForest:
    trees: list[Tree]
    params: dict


def rf_fit(
    X,
    y,
    n_trees: int = 100,
    max_depth: int | None = None,
    min_leaf: int = 1,
    seed: int = 0,
    max_features: int | None = -1,
    bootstrap: bool = True,
) -> RandomForest:
    """Bagged CART regression trees.

    ``max_features=-1`` means ``floor(sqrt(p))`` (32 for 1024-bit
    fingerprints); ``None`` means all features. Tree ``i`` draws from the
    seed ``seed + i``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n, p = X.shape
    if n < 1 or y.size != n:
        raise ValueError("X must be (n, p) with n = len(y) >= 1")
    mf = int(np.sqrt(p)) if max_features == -1 else max_features
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng(seed + i)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(fit_tree(X, y, rows, rng, max_depth, min_leaf, mf))
    params = dict(
        n_trees=n_trees,
        max_depth=max_depth,
        min_leaf=min_leaf,
        seed=seed,
        max_features=mf,
        bootstrap=bootstrap,
    )
    return RandomForest(trees, params)


def rf_predict(model: RandomForest, X) -> np.ndarray:
    return np.mean([t.predict(X) for t in model.trees], axis=0)


# --------------------------------------------------------------------------
# serialization


def save_model(path, model) -> None:
    """Write any trained model to a single ``.npz`` file (exact round trip)."""
    arrays: dict[str, np.ndarray] = {}
    if isinstance(model, TrainedModel):
        meta = {"kind": "gnn", "config": asdict(model.config)}
        for k, v in model.parameters.items():
            arrays[f"param/{k}"] = v
        arrays["stats/mean"] = model.feature_stats.mean
        arrays["stats/std"] = model.feature_stats.std
        arrays["loss_curve"] = np.asarray(model.train_loss_curve, dtype=np.float64)
        arrays["target"] = np.array([model.target_mean, model.target_scale])
    elif isinstance(model, LinearModel):
        meta = {"kind": "linreg", "ridge": model.ridge}
        arrays["weights"] = model.weights
        arrays["intercept"] = np.array([model.intercept])
    elif isinstance(model, RandomForest):
        meta = {"kind": "rf", "params": model.params, "n_trees": len(model.trees)}
        for i, t in enumerate(model.trees):
            for name in ("feature", "threshold", "left", "right", "value"):
                arrays[f"tree{i}/{name}"] = getattr(t, name)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    arrays["meta"] = np.array(json.dumps(meta, sort_keys=True))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path):
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        kind = meta["kind"]
        if kind == "gnn":
            config = ModelConfig(**meta["config"])
            params = {k[len("param/") :]: data[k] for k in data.files if k.startswith("param/")}
            stats = FeatureStats(data["stats/mean"], data["stats/std"])
            mu, scale = data["target"]
            return TrainedModel(config, params, stats, data["loss_curve"].tolist(), float(mu), float(scale))
        if kind == "linreg":
            return LinearModel(data["weights"], float(data["intercept"][0]), meta["ridge"])
        if kind == "rf":
            trees = [
                Tree(*(data[f"tree{i}/{n}"] for n in ("feature", "threshold", "left", "right", "value")))
                for i in range(meta["n_trees"])
            ]
            return RandomForest(trees, meta["params"])
    raise ValueError(f"unknown model kind {kind!r}")

"""Single-layer graph convolutions (GCN, GAT, GIN, GraphSAGE) and mean pooling.

All layers work on a :class:`BatchedGraphs`, a disjoint union of molecule
graphs. Neighbor aggregation is expressed with gather/scatter over a
directed edge list, never a dense adjacency matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ad
from .ad import Tensor


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BatchedGraphs:
    """Disjoint union of graphs.

    ``src``/``dst`` hold each undirected edge in both directions, sorted by
    target then source. ``loop_src``/``loop_dst`` are the same list with one
    self-loop per node added (still sorted by target).
    """

    features: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    graph_ids: np.ndarray
    n_graphs: int

    def __post_init__(self):
        x = _frozen(self.features, np.float64)
        src = np.asarray(self.src, dtype=np.int64)
        dst = np.asarray(self.dst, dtype=np.int64)
        gid = _frozen(self.graph_ids, np.int64)
        n = x.shape[0]
        if gid.shape != (n,):
            raise ValueError("graph_ids must have one entry per node")
        if n and (np.any(np.diff(gid) < 0) or gid[0] < 0 or gid[-1] >= self.n_graphs):
            raise ValueError("graph_ids must be non-decreasing in [0, n_graphs)")
        if np.any(np.bincount(gid, minlength=self.n_graphs) == 0):
            raise ValueError("every graph needs at least one node")
        if src.shape != dst.shape:
            raise ValueError("src and dst must have the same length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError("edge endpoints out of range")
        pairs = set(zip(src.tolist(), dst.tolist()))
        if any((v, u) not in pairs for u, v in pairs):
            raise ValueError("edge list must contain both directions of every edge")
        order = np.lexsort((src, dst))
        src, dst = src[order], dst[order]
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "src", _frozen(src, np.int64))
        object.__setattr__(self, "dst", _frozen(dst, np.int64))
        object.__setattr__(self, "graph_ids", gid)

        deg = np.bincount(dst, minlength=n).astype(np.float64)
        loops = np.arange(n, dtype=np.int64)
        lsrc = np.concatenate([src, loops])
        ldst = np.concatenate([dst, loops])
        lorder = np.lexsort((lsrc, ldst))
        lsrc, ldst = lsrc[lorder], ldst[lorder]
        dhat = deg + 1.0
        object.__setattr__(self, "degree", _frozen(deg, np.float64))
        object.__setattr__(self, "loop_src", _frozen(lsrc, np.int64))
        object.__setattr__(self, "loop_dst", _frozen(ldst, np.int64))
        object.__setattr__(
            self, "gcn_norm", _frozen((1.0 / np.sqrt(dhat[lsrc] * dhat[ldst]))[:, None], np.float64)
        )
        inv = np.zeros(n)
        np.divide(1.0, deg, out=inv, where=deg > 0)
        object.__setattr__(self, "inv_degree", _frozen(inv[:, None], np.float64))

    @property
    def n_nodes(self) -> int:
        return self.features.shape[0]

    @classmethod
    def from_graphs(cls, graphs, features=None) -> "BatchedGraphs":
        """Batch :class:`~molbench.graphrep.MolGraph` objects.

        ``features`` optionally replaces the stacked node features (e.g.
        normalized ones) and must have the same row count.
        """
        graphs = list(graphs)
        if not graphs:
            raise ValueError("empty batch")
        offsets = np.cumsum([0] + [g.n_nodes for g in graphs])
        src, dst = [], []
        for g, off in zip(graphs, offsets):
            if len(g.edges):
                e = g.edges + off
                src.extend([e[:, 0], e[:, 1]])
                dst.extend([e[:, 1], e[:, 0]])
        src = np.concatenate(src) if src else np.zeros(0, np.int64)
        dst = np.concatenate(dst) if dst else np.zeros(0, np.int64)
        gid = np.repeat(np.arange(len(graphs)), [g.n_nodes for g in graphs])
        x = np.concatenate([g.features for g in graphs]) if features is None else features
        return cls(x, src, dst, gid, len(graphs))


def _input(batch, x):
    return Tensor(batch.features) if x is None else ad.as_tensor(x)


def gcn_layer(batch: BatchedGraphs, W, x=None) -> Tensor:
    """Symmetric-normalized propagation with self-loops: D^-1/2 (A+I) D^-1/2 X W."""
    xw = ad.matmul(_input(batch, x), W)
    msgs = ad.mul_rows(ad.gather_rows(xw, batch.loop_src), batch.gcn_norm)
    return ad.scatter_sum(msgs, batch.loop_dst, batch.n_nodes)


def gat_attention(batch: BatchedGraphs, W, a, x=None, slope=0.2):
    """Return ``(Wx, alpha)``; alpha is one weight per self-looped edge."""
    wx = ad.matmul(_input(batch, x), W)
    pair = ad.concat_cols(ad.gather_rows(wx, batch.loop_src), ad.gather_rows(wx, batch.loop_dst))
    scores = ad.leaky_relu(ad.matmul(pair, a), slope)
    return wx, ad.segment_softmax(scores, batch.loop_dst, batch.n_nodes)


def gat_layer(batch: BatchedGraphs, W, a, x=None, slope=0.2) -> Tensor:
    """Single-head attention over neighbors plus self."""
    wx, alpha = gat_attention(batch, W, a, x, slope)
    msgs = ad.mul_rows(ad.gather_rows(wx, batch.loop_src), alpha)
    return ad.scatter_sum(msgs, batch.loop_dst, batch.n_nodes)


def gin_layer(batch: BatchedGraphs, mlp, x=None) -> Tensor:
    """``MLP(x_v + sum of neighbors)`` with epsilon fixed at 0.

    ``mlp`` is ``(W1, b1, W2, b2)``: linear -> ReLU -> linear.
    """
    W1, b1, W2, b2 = mlp
    x = _input(batch, x)
    agg = ad.add(x, ad.scatter_sum(ad.gather_rows(x, batch.src), batch.dst, batch.n_nodes))
    h = ad.relu(ad.add_row_broadcast(ad.matmul(agg, W1), b1))
    return ad.add_row_broadcast(ad.matmul(h, W2), b2)


def sage_layer(batch: BatchedGraphs, W_self, W_neigh, x=None, l2_norm=False) -> Tensor:
    """``W_self x_v + W_neigh mean(neighbors)``; isolated nodes get no neighbor term."""
    x = _input(batch, x)
    summed = ad.scatter_sum(ad.gather_rows(x, batch.src), batch.dst, batch.n_nodes)
    neigh = ad.mul_rows(summed, batch.inv_degree)
    out = ad.add(ad.matmul(x, W_self), ad.matmul(neigh, W_neigh))
    return ad.l2_normalize_rows(out) if l2_norm else out


def global_mean_pool(h, batch: BatchedGraphs) -> Tensor:
    return ad.segment_mean(h, batch.graph_ids, batch.n_graphs)


# --------------------------------------------------------------------------
# layer registry used by the models


def init_conv(kind: str, d_in: int, d_out: int, rng: np.random.Generator) -> dict:
    g = ad.glorot_uniform
    if kind == "gcn":
        return {"conv.W": g(rng, d_in, d_out)}
    if kind == "gat":
        return {"conv.W": g(rng, d_in, d_out), "conv.a": g(rng, 2 * d_out, 1)}
    if kind == "gin":
        return {
            "conv.W1": g(rng, d_in, d_out),
            "conv.b1": np.zeros((1, d_out)),
            "conv.W2": g(rng, d_out, d_out),
            "conv.b2": np.zeros((1, d_out)),
        }
    if kind == "sage":
        return {"conv.W_self": g(rng, d_in, d_out), "conv.W_neigh": g(rng, d_in, d_out)}
    raise ValueError(f"unknown layer kind {kind!r}")


def apply_conv(kind: str, batch: BatchedGraphs, params: dict, x=None, sage_l2_norm=False) -> Tensor:
    if kind == "gcn":
        return gcn_layer(batch, params["conv.W"], x)
    if kind == "gat":
        return gat_layer(batch, params["conv.W"], params["conv.a"], x)
    if kind == "gin":
        mlp = tuple(params[k] for k in ("conv.W1", "conv.b1", "conv.W2", "conv.b2"))
        return gin_layer(batch, mlp, x)
    if kind == "sage":
        return sage_layer(batch, params["conv.W_self"], params["conv.W_neigh"], x, sage_l2_norm)
    raise ValueError(f"unknown layer kind {kind!r}")


LAYER_KINDS = ("gcn", "gat", "gin", "sage")

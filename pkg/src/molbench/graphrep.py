"""Molecule -> node-feature graph.

Each atom becomes one row of a six-column real matrix:

    [atomic_number, heavy_degree, implicit_valence, formal_charge,
     hybridization, aromatic]

Bonds become undirected edges; bond order is not encoded.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .chem import BondOrder, Molecule

FEATURE_NAMES = (
    "atomic_number",
    "total_degree",
    "implicit_valence",
    "formal_charge",
    "hybridization",
    "aromatic",
)
N_FEATURES = len(FEATURE_NAMES)

_SP3_ELEMENTS = {5, 6, 7, 8, 15, 16}


class Hybridization(IntEnum):
    OTHER = 0
    SP = 1
    SP2 = 2
    SP3 = 3


def perceive_hybridization(mol: Molecule, atom_index: int) -> Hybridization:
    atom = mol.atoms[atom_index]
    orders = [o for _, o in mol.adjacency[atom_index]]
    n_double = orders.count(BondOrder.DOUBLE)
    if BondOrder.TRIPLE in orders or n_double >= 2:
        return Hybridization.SP
    if atom.aromatic or BondOrder.AROMATIC in orders or n_double == 1:
        return Hybridization.SP2
    if atom.atomic_number in _SP3_ELEMENTS:
        return Hybridization.SP3
    return Hybridization.OTHER


@dataclass(frozen=True)
class MolGraph:
    features: np.ndarray  # (n_nodes, 6) float64
    edges: np.ndarray  # (n_edges, 2) int64, lower index first

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if x.ndim != 2 or x.shape[1] != N_FEATURES or x.shape[0] < 1:
            raise ValueError(f"features must be (N>=1, {N_FEATURES}), got {x.shape}")
        if e.size and (e.min() < 0 or e.max() >= x.shape[0] or np.any(e[:, 0] >= e[:, 1])):
            raise ValueError("edges must be (lo, hi) pairs of valid, distinct node indices")
        x.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "edges", e)

    @property
    def n_nodes(self) -> int:
        return self.features.shape[0]

    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency; only for inspection and tests."""
        a = np.zeros((self.n_nodes, self.n_nodes))
        a[self.edges[:, 0], self.edges[:, 1]] = 1.0
        a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a


def featurize(mol: Molecule) -> MolGraph:
    if len(mol.atoms) == 0:
        raise ValueError("cannot featurize an empty molecule")
    rows = []
    for i, atom in enumerate(mol.atoms):
        heavy_degree = sum(1 for j in mol.neighbors(i) if mol.atoms[j].atomic_number > 1)
        rows.append(
            (
                atom.atomic_number,
                heavy_degree,
                atom.total_h,
                atom.formal_charge,
                int(perceive_hybridization(mol, i)),
                1 if atom.aromatic else 0,
            )
        )
    edges = [b.endpoints for b in mol.bonds]
    return MolGraph(np.array(rows, dtype=np.float64), np.array(edges, dtype=np.int64).reshape(-1, 2))


@dataclass(frozen=True)
class FeatureStats:
    """Column means and standard deviations of node features (training split only)."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, graphs) -> "FeatureStats":
        x = np.concatenate([g.features for g in graphs], axis=0)
        return cls(x.mean(axis=0), x.std(axis=0))

    @classmethod
    def identity(cls) -> "FeatureStats":
        return cls(np.zeros(N_FEATURES), np.ones(N_FEATURES))

    def transform(self, x: np.ndarray) -> np.ndarray:
        centered = x - self.mean
        scale = np.where(self.std < 1e-8, np.inf, self.std)
        return centered / scale


def normalize_features(graph: MolGraph, stats: FeatureStats) -> MolGraph:
    """Z-score ``graph`` with training statistics; degenerate columns go to 0."""
    return MolGraph(stats.transform(graph.features), graph.edges)

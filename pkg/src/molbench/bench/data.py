"""Dataset ingestion and seeded down-sampling / train-test splits."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..chem import Molecule, standardize_smiles

log = logging.getLogger(__name__)


@dataclass
class Rejection:
    row: int  # 1-based data row (header excluded)
    smiles: str
    reason: str


@dataclass
class Dataset:
    name: str
    records: list[tuple[str, float]]
    molecules: list[Molecule]
    target_units: str = ""
    rejected: list[Rejection] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def targets(self) -> np.ndarray:
        return np.array([t for _, t in self.records], dtype=np.float64)


def load_csv(path, smiles_column: str, target_column: str, name=None, target_units="") -> Dataset:
    """Read a CSV, standardize every SMILES and drop rows that fail.

    Rows with unparseable SMILES or non-numeric / non-finite targets are
    recorded in ``Dataset.rejected``; duplicates are kept.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        columns = reader.fieldnames or []
        for col in (smiles_column, target_column):
            if col not in columns:
                raise KeyError(f"column {col!r} not in {path.name}; available: {columns}")
        records, mols, rejected = [], [], []
        for i, row in enumerate(reader, start=1):
            smi = (row[smiles_column] or "").strip()
            raw = (row[target_column] or "").strip()
            try:
                target = float(raw)
            except ValueError:
                rejected.append(Rejection(i, smi, f"non-numeric target {raw!r}"))
                continue
            if not math.isfinite(target):
                rejected.append(Rejection(i, smi, f"non-finite target {raw!r}"))
                continue
            try:
                mol = standardize_smiles(smi)
            except ValueError as exc:
                rejected.append(Rejection(i, smi, str(exc)))
                continue
            records.append((smi, target))
            mols.append(mol)
    if not records:
        raise ValueError(f"{path}: no valid rows ({len(rejected)} rejected)")
    if rejected:
        log.info("%s: rejected %d of %d rows", path.name, len(rejected), len(rejected) + len(records))
    return Dataset(name or path.stem, records, mols, target_units, rejected)


@dataclass(frozen=True)
class SplitPlan:
    seed: int
    downsample_n: int
    train_fraction: float
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def sample_and_split(n_records, seed: int, downsample_n: int = 1000, train_fraction: float = 0.8) -> SplitPlan:
    """Sample ``min(downsample_n, n)`` records without replacement, shuffle, cut train/test.

    ``n_records`` may be a length or anything with ``len()``.
    """
    n = n_records if isinstance(n_records, int) else len(n_records)
    if n < 10:
        raise ValueError(f"need at least 10 records to split, got {n}")
    rng = np.random.default_rng(seed)
    m = min(downsample_n, n)
    sampled = rng.choice(n, size=m, replace=False)
    shuffled = rng.permutation(sampled)
    n_train = round_half_up(train_fraction * m)
    return SplitPlan(
        seed,
        downsample_n,
        train_fraction,
        tuple(int(i) for i in shuffled[:n_train]),
        tuple(int(i) for i in shuffled[n_train:]),
    )


def write_rejections(path, rejected) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "smiles", "reason"])
        for r in rejected:
            w.writerow([r.row, r.smiles, r.reason])

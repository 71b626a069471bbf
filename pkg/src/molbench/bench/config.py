"""Benchmark configuration, read from a TOML file.

Example::

    models = ["linreg", "rf", "gcn", "gcn+fp"]
    seeds = [0]
    n_boot = 1000
    downsample_n = 1000
    epochs = 100

    [grid]
    hidden_dim = [32, 64, 128]
    lr = [1e-3, 3e-3, 1e-2]

    [[datasets]]
    name = "esol"
    path = "esol.csv"            # relative to this file
    smiles_col = "smiles"
    target_col = "measured log solubility in mols per litre"
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..cka import SIGMA_CONVENTIONS
from ..models import ABSENT_MODELS, MODEL_NAMES

DEFAULT_GRID = {"hidden_dim": [32, 64, 128], "lr": [1e-3, 3e-3, 1e-2]}


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    smiles_col: str = "smiles"
    target_col: str = "target"
    units: str = ""


@dataclass
class BenchConfig:
    datasets: list[DatasetSpec]
    models: list[str] = field(default_factory=lambda: list(MODEL_NAMES))
    seeds: list[int] = field(default_factory=lambda: [0])
    grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    n_boot: int = 1000
    downsample_n: int = 1000
    train_fraction: float = 0.8
    epochs: int = 100
    sigma_convention: str = "median_sq"
    normalize_features: bool = True
    sage_l2_norm: bool = False
    fp_bits: int = 1024
    rf: dict = field(default_factory=lambda: {"n_trees": 100, "max_depth": None, "min_leaf": 1})
    linreg: dict = field(default_factory=lambda: {"ridge": 1e-6})
    base_dir: str = "."

    def __post_init__(self):
        if not self.datasets:
            raise ValueError("config lists no datasets")
        known = set(MODEL_NAMES) | set(ABSENT_MODELS)
        self.models = [m.lower() for m in self.models]
        bad = [m for m in self.models if m not in known]
        if bad:
            raise ValueError(f"unknown models {bad}; choose from {sorted(known)}")
        if self.sigma_convention not in SIGMA_CONVENTIONS:
            raise ValueError(f"sigma_convention must be one of {SIGMA_CONVENTIONS}")
        if not self.seeds:
            raise ValueError("at least one seed required")
        if self.n_boot < 1:
            raise ValueError("n_boot must be >= 1")

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


def load_config(path) -> BenchConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    datasets = [DatasetSpec(**d) for d in raw.pop("datasets", [])]
    rf = raw.pop("rf", {})
    linreg = raw.pop("linreg", {})
    cfg = BenchConfig(datasets=datasets, base_dir=str(path.parent), **raw)
    cfg.rf = {**cfg.rf, **rf}
    cfg.linreg = {**cfg.linreg, **linreg}
    return cfg

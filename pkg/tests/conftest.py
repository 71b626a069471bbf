from pathlib import Path

import numpy as np
import pytest

from molbench.graphrep import MolGraph

ROOT = Path(__file__).resolve().parents[1]
ESOL = ROOT / "data" / "esol.csv"
ESOL_SMILES = "smiles"
ESOL_TARGET = "measured log solubility in mols per litre"


def random_graph(rng, n_min=2, n_max=10, d=6) -> MolGraph:
    """Random connected graph: a random tree plus a few extra edges."""
    n = int(rng.integers(n_min, n_max + 1))
    edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    for _ in range(int(rng.integers(0, n))):
        a, b = sorted(rng.choice(n, 2, replace=False).tolist())
        edges.add((a, b))
    e = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    return MolGraph(rng.normal(size=(n, d)), e)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def esol():
    from molbench.bench.data import load_csv

    return load_csv(ESOL, ESOL_SMILES, ESOL_TARGET, name="esol")


def jitter_biases(params, rng, scale=0.1):
    """Move zero-initialized biases off the ReLU kink before a finite-difference check."""
    for name, p in params.items():
        if name.split(".")[-1].startswith("b"):
            p.value[...] = rng.normal(scale=scale, size=p.shape)
    return params


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

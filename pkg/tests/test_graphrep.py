import numpy as np
import pytest

from molbench.chem import parse_smiles
from molbench.graphrep import (
    FeatureStats,
    Hybridization,
    MolGraph,
    featurize,
    normalize_features,
    perceive_hybridization,
)


def test_hybridization_examples():
    assert perceive_hybridization(parse_smiles("C#C"), 0) == Hybridization.SP
    assert perceive_hybridization(parse_smiles("c1ccccc1"), 0) == Hybridization.SP2
    assert perceive_hybridization(parse_smiles("C"), 0) == Hybridization.SP3
    assert perceive_hybridization(parse_smiles("C=C=C"), 1) == Hybridization.SP
    assert perceive_hybridization(parse_smiles("CC=O"), 2) == Hybridization.SP2
    assert perceive_hybridization(parse_smiles("CCl"), 1) == Hybridization.OTHER


def test_methane_row():
    np.testing.assert_array_equal(featurize(parse_smiles("C")).features, [[6, 0, 4, 0, 3, 0]])


def test_benzene_rows():
    g = featurize(parse_smiles("c1ccccc1"))
    np.testing.assert_array_equal(g.features, np.tile([6, 2, 1, 0, 2, 1], (6, 1)))
    assert g.edges.shape == (6, 2)


def test_acetate_charge_column():
    g = featurize(parse_smiles("CC(=O)[O-]"))
    assert g.features[3, 3] == -1


def test_graph_is_read_only():
    g = featurize(parse_smiles("CCO"))
    with pytest.raises(ValueError):
        g.features[0, 0] = 1


def test_bad_graphs():
    with pytest.raises(ValueError):
        MolGraph(np.zeros((0, 6)), np.zeros((0, 2)))
    with pytest.raises(ValueError):
        MolGraph(np.zeros((2, 6)), [[1, 0]])


def test_normalize_examples():
    a = MolGraph(np.zeros((1, 6)), np.zeros((0, 2)))
    b = MolGraph(np.full((1, 6), 2.0), np.zeros((0, 2)))
    stats = FeatureStats.fit([a, b])
    np.testing.assert_allclose(stats.mean, 1.0)
    np.testing.assert_allclose(stats.std, 1.0)
    np.testing.assert_array_equal(normalize_features(a, stats).features, -np.ones((1, 6)))
    np.testing.assert_array_equal(normalize_features(b, stats).features, np.ones((1, 6)))


def test_normalize_degenerate_column():
    g = featurize(parse_smiles("c1ccccc1"))
    out = normalize_features(g, FeatureStats.fit([g]))
    np.testing.assert_array_equal(out.features, np.zeros((6, 6)))


def test_identity_stats():
    g = featurize(parse_smiles("CCN"))
    np.testing.assert_array_equal(normalize_features(g, FeatureStats.identity()).features, g.features)

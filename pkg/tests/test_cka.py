import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from molbench.cka import (
    DegenerateRepresentation,
    center_gram,
    cka,
    cka_matrix,
    format_float,
    hsic,
    median_sq_dist,
    rbf_gram,
    write_matrix_csv,
)


def test_median_examples():
    assert median_sq_dist([[0.0], [1.0], [3.0]]) == 4.0
    assert median_sq_dist([[2.0, 1.0], [2.0, 1.0]]) == 1.0
    assert median_sq_dist([[0.0], [1.0], [2.0], [3.0]]) == 2.5
    with pytest.raises(ValueError):
        median_sq_dist([[1.0]])


def test_rbf_plug_in():
    g = rbf_gram([[0.0], [2.0], [2.0]])
    assert g.sigma == 4.0
    np.testing.assert_array_equal(np.diag(g.values), 1.0)
    assert g.values[0, 1] == np.exp(-4.0 / 32.0)
    g2 = rbf_gram([[0.0], [2.0], [2.0]], "sqrt_median")
    assert g2.sigma == 2.0 and g2.values[0, 1] == np.exp(-0.5)
    with pytest.raises(ValueError):
        rbf_gram([[0.0], [1.0]], "silverman")


def test_center_examples(rng):
    np.testing.assert_allclose(center_gram(np.ones((4, 4))), 0.0, atol=1e-15)
    K = rbf_gram(rng.normal(size=(7, 3))).values
    Kc = center_gram(K)
    np.testing.assert_allclose(Kc.sum(axis=1), 0.0, atol=1e-10)
    np.testing.assert_allclose(center_gram(Kc), Kc, atol=1e-12)


def test_hsic_scaling():
    K = center_gram(np.eye(3))
    assert hsic(K, K) == pytest.approx(np.trace(K @ K) / 4)


def test_self_similarity_and_isometry(rng):
    X = rng.normal(size=(50, 8))
    assert abs(cka(X, X).value - 1.0) < 1e-9
    Q = ortho_group.rvs(8, random_state=1)
    assert abs(cka(X, X @ Q + 3.0).value - 1.0) < 1e-9


def test_symmetry_and_permutation(rng):
    X, Y = rng.normal(size=(40, 5)), rng.normal(size=(40, 9))
    assert cka(X, Y).value == cka(Y, X).value
    p = rng.permutation(40)
    assert abs(cka(X[p], Y[p]).value - cka(X, Y).value) < 1e-12


def test_independent_gaussians_low(rng):
    scores = []
    for seed in range(20):
        r = np.random.default_rng(seed)
        scores.append(cka(r.normal(size=(100, 16)), r.normal(size=(100, 16))).value)
    assert max(scores) < 0.25


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 30), st.sampled_from(["median_sq", "sqrt_median"]))
def test_bounds(seed, n, conv):
    r = np.random.default_rng(seed)
    s = cka(r.normal(size=(n, 3)), r.exponential(size=(n, 2)), conv).value
    assert -1e-12 <= s <= 1 + 1e-9


def test_errors(rng):
    with pytest.raises(DegenerateRepresentation):
        cka(np.ones((5, 2)), rng.normal(size=(5, 2)))
    with pytest.raises(ValueError):
        cka(rng.normal(size=(5, 2)), rng.normal(size=(4, 2)))
    with pytest.raises(ValueError):
        cka(rng.normal(size=(2, 2)), rng.normal(size=(2, 2)))


def test_matrix(rng, tmp_path):
    X = rng.normal(size=(20, 4))
    names, M = cka_matrix({"a": X, "b": X @ ortho_group.rvs(4, random_state=0), "c": np.zeros((20, 3))})
    assert names == ["a", "b", "c"]
    np.testing.assert_array_equal(np.diag(M)[:2], 1.0)
    assert abs(M[0, 1] - 1.0) < 1e-9 and np.isnan(M[0, 2]) and np.isnan(M[2, 2])
    np.testing.assert_array_equal(M, M.T)
    write_matrix_csv(tmp_path / "m.csv", names, names, M)
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == ",a,b,c" and lines[3] == "c,,,"


def test_format_float():
    assert format_float(3.535533905932738) == "3.53553"
    assert format_float(None) == "" and format_float(float("nan")) == ""

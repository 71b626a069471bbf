import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molbench import kernels

BACKENDS = kernels.available_backends()


def test_backend_selected():
    assert kernels.BACKEND in BACKENDS


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_scatter_and_max(name):
    k = BACKENDS[name]
    v = np.array([[1.0, 2.0], [3.0, -1.0], [5.0, 0.5]])
    np.testing.assert_array_equal(k.scatter_add_rows(v, [1, 1, 0], 3), [[5, 0.5], [4, 1], [0, 0]])
    np.testing.assert_array_equal(k.segment_max(v, [1, 1, 0], 3), [[5, 0.5], [3, 2], [-np.inf, -np.inf]])
    ro = v.copy()
    ro.setflags(write=False)
    k.scatter_add_rows(ro, np.array([0, 0, 0]), 1)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_best_split_example(name):
    k = BACKENDS[name]
    X = np.array([[0.0, 5.0], [0.0, 1.0], [1.0, 2.0], [1.0, 9.0]])
    y = np.array([0.0, 0.0, 10.0, 10.0])
    f, thr, score = k.best_split(X, y, np.arange(4), np.array([1, 0]), 1)
    assert (f, thr, score) == (0, 0.5, 200.0)
    assert k.best_split(X, y, np.arange(4), np.array([0]), 3)[0] == -1
    assert k.best_split(np.ones((4, 1)), y, np.arange(4), np.array([0]), 1)[0] == -1


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 60), st.booleans(), st.integers(1, 4))
def test_backends_bit_identical(seed, n, binary, min_leaf):
    r = np.random.default_rng(seed)
    X = r.integers(0, 2, size=(n, 12)).astype(float) if binary else r.integers(0, 4, size=(n, 12)) * 0.5
    y = r.normal(size=n)
    rows = r.integers(0, n, size=n)
    feats = r.permutation(12)[:5]
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    assert py.best_split(X, y, rows, feats, min_leaf) == cy.best_split(X, y, rows, feats, min_leaf)
    idx = r.integers(0, 7, size=n)
    v = r.normal(size=(n, 3))
    assert np.array_equal(py.scatter_add_rows(v, idx, 7), cy.scatter_add_rows(v, idx, 7))
    assert np.array_equal(py.segment_max(v, idx, 7), cy.segment_max(v, idx, 7))


def test_out_of_range_index():
    for k in BACKENDS.values():
        with pytest.raises(IndexError):
            k.scatter_add_rows(np.ones((2, 1)), [0, 5], 2)


def test_env_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, MOLBENCH_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "from molbench import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"

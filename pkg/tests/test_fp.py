import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molbench.chem import parse_smiles, to_smiles
from molbench.fp import (
    Fingerprint,
    ecfp4,
    fingerprint_matrix,
    fold,
    hash_ints,
    initial_invariants,
    morgan_identifiers,
    read_fingerprints,
    ring_atoms,
    tanimoto,
    write_fingerprints,
)

from test_chem import SAMPLES


def test_hash_is_32_bit_and_order_sensitive():
    h = hash_ints([1, 2, 3])
    assert 0 <= h < 2**32
    assert h != hash_ints([3, 2, 1])
    assert hash_ints([-1]) == hash_ints([-1])


def test_invariant_examples():
    ethane = initial_invariants(parse_smiles("CC"))
    assert ethane[0] == ethane[1]
    assert initial_invariants(parse_smiles("C"))[0] != ethane[0]
    assert len(set(initial_invariants(parse_smiles("c1ccccc1")))) == 1


def test_ring_perception():
    assert ring_atoms(parse_smiles("C1CC1C")) == [True, True, True, False]
    assert ring_atoms(parse_smiles("c1ccccc1-c1ccccc1")) == [True] * 12
    assert not any(ring_atoms(parse_smiles("CCCC")))


def test_radius_zero_is_invariants():
    m = parse_smiles("CC(=O)O")
    assert sorted(morgan_identifiers(m, 0)) == sorted(set(initial_invariants(m)))


def test_methane_trace():
    m = parse_smiles("C")
    assert len(set(morgan_identifiers(m, 2))) == 1
    assert ecfp4(m).popcount == 1


def test_benzene_radius_one():
    assert len(set(morgan_identifiers(parse_smiles("c1ccccc1"), 1))) == 2


def test_fold_examples():
    assert fold([]).popcount == 0
    fp = fold([0, 1024], 1024)
    assert fp.popcount == 1 and fp.bits[0] == 1
    with pytest.raises(ValueError):
        fold([1], 0)


def test_spellings_agree():
    assert ecfp4(parse_smiles("CCO")) == ecfp4(parse_smiles("OCC"))
    assert ecfp4(parse_smiles("CCO")) != ecfp4(parse_smiles("CCN"))


def test_tanimoto():
    a = ecfp4(parse_smiles("c1ccccc1O"))
    b = ecfp4(parse_smiles("c1ccccc1N"))
    assert tanimoto(a, a) == 1.0
    assert 0.0 < tanimoto(a, b) < 1.0
    assert tanimoto(fold([]), fold([])) == 1.0


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(SAMPLES), st.integers(0, 2**32 - 1))
def test_permutation_invariance(smi, seed):
    m = parse_smiles(smi)
    perm = np.random.default_rng(seed).permutation(len(m.atoms))
    assert ecfp4(m.permute(perm)) == ecfp4(m)
    assert ecfp4(parse_smiles(to_smiles(m, np.random.default_rng(seed)))) == ecfp4(m)


def test_hex_roundtrip(tmp_path):
    fps = [ecfp4(parse_smiles(s)) for s in SAMPLES]
    assert Fingerprint.from_hex(fps[2].to_hex()) == fps[2]
    path = tmp_path / "fps.txt"
    write_fingerprints(path, fps)
    assert read_fingerprints(path) == fps


def test_matrix():
    x = fingerprint_matrix([parse_smiles("C"), parse_smiles("CC")])
    assert x.shape == (2, 1024) and x.dtype == np.float64
    assert set(np.unique(x)) <= {0.0, 1.0}


def test_determinism_across_processes():
    code = (
        "from molbench.chem import parse_smiles; from molbench.fp import ecfp4;"
        f"print('|'.join(ecfp4(parse_smiles(s)).to_hex() for s in {SAMPLES!r}))"
    )
    runs = [subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout for _ in range(2)]
    assert runs[0] == runs[1]
    assert runs[0].strip().split("|")[0] == ecfp4(parse_smiles(SAMPLES[0])).to_hex()

"""Molecular property regression with single-layer GNNs, fingerprint fusion and CKA."""

from .chem import Molecule, parse_smiles, standardize, standardize_smiles
from .fp import Fingerprint, ecfp4
from .graphrep import MolGraph, featurize
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Fingerprint",
    "MolGraph",
    "Molecule",
    "ecfp4",
    "featurize",
    "parse_smiles",
    "standardize",
    "standardize_smiles",
]

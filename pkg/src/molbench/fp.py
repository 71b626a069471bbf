"""Folded Morgan (ECFP-style) fingerprints.

Identifiers are produced with a fixed, platform-independent 32-bit hash
(FNV-1a over little-endian int64 fields, then the murmur3 finalizer), so
bit patterns are stable across runs and machines. They are *not* the same
bits RDKit would set.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .chem import Molecule

_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193
_MASK = 0xFFFFFFFF


def hash_ints(values) -> int:
    """Deterministic 32-bit hash of a sequence of integers."""
    data = struct.pack(f"<{len(values)}q", *values)
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    # murmur3 fmix32
    h ^= h >> 16
    h = (h * 0x85EBCA6B) & _MASK
    h ^= h >> 13
    h = (h * 0xC2B2AE35) & _MASK
    h ^= h >> 16
    return h


def ring_atoms(mol: Molecule) -> list[bool]:
    """Atoms incident to at least one non-bridge bond."""
    n = len(mol.atoms)
    disc = [-1] * n
    low = [0] * n
    in_ring = [False] * n
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        # (node, parent, iterator over neighbors)
        stack = [(root, -1, iter(mol.neighbors(root)))]
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for v in it:
                if v == parent:
                    continue
                if disc[v] < 0:
                    disc[v] = low[v] = timer
                    timer += 1
                    stack.append((v, u, iter(mol.neighbors(v))))
                    advanced = True
                    break
                low[u] = min(low[u], disc[v])
            if advanced:
                continue
            stack.pop()
            if parent >= 0:
                low[parent] = min(low[parent], low[u])
                if low[u] <= disc[parent]:
                    # (parent, u) is not a bridge
                    in_ring[u] = in_ring[parent] = True
    return in_ring


def initial_invariants(mol: Molecule) -> list[int]:
    in_ring = ring_atoms(mol)
    ids = []
    for i, atom in enumerate(mol.atoms):
        heavy_degree = sum(1 for j in mol.neighbors(i) if mol.atoms[j].atomic_number > 1)
        ids.append(
            hash_ints(
                (
                    atom.atomic_number,
                    heavy_degree,
                    atom.total_h,
                    atom.formal_charge,
                    int(in_ring[i]),
                    int(atom.aromatic),
                )
            )
        )
    return ids


def morgan_identifiers(mol: Molecule, radius: int) -> list[int]:
    """All identifiers from rounds ``0..radius`` after duplicate removal.

    An environment (the set of atoms within ``r`` bonds of the center) that
    was already emitted in an earlier round is dropped; identical
    environments found in the same round keep only the smallest identifier.
    Returned in round order, each round sorted.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    ids = initial_invariants(mol)
    n = len(mol.atoms)
    envs = [frozenset([i]) for i in range(n)]
    seen: set[frozenset] = set()
    out: list[int] = []

    def emit(round_ids, round_envs):
        best: dict[frozenset, int] = {}
        for ident, env in zip(round_ids, round_envs):
            if env in seen:
                continue
            if env not in best or ident < best[env]:
                best[env] = ident
        seen.update(best)
        out.extend(sorted(best.values()))

    emit(ids, envs)
    for r in range(1, radius + 1):
        new_ids = []
        new_envs = []
        for i in range(n):
            pairs = sorted((int(order), ids[j]) for j, order in mol.adjacency[i])
            flat = [r, ids[i]]
            for code, nid in pairs:
                flat.extend((code, nid))
            new_ids.append(hash_ints(flat))
            env = set(envs[i])
            for j in mol.neighbors(i):
                env |= envs[j]
            new_envs.append(frozenset(env))
        ids, envs = new_ids, new_envs
        emit(ids, envs)
    return out


@dataclass(frozen=True)
class Fingerprint:
    bits: np.ndarray  # (n_bits,) uint8 in {0, 1}

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("fingerprint must be a non-empty 1-D bit vector")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def n_bits(self) -> int:
        return self.bits.size

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        return isinstance(other, Fingerprint) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def to_hex(self) -> str:
        """Bit 0 is the most significant bit of the first hex digit."""
        return np.packbits(self.bits).tobytes().hex()

    @classmethod
    def from_hex(cls, text: str, n_bits: int = 1024) -> "Fingerprint":
        raw = np.frombuffer(bytes.fromhex(text.strip()), dtype=np.uint8)
        return cls(np.unpackbits(raw)[:n_bits])


def fold(ids, n_bits: int = 1024) -> Fingerprint:
    if n_bits <= 0:
        raise ValueError("n_bits must be positive")
    bits = np.zeros(n_bits, dtype=np.uint8)
    for ident in ids:
        bits[ident % n_bits] = 1
    return Fingerprint(bits)


def ecfp4(mol: Molecule, n_bits: int = 1024) -> Fingerprint:
    return fold(morgan_identifiers(mol, 2), n_bits)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    inter = int(np.sum(a.bits & b.bits))
    union = int(np.sum(a.bits | b.bits))
    return 1.0 if union == 0 else inter / union


def fingerprint_matrix(mols, n_bits: int = 1024) -> np.ndarray:
    """Stack ECFP4 bit vectors into an ``(n, n_bits)`` float64 matrix."""
    return np.array([ecfp4(m, n_bits).bits for m in mols], dtype=np.float64).reshape(-1, n_bits)


def write_fingerprints(path, fingerprints) -> None:
    with open(path, "w") as fh:
        for fp in fingerprints:
            fh.write(fp.to_hex() + "\n")


def read_fingerprints(path, n_bits: int = 1024) -> list[Fingerprint]:
    with open(path) as fh:
        return [Fingerprint.from_hex(line, n_bits) for line in fh if line.strip()]


"""SMILES parsing and structure standardization.

The parser follows the OpenSMILES grammar for the subset that appears in
drug-like property datasets: organic-subset and bracket atoms, aromatic
lowercase atoms, bonds ``- = # :``, branches, ring closures (``1``-``9``
and ``%nn``) and dot-separated fragments. Stereo markers are consumed and
dropped.

Standardization is salt stripping (keep the largest fragment) followed by
a small neutralization rule table. Tautomers are not touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from functools import cached_property

ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I "
    "Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt "
    "Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr "
    "Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og"
).split()
ATOMIC_NUMBER = {sym: z for z, sym in enumerate(ELEMENTS, start=1)}

# Allowed valences for organic-subset atoms. N carries 5 so that the
# pentavalent nitro spelling N(=O)=O is accepted.
DEFAULT_VALENCE = {
    5: (3,),
    6: (4,),
    7: (3, 5),
    8: (2,),
    15: (3, 5),
    16: (2, 4, 6),
    9: (1,),
    17: (1,),
    35: (1,),
    53: (1,),
}
ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_ORGANIC = {"b", "c", "n", "o", "p", "s"}
AROMATIC_BRACKET = {"b", "c", "n", "o", "p", "s", "se", "as", "te"}


class SmilesError(ValueError):
    """Malformed or unsupported SMILES; ``position`` is the 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ValenceError(ValueError):
    """An organic-subset atom has more bond order than any allowed valence."""

    def __init__(self, message: str, atom_index: int):
        super().__init__(f"{message} (atom {atom_index})")
        self.atom_index = atom_index


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> float:
        return 1.5 if self is BondOrder.AROMATIC else float(self.value)


@dataclass(frozen=True)
class Atom:
    atomic_number: int
    formal_charge: int = 0
    aromatic: bool = False
    isotope: int | None = None
    explicit_h: int | None = None
    implicit_h: int = 0

    def __post_init__(self):
        if not 1 <= self.atomic_number <= 118:
            raise ValueError(f"atomic number {self.atomic_number} out of range")
        if self.implicit_h < 0:
            raise ValueError("implicit_h must be non-negative")
        if self.explicit_h is not None and self.implicit_h != 0:
            raise ValueError("implicit_h must be 0 when explicit_h is set")

    @property
    def symbol(self) -> str:
        return ELEMENTS[self.atomic_number - 1]

    @property
    def total_h(self) -> int:
        return self.implicit_h + (self.explicit_h or 0)


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE

    def __post_init__(self):
        if self.begin == self.end:
            raise ValueError("self-bond")
        if self.begin > self.end:
            a, b = self.end, self.begin
            object.__setattr__(self, "begin", a)
            object.__setattr__(self, "end", b)

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.begin, self.end)


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...] = ()
    fragment_count: int = field(default=-1)

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        n = len(self.atoms)
        seen = set()
        for b in self.bonds:
            if not (0 <= b.begin < n and 0 <= b.end < n):
                raise ValueError(f"bond {b.endpoints} references a missing atom")
            if b.endpoints in seen:
                raise ValueError(f"duplicate bond {b.endpoints}")
            seen.add(b.endpoints)
            if b.order is BondOrder.AROMATIC and not (
                self.atoms[b.begin].aromatic and self.atoms[b.end].aromatic
            ):
                raise ValueError(f"aromatic bond {b.endpoints} between non-aromatic atoms")
        if self.fragment_count < 0:
            object.__setattr__(self, "fragment_count", len(self.components()) if n else 0)

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, BondOrder], ...], ...]:
        """Per atom, ``(neighbor, order)`` pairs in bond-list order."""
        adj: list[list[tuple[int, BondOrder]]] = [[] for _ in self.atoms]
        for b in self.bonds:
            adj[b.begin].append((b.end, b.order))
            adj[b.end].append((b.begin, b.order))
        return tuple(tuple(a) for a in adj)

    def neighbors(self, i: int) -> list[int]:
        return [j for j, _ in self.adjacency[i]]

    def bond_order_sum(self, i: int) -> float:
        return sum(order.valence for _, order in self.adjacency[i])

    def components(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists, ordered by first atom."""
        parent = list(range(len(self.atoms)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for b in self.bonds:
            ra, rb = find(b.begin), find(b.end)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups: dict[int, list[int]] = {}
        for i in range(len(self.atoms)):
            groups.setdefault(find(i), []).append(i)
        return sorted(groups.values(), key=lambda g: g[0])

    def subgraph(self, indices) -> "Molecule":
        """Induced submolecule on ``indices``, keeping their relative order."""
        keep = sorted(indices)
        remap = {old: new for new, old in enumerate(keep)}
        bonds = [
            Bond(remap[b.begin], remap[b.end], b.order)
            for b in self.bonds
            if b.begin in remap and b.end in remap
        ]
        return Molecule(tuple(self.atoms[i] for i in keep), tuple(bonds))

    def permute(self, order) -> "Molecule":
        """Relabel atoms so that new atom ``k`` is old atom ``order[k]``."""
        order = list(order)
        if sorted(order) != list(range(len(self.atoms))):
            raise ValueError("order must be a permutation of atom indices")
        inverse = {old: new for new, old in enumerate(order)}
        bonds = [Bond(inverse[b.begin], inverse[b.end], b.order) for b in self.bonds]
        return Molecule(tuple(self.atoms[i] for i in order), tuple(bonds), self.fragment_count)


# --------------------------------------------------------------------------
# parsing


_BOND_SYMBOLS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[Atom] = []
        self.bonds: dict[tuple[int, int], BondOrder] = {}
        self.prev: int | None = None
        self.pending_bond: tuple[BondOrder, int] | None = None
        self.branches: list[tuple[int | None, int]] = []
        self.rings: dict[int, tuple[int, BondOrder | None, int]] = {}

    def error(self, message, position=None):
        raise SmilesError(message, self.pos if position is None else position)

    def peek(self, k=0) -> str:
        i = self.pos + k
        return self.text[i] if i < len(self.text) else ""

    def run(self):
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch == "[":
                self.add_atom(self.bracket_atom())
            elif ch in "BCNOPSFI":
                if text.startswith(("Cl", "Br"), self.pos):
                    sym, self.pos = text[self.pos : self.pos + 2], self.pos + 2
                else:
                    sym, self.pos = ch, self.pos + 1
                self.add_atom(Atom(ATOMIC_NUMBER[sym]), organic=True)
            elif ch in AROMATIC_ORGANIC:
                self.pos += 1
                self.add_atom(Atom(ATOMIC_NUMBER[ch.upper()], aromatic=True), organic=True)
            elif ch in _BOND_SYMBOLS:
                if self.prev is None:
                    self.error(f"bond {ch!r} without a preceding atom")
                if self.pending_bond is not None:
                    self.error("two consecutive bond symbols")
                self.pending_bond = (_BOND_SYMBOLS[ch], self.pos)
                self.pos += 1
            elif ch == "(":
                if self.prev is None:
                    self.error("branch without a preceding atom")
                if self.pending_bond is not None:
                    self.error("bond symbol before branch")
                self.branches.append((self.prev, self.pos))
                self.pos += 1
            elif ch == ")":
                if not self.branches:
                    self.error("unbalanced ')'")
                if self.pending_bond is not None:
                    self.error("dangling bond symbol")
                if self.text[self.pos - 1] == "(":
                    self.error("empty branch")
                self.prev, _ = self.branches.pop()
                self.pos += 1
            elif ch.isdigit() or ch == "%":
                self.ring_closure()
            elif ch == ".":
                if self.pending_bond is not None:
                    self.error("dangling bond symbol")
                self.prev = None
                self.pos += 1
            elif ch == "*":
                self.error("wildcard atom '*' is not supported")
            elif ch == ">":
                self.error("reaction SMILES are not supported")
            elif ch == "$":
                self.error("quadruple bonds are not supported")
            else:
                self.error(f"unexpected character {ch!r}")
        if self.pending_bond is not None:
            self.error("dangling bond symbol", self.pending_bond[1])
        if self.branches:
            self.error("unbalanced '('", self.branches[-1][1])
        if self.rings:
            digit, (_, _, where) = next(iter(self.rings.items()))
            self.error(f"unmatched ring closure {digit}", where)
        if not self.atoms:
            self.error("no atoms", 0)

    def add_atom(self, atom: Atom, organic=False):
        idx = len(self.atoms)
        self.atoms.append(atom)
        if self.prev is not None:
            order = self.pending_bond[0] if self.pending_bond else None
            self.connect(self.prev, idx, order)
        self.pending_bond = None
        self.prev = idx

    def connect(self, a: int, b: int, order: BondOrder | None, position=None):
        if order is None:
            both = self.atoms[a].aromatic and self.atoms[b].aromatic
            order = BondOrder.AROMATIC if both else BondOrder.SINGLE
        elif order is BondOrder.AROMATIC and not (
            self.atoms[a].aromatic and self.atoms[b].aromatic
        ):
            self.error("aromatic bond between non-aromatic atoms", position)
        key = (min(a, b), max(a, b))
        if a == b:
            self.error("ring closure onto the same atom", position)
        if key in self.bonds:
            self.error("duplicate bond", position)
        self.bonds[key] = order

    def ring_closure(self):
        start = self.pos
        if self.prev is None:
            self.error("ring closure without a preceding atom")
        if self.peek() == "%":
            digits = self.text[self.pos + 1 : self.pos + 3]
            if len(digits) != 2 or not digits.isdigit():
                self.error("'%' must be followed by two digits")
            number = int(digits)
            self.pos += 3
        else:
            number = int(self.peek())
            self.pos += 1
        order = self.pending_bond[0] if self.pending_bond else None
        self.pending_bond = None
        if number in self.rings:
            other, other_order, _ = self.rings.pop(number)
            if order is not None and other_order is not None and order != other_order:
                self.error(f"conflicting bond symbols on ring closure {number}", start)
            self.connect(other, self.prev, order if order is not None else other_order, start)
        else:
            self.rings[number] = (self.prev, order, start)

    def bracket_atom(self) -> Atom:
        start = self.pos
        close = self.text.find("]", start)
        if close < 0:
            self.error("unbalanced '['")
        self.pos += 1
        isotope = None
        digits = self._digits()
        if digits:
            isotope = int(digits)
        aromatic = False
        two, one = self.text[self.pos : self.pos + 2], self.peek()
        if two in AROMATIC_BRACKET:
            sym, aromatic = two.capitalize(), True
            self.pos += 2
        elif one in AROMATIC_BRACKET:
            sym, aromatic = one.upper(), True
            self.pos += 1
        elif one.isupper():
            if two in ATOMIC_NUMBER:
                sym = two
                self.pos += 2
            elif one in ATOMIC_NUMBER:
                sym = one
                self.pos += 1
            else:
                self.error(f"unknown element {one!r}")
        elif one == "*":
            self.error("wildcard atom '*' is not supported")
        else:
            self.error(f"unknown element symbol {two!r}")
        # chirality is dropped
        if self.peek() == "@":
            self.pos += 1
            if self.peek() == "@":
                self.pos += 1
            elif self.text.startswith(("TH", "AL", "SP", "TB", "OH"), self.pos):
                self.pos += 2
                self._digits()
        h = 0
        if self.peek() == "H":
            self.pos += 1
            d = self._digits()
            h = int(d) if d else 1
        charge = 0
        if self.peek() in "+-":
            sign = 1 if self.peek() == "+" else -1
            self.pos += 1
            d = self._digits()
            if d:
                charge = sign * int(d)
            else:
                charge = sign
                while self.peek() == ("+" if sign > 0 else "-"):
                    charge += sign
                    self.pos += 1
        if self.peek() == ":":
            self.pos += 1
            if not self._digits():
                self.error("atom class requires digits")
        if self.pos != close:
            self.error("malformed bracket atom")
        self.pos += 1
        return Atom(
            ATOMIC_NUMBER[sym],
            formal_charge=charge,
            aromatic=aromatic,
            isotope=isotope,
            explicit_h=h,
        )

    def _digits(self) -> str:
        start = self.pos
        while self.peek().isdigit():
            self.pos += 1
        return self.text[start : self.pos]


def parse_smiles(text: str) -> Molecule:
    """Parse ``text`` into a :class:`Molecule` with implicit hydrogens assigned.

    Surrounding whitespace is ignored and anything after the first inner
    whitespace is treated as a title and dropped. Raises
    :class:`SmilesError` for grammar problems and :class:`ValenceError` when
    an organic-subset atom exceeds its largest allowed valence.
    """
    text = text.split(None, 1)[0] if text and not text.isspace() else ""
    if not text:
        raise SmilesError("empty SMILES", 0)
    if not text.isascii():
        bad = next(i for i, c in enumerate(text) if not c.isascii())
        raise SmilesError("non-ASCII character", bad)
    p = _Parser(text)
    p.run()
    bonds = tuple(Bond(a, b, order) for (a, b), order in p.bonds.items())
    mol = assign_implicit_hydrogens(Molecule(tuple(p.atoms), bonds))
    check_valence(mol)
    return mol


# --------------------------------------------------------------------------
# hydrogens and valence


def _implicit_h(atom: Atom, bond_sum: float) -> int:
    valences = DEFAULT_VALENCE.get(atom.atomic_number)
    if valences is None:
        return 0
    if atom.aromatic:
        target = valences[0]
    else:
        target = next((v for v in valences if v >= bond_sum), valences[-1])
    return max(0, math.floor(target - bond_sum))


def assign_implicit_hydrogens(mol: Molecule) -> Molecule:
    """Fill ``implicit_h`` for organic-subset atoms from their default valence.

    Aromatic bonds count 1.5 and aromatic atoms use their lowest valence,
    so benzene carbons get one H and pyridine/furan heteroatoms get none.
    Bracket atoms (``explicit_h`` set) keep exactly their written H count.
    """
    atoms = []
    for i, atom in enumerate(mol.atoms):
        if atom.explicit_h is not None:
            atoms.append(replace(atom, implicit_h=0))
        else:
            atoms.append(replace(atom, implicit_h=_implicit_h(atom, mol.bond_order_sum(i))))
    return Molecule(tuple(atoms), mol.bonds, mol.fragment_count)


def check_valence(mol: Molecule) -> None:
    for i, atom in enumerate(mol.atoms):
        if atom.explicit_h is not None:
            continue
        valences = DEFAULT_VALENCE.get(atom.atomic_number)
        if valences is None:
            continue
        used = math.floor(mol.bond_order_sum(i))
        limit = valences[-1] + (1 if atom.aromatic else 0)
        if used > limit:
            raise ValenceError(
                f"{atom.symbol} has bond order {mol.bond_order_sum(i):g}, max {valences[-1]}", i
            )


# --------------------------------------------------------------------------
# standardization


def _heavy_count(mol: Molecule, indices) -> int:
    return sum(1 for i in indices if mol.atoms[i].atomic_number > 1)


def strip_salts(mol: Molecule) -> Molecule:
    """Keep the fragment with the most heavy atoms.

    Ties go to the larger bond count, then to the fragment that starts at
    the lowest original atom index.
    """
    comps = mol.components()
    if len(comps) <= 1:
        return mol
    bond_count = [0] * len(comps)
    owner = {}
    for k, comp in enumerate(comps):
        for i in comp:
            owner[i] = k
    for b in mol.bonds:
        bond_count[owner[b.begin]] += 1
    best = max(
        range(len(comps)),
        key=lambda k: (_heavy_count(mol, comps[k]), bond_count[k], -comps[k][0]),
    )
    return mol.subgraph(comps[best])


def neutralize(mol: Molecule) -> Molecule:
    """Neutralize common charged groups by adding or removing one hydrogen.

    * O-/S- without a positively charged neighbor gains an H.
    * N+/P+ bearing at least one H and only single bonds loses an H.

    Quaternary cations and charge-separated pairs (nitro, N-oxides) are
    left alone.
    """
    atoms = list(mol.atoms)
    changed = False
    for i, atom in enumerate(mol.atoms):
        nbrs = mol.adjacency[i]
        if atom.atomic_number in (8, 16) and atom.formal_charge == -1:
            if any(mol.atoms[j].formal_charge > 0 for j, _ in nbrs):
                continue
            atoms[i] = replace(
                atom, formal_charge=0, explicit_h=None, implicit_h=atom.total_h + 1
            )
            changed = True
        elif atom.atomic_number in (7, 15) and atom.formal_charge == 1:
            if atom.total_h < 1 or any(o is not BondOrder.SINGLE for _, o in nbrs):
                continue
            atoms[i] = replace(
                atom, formal_charge=0, explicit_h=None, implicit_h=atom.total_h - 1
            )
            changed = True
    if not changed:
        return mol
    return Molecule(tuple(atoms), mol.bonds, mol.fragment_count)


def standardize(mol: Molecule) -> Molecule:
    return neutralize(strip_salts(mol))


def standardize_smiles(text: str) -> Molecule:
    return standardize(parse_smiles(text))


# --------------------------------------------------------------------------
# writing


def _atom_token(mol: Molecule, i: int) -> str:
    atom = mol.atoms[i]
    sym = atom.symbol
    bare_ok = (
        atom.explicit_h is None
        and atom.isotope is None
        and atom.formal_charge == 0
        and sym in ORGANIC_SUBSET
        and (not atom.aromatic or sym.lower() in AROMATIC_ORGANIC)
        and _implicit_h(atom, mol.bond_order_sum(i)) == atom.implicit_h
    )
    if bare_ok:
        return sym.lower() if atom.aromatic else sym
    out = ["["]
    if atom.isotope is not None:
        out.append(str(atom.isotope))
    out.append(sym.lower() if atom.aromatic else sym)
    h = atom.total_h
    if h:
        out.append("H" if h == 1 else f"H{h}")
    q = atom.formal_charge
    if q:
        sign = "+" if q > 0 else "-"
        out.append(sign if abs(q) == 1 else f"{sign}{abs(q)}")
    out.append("]")
    return "".join(out)


def _bond_token(mol: Molecule, a: int, b: int, order: BondOrder) -> str:
    if order is BondOrder.SINGLE:
        return "-" if mol.atoms[a].aromatic and mol.atoms[b].aromatic else ""
    if order is BondOrder.AROMATIC:
        return ""
    return "=" if order is BondOrder.DOUBLE else "#"


def to_smiles(mol: Molecule, rng=None) -> str:
    """Write a (non-canonical) SMILES string for ``mol``.

    Without ``rng`` the traversal starts at atom 0 and follows bond order,
    so the output is deterministic. With a ``numpy.random.Generator`` the
    root and neighbor order are shuffled, giving random re-spellings of
    the same graph.
    """
    n = len(mol.atoms)
    visited = [False] * n
    parts: list[str] = []

    def order_of(nbrs):
        nbrs = list(nbrs)
        if rng is not None:
            rng.shuffle(nbrs)
        return nbrs

    for comp in mol.components():
        root = comp[int(rng.integers(len(comp)))] if rng is not None else comp[0]
        # pass 1: spanning tree and ring-closure edges
        children: dict[int, list[tuple[int, BondOrder]]] = {i: [] for i in comp}
        rank: dict[int, int] = {}
        closures: dict[int, list[tuple[int, BondOrder]]] = {i: [] for i in comp}
        tree_edges = set()

        def dfs(u, parent):
            visited[u] = True
            rank[u] = len(rank)
            for v, order in order_of(mol.adjacency[u]):
                if v == parent and (min(u, v), max(u, v)) in tree_edges:
                    continue
                if not visited[v]:
                    tree_edges.add((min(u, v), max(u, v)))
                    children[u].append((v, order))
                    dfs(v, u)
                elif rank[v] < rank[u] and (min(u, v), max(u, v)) not in tree_edges:
                    closures[u].append((v, order))
                    closures[v].append((u, order))

        dfs(root, None)

        # pass 2: emit
        free: list[int] = []
        next_label = [1]
        open_rings: dict[tuple[int, int], int] = {}
        out: list[str] = []

        def label_text(k):
            return str(k) if k < 10 else f"%{k:02d}"

        def emit(u, bond_in: str):
            out.append(bond_in)
            out.append(_atom_token(mol, u))
            for v, order in sorted(closures[u], key=lambda t: rank[t[0]]):
                key = (min(u, v), max(u, v))
                if key in open_rings:
                    k = open_rings.pop(key)
                    out.append(label_text(k))
                    free.append(k)
                    free.sort()
                else:
                    if free:
                        k = free.pop(0)
                    else:
                        k = next_label[0]
                        next_label[0] += 1
                    open_rings[key] = k
                    out.append(_bond_token(mol, u, v, order) + label_text(k))
            kids = children[u]
            for idx, (v, order) in enumerate(kids):
                token = _bond_token(mol, u, v, order)
                if idx < len(kids) - 1:
                    out.append("(")
                    emit(v, token)
                    out.append(")")
                else:
                    emit(v, token)

        emit(root, "")
        parts.append("".join(out))
    return ".".join(parts)

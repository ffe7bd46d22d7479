"""Finite groups acting on M_n by unitary conjugation, and their Haar mean."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .algebra import superoperator
from .errors import DimensionMismatch, HomomorphismViolation, InvalidGroup, NotUnitary
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    approx_equal,
    as_operator,
    dagger,
    matrix_from_json,
    matrix_to_json,
)

EXHAUSTIVE_ORDER = 64
_SAMPLED_TRIPLES = 20000


@dataclass(frozen=True)
class FiniteGroup:
    table: np.ndarray
    identity: int = field(init=False)
    inverse: np.ndarray = field(init=False)

    def __post_init__(self):
        t = np.asarray(self.table, dtype=int)
        object.__setattr__(self, "table", t)
        n = t.shape[0] if t.ndim == 2 else 0
        if t.ndim != 2 or t.shape != (n, n) or n < 1:
            raise InvalidGroup(f"multiplication table must be square, got {t.shape}")
        full = np.arange(n)
        for k in range(n):
            if not (np.array_equal(np.sort(t[k]), full) and np.array_equal(np.sort(t[:, k]), full)):
                raise InvalidGroup(f"row/column {k} is not a permutation")
        ids = [e for e in range(n) if np.array_equal(t[e], full)]
        if len(ids) != 1 or not np.array_equal(t[:, ids[0]], full):
            raise InvalidGroup("no two-sided identity")
        e = ids[0]
        if n <= EXHAUSTIVE_ORDER:
            triples = itertools.product(range(n), repeat=3)
        else:
            rng = np.random.default_rng(0)
            triples = rng.integers(0, n, size=(_SAMPLED_TRIPLES, 3))
        for a, b, c in triples:
            if t[t[a, b], c] != t[a, t[b, c]]:
                raise InvalidGroup(f"associativity fails at ({a}, {b}, {c})")
        inv = np.array([int(np.flatnonzero(t[g] == e)[0]) for g in range(n)])
        object.__setattr__(self, "identity", e)
        object.__setattr__(self, "inverse", inv)

    @property
    def order(self) -> int:
        return self.table.shape[0]

    def mul(self, g: int, h: int) -> int:
        return int(self.table[g, h])

    def inv(self, g: int) -> int:
        return int(self.inverse[g])

    def is_subgroup(self, elements: Sequence[int]) -> bool:
        s = set(int(g) for g in elements)
        if self.identity not in s:
            return False
        return all(self.mul(a, b) in s and self.inv(a) in s for a in s for b in s)

    def to_json(self) -> dict:
        return {"order": self.order, "table": self.table.tolist()}

    @classmethod
    def from_json(cls, obj) -> "FiniteGroup":
        if isinstance(obj, str):
            obj = json.loads(obj)
        g = cls(np.array(obj["table"], dtype=int))
        if "order" in obj and obj["order"] != g.order:
            raise InvalidGroup("'order' does not match the table")
        return g


def cyclic_group(n: int) -> FiniteGroup:
    if n < 1:
        raise InvalidGroup("cyclic group order must be >= 1")
    i = np.arange(n)
    return FiniteGroup((i[:, None] + i[None, :]) % n)


def cyclic_subgroup_chain(n: int) -> list[list[int]]:
    """``{0} < <n/p1> < ... < Z_n`` following a prime factorisation of ``n``."""
    primes, rest, p = [], n, 2
    while rest > 1:
        while rest % p == 0:
            primes.append(p)
            rest //= p
        p += 1
    chain, order = [[0]], 1
    for p in primes:
        order *= p
        step = n // order
        chain.append(list(range(0, n, step)))
    return chain


@dataclass(frozen=True)
class StarAutomorphism:
    """``a -> u a u^dagger``; multiplicativity and *-preservation re-checked on samples."""

    unitary: np.ndarray
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        u = as_operator(self.unitary)
        object.__setattr__(self, "unitary", u)
        ok, dev = approx_equal(dagger(u) @ u, np.eye(len(u)), self.tol)
        if not ok:
            raise NotUnitary(f"|u^dagger u - I|_max = {dev:.3e}")
        rng = np.random.default_rng(12345)
        n = len(u)
        a, b = (rng.normal(size=(2, n, n)) + 1j * rng.normal(size=(2, n, n)))
        if not (approx_equal(self(a @ b), self(a) @ self(b), self.tol)[0]
                and approx_equal(self(dagger(a)), dagger(self(a)), self.tol)[0]):
            raise NotUnitary("conjugation self-test failed")

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    def __call__(self, a):
        u = self.unitary
        return u @ a @ dagger(u)

    def inverse(self, a):
        u = self.unitary
        return dagger(u) @ a @ u

    def superoperator(self) -> np.ndarray:
        return superoperator(self.unitary)


@dataclass(frozen=True)
class GroupAction:
    group: FiniteGroup
    maps: tuple

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    @property
    def order(self) -> int:
        return self.group.order

    def __call__(self, g: int, a):
        return self.maps[g](a)

    def unitary(self, g: int) -> np.ndarray:
        return self.maps[g].unitary

    def elements(self) -> range:
        return range(self.group.order)

    def to_json(self, group_ref: str | None = None) -> dict:
        return {"group": group_ref if group_ref is not None else self.group.to_json(),
                "unitaries": [matrix_to_json(m.unitary) for m in self.maps]}


def build_action(group: FiniteGroup, unitaries: Sequence, tol: Tolerance = DEFAULT_TOL) -> GroupAction:
    """Verified action ``g -> Ad(u_g)``.

    The unitaries only need to form a projective representation: the
    homomorphism law is demanded of the conjugation maps.
    """
    if len(unitaries) != group.order:
        raise DimensionMismatch(f"{len(unitaries)} unitaries for a group of order {group.order}")
    maps = tuple(StarAutomorphism(as_operator(u), tol) for u in unitaries)
    dim = maps[0].dim
    if any(m.dim != dim for m in maps):
        raise DimensionMismatch("unitaries of different dimensions")
    supers = [m.superoperator() for m in maps]
    ok, dev = approx_equal(supers[group.identity], np.eye(dim * dim), tol)
    if not ok:
        raise HomomorphismViolation((group.identity, group.identity), dev)
    n = group.order
    if n <= EXHAUSTIVE_ORDER:
        pairs = itertools.product(range(n), repeat=2)
    else:
        pairs = np.random.default_rng(0).integers(0, n, size=(4 * EXHAUSTIVE_ORDER ** 2, 2))
    for g, h in pairs:
        ok, dev = approx_equal(supers[group.mul(g, h)], supers[g] @ supers[h], tol)
        if not ok:
            raise HomomorphismViolation((int(g), int(h)), dev)
    return GroupAction(group, maps)


def restrict_action(action: GroupAction, elements: Sequence[int]) -> GroupAction:
    """Action of a subgroup, reindexed ``0..k-1`` in the order given."""
    elements = [int(g) for g in elements]
    if not action.group.is_subgroup(elements):
        raise InvalidGroup(f"{elements} is not a subgroup")
    pos = {g: i for i, g in enumerate(elements)}
    table = [[pos[action.group.mul(a, b)] for b in elements] for a in elements]
    return GroupAction(FiniteGroup(np.array(table)), tuple(action.maps[g] for g in elements))


def mean_over_group(action: GroupAction, x) -> np.ndarray:
    """Uniform Haar average ``(1/|G|) sum_g g(x)``."""
    x = as_operator(x)
    if x.shape[0] != action.dim:
        raise DimensionMismatch(f"operator dim {x.shape[0]} vs action dim {action.dim}")
    return sum(m(x) for m in action.maps) / action.order


def load_action(path: str | Path, tol: Tolerance = DEFAULT_TOL) -> GroupAction:
    """Read action JSON; ``group`` is either inline or a path relative to the file."""
    path = Path(path)
    obj = json.loads(path.read_text())
    grp = obj["group"]
    if isinstance(grp, str):
        grp = json.loads((path.parent / grp).read_text())
    group = FiniteGroup.from_json(grp)
    return build_action(group, [matrix_from_json(u) for u in obj["unitaries"]], tol)

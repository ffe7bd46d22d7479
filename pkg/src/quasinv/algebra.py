"""Finite-dimensional *-subalgebras of a full matrix algebra.

A subalgebra is stored as a Hilbert-Schmidt orthonormal basis, so span
membership reduces to a projection residual.  Rank decisions use the
singular-value threshold ``tol.abs * sqrt(ambient_dim)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    as_operator,
    dagger,
    matrix_from_json,
    matrix_to_json,
    max_norm,
)

_CHUNK = 128


def _rank_threshold(m: int, tol: Tolerance) -> float:
    return tol.abs * np.sqrt(m)


def _extend_orthonormal(q: np.ndarray, cands: np.ndarray, thresh: float) -> np.ndarray:
    """Orthonormal rows spanning ``cands`` modulo the row space of ``q``."""
    new_rows = []
    for start in range(0, len(cands), _CHUNK):
        basis = np.vstack([q, *new_rows]) if new_rows else q
        r = cands[start:start + _CHUNK]
        for _ in range(2):  # second pass restores orthogonality lost to cancellation
            if len(basis):
                r = r - (r @ basis.conj().T) @ basis
        r = r[np.linalg.norm(r, axis=1) > thresh]
        if not len(r):
            continue
        _, s, vh = np.linalg.svd(r, full_matrices=False)
        rank = int(np.sum(s > thresh))
        if rank:
            new_rows.append(vh[:rank])
    if not new_rows:
        return np.zeros((0, q.shape[1]), dtype=complex)
    return np.vstack(new_rows)


def _null_space(m: np.ndarray, thresh: float) -> np.ndarray:
    """Orthonormal rows ``v`` with ``m @ v == 0``."""
    if m.shape[0] > m.shape[1]:
        m = np.linalg.qr(m, mode="r")  # same singular values and right vectors
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    scale = max(1.0, float(s[0])) if len(s) else 1.0
    rank = int(np.sum(s > thresh * scale))
    return vh[rank:].conj()


@dataclass(frozen=True)
class AlgebraBasis:
    ambient_dim: int
    basis: np.ndarray  # (k, m, m), Hilbert-Schmidt orthonormal

    @classmethod
    def from_vectors(cls, m: int, rows: np.ndarray) -> "AlgebraBasis":
        return cls(m, np.asarray(rows, dtype=complex).reshape(-1, m, m))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def vectors(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    def __len__(self):
        return self.dim

    def project(self, x) -> np.ndarray:
        x = as_operator(x, self.ambient_dim)
        coeffs = self.vectors.conj() @ x.reshape(-1)
        return (coeffs @ self.vectors).reshape(x.shape)

    def residual(self, x) -> float:
        """Hilbert-Schmidt norm of ``x`` minus its projection onto the span."""
        x = as_operator(x, self.ambient_dim)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, tol: Tolerance = DEFAULT_TOL) -> bool:
        x = as_operator(x, self.ambient_dim)
        thresh = _rank_threshold(self.ambient_dim, tol) + tol.rel * np.linalg.norm(x)
        return self.residual(x) <= thresh

    def contains_span(self, other: "AlgebraBasis | Iterable", tol: Tolerance = DEFAULT_TOL):
        """``(ok, worst residual)`` for containment of every element of ``other``."""
        elems = other.basis if isinstance(other, AlgebraBasis) else list(other)
        worst, ok = 0.0, True
        for x in elems:
            worst = max(worst, self.residual(x))
            ok = ok and self.contains(x, tol)
        return ok, worst

    def same_span(self, other: "AlgebraBasis", tol: Tolerance = DEFAULT_TOL) -> bool:
        return (self.dim == other.dim and self.contains_span(other, tol)[0]
                and other.contains_span(self, tol)[0])

    def closure_deviations(self) -> dict[str, float]:
        """Residuals for unitality, adjoint closure and product closure."""
        m = self.ambient_dim
        b = self.basis
        adj = max((self.residual(dagger(x)) for x in b), default=0.0)
        prod = 0.0
        for x in b:
            p = np.einsum("ij,bjk->bik", x, b)
            v = p.reshape(len(b), -1)
            r = v - (v @ self.vectors.conj().T) @ self.vectors
            prod = max(prod, float(np.max(np.linalg.norm(r, axis=1))) if len(r) else 0.0)
        return {"unit": self.residual(np.eye(m)), "adjoint": adj, "product": prod}

    def to_json(self) -> dict:
        return {"ambient_dim": self.ambient_dim,
                "basis": [matrix_to_json(x) for x in self.basis]}

    @classmethod
    def from_json(cls, obj) -> "AlgebraBasis":
        if isinstance(obj, str):
            obj = json.loads(obj)
        m = int(obj["ambient_dim"])
        mats = [matrix_from_json(o) for o in obj["basis"]]
        for a in mats:
            as_operator(a, m)
        return cls(m, np.array(mats, dtype=complex).reshape(-1, m, m))


def span_basis(ops: Sequence, tol: Tolerance = DEFAULT_TOL) -> AlgebraBasis:
    """Orthonormal basis of the linear span of ``ops`` (no closure applied)."""
    ops = np.asarray(ops, dtype=complex)
    m = ops.shape[-1]
    rows = _extend_orthonormal(np.zeros((0, m * m), complex), ops.reshape(len(ops), -1),
                               _rank_threshold(m, tol))
    return AlgebraBasis.from_vectors(m, rows)


def full_algebra(n: int) -> AlgebraBasis:
    return AlgebraBasis(n, np.eye(n * n, dtype=complex).reshape(n * n, n, n))


def scalars(n: int) -> AlgebraBasis:
    return AlgebraBasis(n, (np.eye(n, dtype=complex) / np.sqrt(n))[None])


def generate_algebra(seed: Sequence, tol: Tolerance = DEFAULT_TOL) -> AlgebraBasis:
    """Smallest unital *-subalgebra containing ``seed``.

    Words in the generators and their adjoints span the algebra, so it is
    enough to keep left-multiplying the newest basis vectors by generators
    until no new direction appears.
    """
    seed = [np.asarray(s, dtype=complex) for s in seed]
    if not seed:
        raise ValueError("generate_algebra needs at least one seed")
    m = seed[0].shape[0]
    for s in seed:
        as_operator(s, m)
    thresh = _rank_threshold(m, tol)
    gens = []
    for s in seed:
        for g in (s, dagger(s)):
            nrm = np.linalg.norm(g)
            if nrm > thresh:
                gens.append(g / nrm)
    # drop generators that are linearly dependent on earlier ones
    gens_basis = span_basis([np.eye(m)] + gens, tol) if gens else scalars(m)
    gen_ops = gens_basis.basis
    q = gens_basis.vectors
    frontier = q
    while len(frontier):
        fr = frontier.reshape(-1, m, m)
        new_parts = []
        for g in gen_ops:
            cands = (g @ fr).reshape(len(fr), -1)
            new = _extend_orthonormal(np.vstack([q, *new_parts]), cands, thresh)
            if len(new):
                new_parts.append(new)
        frontier = np.vstack(new_parts) if new_parts else np.zeros((0, m * m), complex)
        q = np.vstack([q, frontier])
    return AlgebraBasis.from_vectors(m, q)


def commutant(alg: AlgebraBasis | Sequence, tol: Tolerance = DEFAULT_TOL) -> AlgebraBasis:
    """Basis of ``{x : x b = b x for every b}`` by a null-space computation."""
    elems = alg.basis if isinstance(alg, AlgebraBasis) else np.asarray(alg, dtype=complex)
    m = elems.shape[-1]
    eye = np.eye(m)
    # row-major vec: vec(x b) = (I kron b^T) vec x,  vec(b x) = (b kron I) vec x
    blocks = [np.kron(eye, b.T) - np.kron(b, eye) for b in elems]
    if not blocks:
        return full_algebra(m)
    rows = _null_space(np.vstack(blocks), _rank_threshold(m, tol))
    return AlgebraBasis.from_vectors(m, rows)


def intersect(a: AlgebraBasis, b: AlgebraBasis, tol: Tolerance = DEFAULT_TOL) -> AlgebraBasis:
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch("algebras live in different ambient dimensions")
    m = a.ambient_dim
    stacked = np.hstack([a.vectors.T, -b.vectors.T])
    coeffs = _null_space(stacked, _rank_threshold(m, tol))
    elems = coeffs[:, :a.dim] @ a.vectors
    if not len(elems):
        return AlgebraBasis(m, np.zeros((0, m, m), complex))
    return span_basis(elems.reshape(-1, m, m), tol)


def center(alg: AlgebraBasis, tol: Tolerance = DEFAULT_TOL) -> AlgebraBasis:
    return intersect(alg, commutant(alg, tol), tol)


def superoperator(u: np.ndarray) -> np.ndarray:
    """Matrix of ``a -> u a u^dagger`` acting on row-major ``vec(a)``."""
    return np.kron(u, u.conj())


def fixed_point_algebra(maps: Sequence, dim: int | None = None,
                        tol: Tolerance = DEFAULT_TOL) -> AlgebraBasis:
    """Joint fixed points of unitary conjugations.

    ``maps`` holds StarAutomorphism objects or bare implementing unitaries.
    """
    unitaries = [np.asarray(getattr(g, "unitary", g), dtype=complex) for g in maps]
    if not unitaries:
        if dim is None:
            raise ValueError("dim is required for an empty list of maps")
        return full_algebra(dim)
    m = unitaries[0].shape[0]
    eye = np.eye(m * m)
    blocks = [superoperator(as_operator(u, m)) - eye for u in unitaries]
    rows = _null_space(np.vstack(blocks), _rank_threshold(m, tol))
    return AlgebraBasis.from_vectors(m, rows)


def is_abelian(alg: AlgebraBasis | Sequence,
               tol: Tolerance = DEFAULT_TOL) -> tuple[bool, float, tuple[int, int] | None]:
    """``(abelian, worst commutator max-norm, worst pair)`` over basis pairs."""
    elems = alg.basis if isinstance(alg, AlgebraBasis) else span_basis(alg, tol).basis
    worst, pair, ok = 0.0, None, True
    for i in range(len(elems)):
        rest = elems[i + 1:]
        if not len(rest):
            break
        left = np.einsum("ij,bjk->bik", elems[i], rest)
        right = np.einsum("bij,jk->bik", rest, elems[i])
        devs = np.max(np.abs(left - right), axis=(1, 2))
        scale = np.maximum(np.max(np.abs(left), axis=(1, 2)), np.max(np.abs(right), axis=(1, 2)))
        ok = ok and bool(np.all(devs <= tol.abs + tol.rel * scale))
        j = int(np.argmax(devs))
        if devs[j] > worst:
            worst, pair = float(devs[j]), (i, i + 1 + j)
    return ok, worst, pair


__all__ = [
    "AlgebraBasis", "span_basis", "full_algebra", "scalars", "generate_algebra",
    "commutant", "intersect", "center", "fixed_point_algebra", "is_abelian",
    "superoperator", "max_norm",
]

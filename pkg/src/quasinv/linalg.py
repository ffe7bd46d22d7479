"""Dense complex-matrix numerics shared by every other module.

Operators are plain complex ``numpy`` arrays of shape ``(n, n)``.  The
predicates here (``is_hermitian``, ``is_unitary`` ...) play the role of the
cached property flags; nothing is mutated after construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    MatrixFormatError,
    NotHermitian,
    NotPositiveDefinite,
)


@dataclass(frozen=True)
class Tolerance:
    """Comparison threshold ``abs + rel * max(|A|_max, |B|_max)``."""

    abs: float = 1e-9
    rel: float = 1e-9

    def __post_init__(self):
        if not self.abs > 0:
            raise ValueError("Tolerance.abs must be > 0")
        if self.rel < 0:
            raise ValueError("Tolerance.rel must be >= 0")

    def threshold(self, *scales: float) -> float:
        return self.abs + self.rel * max(scales, default=0.0)


DEFAULT_TOL = Tolerance()


def as_operator(a, dim: int | None = None) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise DimensionMismatch(f"expected dim {dim}, got {a.shape[0]}")
    return a


def max_norm(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def approx_equal(a, b, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, float]:
    """Entrywise comparison; returns ``(ok, max |a - b|)``.

    Works for scalars and arrays of any (matching) shape.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape {a.shape} vs {b.shape}")
    dev = max_norm(a - b)
    return dev <= tol.threshold(max_norm(a), max_norm(b)), dev


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermiticity_deviation(a) -> float:
    a = np.asarray(a)
    return max_norm(a - dagger(a))


def is_hermitian(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    return approx_equal(a, dagger(np.asarray(a)), tol)[0]


def is_unitary(u, tol: Tolerance = DEFAULT_TOL) -> bool:
    u = as_operator(u)
    return approx_equal(dagger(u) @ u, np.eye(len(u)), tol)[0]


def commutator(a, b):
    return a @ b - b @ a


class HermitianSpectrum:
    """Spectral decomposition ``h = V diag(w) V^dagger`` of a Hermitian matrix.

    Powers with negative real part or non-real exponents require a
    positive-definite spectrum; that is checked lazily by :meth:`power`.
    """

    def __init__(self, h, tol: Tolerance = DEFAULT_TOL):
        h = as_operator(h)
        dev = hermiticity_deviation(h)
        if dev > tol.threshold(max_norm(h)):
            raise NotHermitian(f"|h - h^dagger|_max = {dev:.3e}")
        self.tol = tol
        self.eigenvalues, self.eigenvectors = np.linalg.eigh((h + dagger(h)) / 2)

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @cached_property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def require_positive_definite(self):
        if self.min_eigenvalue <= self.tol.abs:
            raise NotPositiveDefinite(
                f"smallest eigenvalue {self.min_eigenvalue:.3e} <= {self.tol.abs:.1e}")

    def apply(self, f_values: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return (v * f_values) @ dagger(v)

    def power(self, z: complex) -> np.ndarray:
        self.require_positive_definite()
        z = complex(z)
        if z.imag == 0:
            values = self.eigenvalues ** z.real
        else:
            values = np.exp(z * np.log(self.eigenvalues))
        return self.apply(values)

    def log(self) -> np.ndarray:
        self.require_positive_definite()
        return self.apply(np.log(self.eigenvalues))

    def spectral_projections(self, rel_gap: float = 1e-6) -> list[np.ndarray]:
        """Projections onto clusters of numerically equal eigenvalues."""
        w = self.eigenvalues
        scale = max(np.max(np.abs(w)), np.finfo(float).tiny)
        groups = [[0]]
        for k in range(1, len(w)):
            if w[k] - w[k - 1] > rel_gap * scale:
                groups.append([k])
            else:
                groups[-1].append(k)
        v = self.eigenvectors
        return [v[:, g] @ dagger(v[:, g]) for g in groups]


def hermitian_power(h, z: complex, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``h**z`` for Hermitian positive-definite ``h`` via its eigendecomposition.

    Purely imaginary ``z`` gives a unitary; real ``z`` gives a Hermitian
    positive-definite matrix.
    """
    return HermitianSpectrum(h, tol).power(z)


def matrix_units(n: int) -> np.ndarray:
    """All ``n**2`` matrix units ``E_ij`` stacked in row-major order."""
    return np.eye(n * n, dtype=complex).reshape(n * n, n, n)


# ---------------------------------------------------------------- matrix JSON

def matrix_to_json(a) -> dict:
    a = as_operator(a)
    return {
        "dim": int(a.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in a],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        dim = obj["dim"]
        rows = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise MatrixFormatError("matrix object needs 'dim' and 'entries'") from exc
    if not isinstance(dim, int) or dim < 1:
        raise MatrixFormatError(f"bad dim {dim!r}")
    if not isinstance(rows, list) or len(rows) != dim:
        raise MatrixFormatError("entries must have exactly dim rows")
    out = np.empty((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise MatrixFormatError(f"row {i} is ragged or non-square")
        for j, z in enumerate(row):
            if not isinstance(z, (list, tuple)) or len(z) != 2:
                raise MatrixFormatError(f"entry ({i},{j}) must be [re, im]")
            out[i, j] = complex(float(z[0]), float(z[1]))
    return out


def load_matrices(path: str | Path) -> list[np.ndarray]:
    """Read a matrix object or a JSON list of matrix objects."""
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, list):
        return [matrix_from_json(o) for o in obj]
    return [matrix_from_json(obj)]


def dump_matrices(mats: Sequence[np.ndarray]) -> str:
    return json.dumps([matrix_to_json(m) for m in mats])

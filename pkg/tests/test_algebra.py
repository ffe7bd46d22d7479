import numpy as np
import pytest
import scipy.linalg as sla

from quasinv.algebra import (
    center,
    commutant,
    fixed_point_algebra,
    full_algebra,
    generate_algebra,
    intersect,
    is_abelian,
    span_basis,
)
from quasinv.scenarios import haar_unitary, rotation


def _null_dim(m, cut=1e-8):
    sv = sla.svdvals(m)
    return m.shape[1] - int(np.sum(sv > cut))


def _commutant_rank(ops):
    """Independent oracle: scipy null space of the stacked commutator maps."""
    n = ops[0].shape[0]
    eye = np.eye(n)
    m = np.vstack([np.kron(eye, b.T) - np.kron(b, eye) for b in ops])
    return _null_dim(m)


def _fixed_rank(us):
    n = us[0].shape[0]
    m = np.vstack([np.kron(u, u.conj()) - np.eye(n * n) for u in us])
    return _null_dim(m)


def test_basis_is_orthonormal_and_closed(rng):
    a = rng.normal(size=(4, 4))
    alg = generate_algebra([np.diag([1.0, 1.0, 2.0, 3.0]), a @ a.T])
    v = alg.vectors
    np.testing.assert_allclose(v.conj() @ v.T, np.eye(alg.dim), atol=1e-12)
    dev = alg.closure_deviations()
    assert max(dev.values()) < 1e-10


def test_generated_by_matrix_unit_generators():
    # E_01 and its adjoint already generate M_2
    e01 = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert generate_algebra([e01]).dim == 4


def test_generated_by_diagonal():
    assert generate_algebra([np.diag([1.0, 2.0, 2.0])]).dim == 2
    assert generate_algebra([np.diag([1.0, 2.0, 3.0])]).dim == 3


@pytest.mark.parametrize("diag,expected", [([1, 2, 3], 3), ([1, 1, 2], 5), ([1, 1, 1], 9)])
def test_commutant_of_diagonal(diag, expected):
    ops = [np.diag(np.array(diag, dtype=float))]
    assert commutant(ops).dim == expected == _commutant_rank(ops)


def test_commutant_matches_oracle_on_random_algebras(rng):
    for n in (2, 3, 4):
        u = haar_unitary(rng, n)
        d = np.diag(rng.integers(0, 2, size=n).astype(float))
        ops = [u @ d @ u.conj().T]
        assert commutant(ops).dim == _commutant_rank(ops)


def test_center_of_block_algebra():
    # M_2 (+) C inside M_3
    alg = generate_algebra([np.diag([1.0, 1.0, 0.0]), np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0.0]])])
    assert alg.dim == 5
    z = center(alg)
    assert z.dim == 2
    assert center(full_algebra(3)).dim == 1


def test_intersect():
    a = span_basis([np.eye(2), np.diag([1.0, -1.0])])
    b = span_basis([np.eye(2), np.array([[0, 1], [1, 0.0]])])
    assert intersect(a, b).dim == 1


@pytest.mark.parametrize("k", [1, 2, 4])
def test_fixed_point_algebra_of_rotations(k):
    us = [rotation(np.pi / k * j) for j in range(2 * k)]
    assert fixed_point_algebra(us).dim == _fixed_rank(us)


def test_fixed_point_algebra_random(rng):
    for n in (2, 3, 4):
        v = haar_unitary(rng, n)
        u = v @ np.diag(np.exp(2j * np.pi * rng.integers(0, 3, size=n) / 3)) @ v.conj().T
        assert fixed_point_algebra([u]).dim == _fixed_rank([u])


def test_is_abelian():
    ok, worst, _ = is_abelian(span_basis([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]))
    assert ok and worst == 0
    ok, worst, pair = is_abelian(full_algebra(2))
    assert not ok and worst == pytest.approx(1.0) and pair is not None


def test_contains_and_residual():
    diag = span_basis([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    assert diag.contains(np.diag([3.0, 4.0]))
    off = np.array([[0.0, 2.0], [0.0, 0.0]])
    assert diag.residual(off) == pytest.approx(2.0)
    assert not diag.contains(off)

"""GNS space of a faithful state on M_n and its Tomita-Takesaki objects.

The GNS space is the coefficient space of M_n with ``<a, b> = phi(a^dagger b)``,
coordinatised by the symmetric (Loewdin) orthonormalisation of the matrix
units.  Antilinear maps (S, F, J) are stored as a matrix ``M`` acting by
``v -> M @ conj(v)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .algebra import generate_algebra, is_abelian, span_basis
from .errors import ChainNotNested, InvariantViolation, NotStronglyQuasiInvariant
from .group import mean_over_group
from .linalg import (
    DEFAULT_TOL,
    HermitianSpectrum,
    Tolerance,
    approx_equal,
    dagger,
    matrix_units,
)
from .quasi import CocycleFamily, FaithfulState
from .verdict import HYP_SATISFIED, Tracker, Verdict, not_applicable


class Antilinear:
    """Antilinear operator ``v -> matrix @ conj(v)``.

    ``A @ B`` composes; composing two antilinear maps gives a plain ndarray.
    """

    __array_ufunc__ = None  # make ``ndarray @ Antilinear`` defer to __rmatmul__

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=complex)

    def __call__(self, v):
        return self.matrix @ np.conj(v)

    def __matmul__(self, other):
        if isinstance(other, Antilinear):
            return self.matrix @ other.matrix.conj()
        return Antilinear(self.matrix @ np.conj(other))

    def __rmatmul__(self, other):
        return Antilinear(np.asarray(other) @ self.matrix)

    @property
    def adjoint(self) -> "Antilinear":
        # <A* x, y> = conj<x, A y>  gives  matrix(A*) = matrix(A)^T
        return Antilinear(self.matrix.T)

    def __repr__(self):
        return f"Antilinear(dim={self.matrix.shape[0]})"


def _transpose_permutation(n: int) -> np.ndarray:
    """``P`` with ``coeffs(a^dagger) = P conj(coeffs(a))`` in row-major coordinates."""
    idx = np.arange(n * n).reshape(n, n).T.reshape(-1)
    return np.eye(n * n)[idx]


@dataclass(frozen=True)
class TomitaData:
    """S, Delta, J, F for one cyclic separating vector."""

    psi: np.ndarray
    S: Antilinear
    delta: np.ndarray
    J: Antilinear
    F: Antilinear
    cyclic: np.ndarray  # columns pi(E_k) psi

    @cached_property
    def delta_spectrum(self) -> HermitianSpectrum:
        return HermitianSpectrum(self.delta)

    def delta_power(self, z: complex) -> np.ndarray:
        return self.delta_spectrum.power(z)


class GnsSystem:
    """Cyclic representation of a faithful state with its modular objects."""

    def __init__(self, state: FaithfulState, tol: Tolerance | None = None):
        self.state = state
        self.tol = tol or state.tol
        n = state.dim
        self.base_dim = n
        self.space_dim = n * n
        units = matrix_units(n)
        gram = state(np.einsum("aji,bjk->abik", units.conj(), units))
        spec = HermitianSpectrum(gram, self.tol)
        self.gram_sqrt = spec.power(0.5)
        self.gram_inv_sqrt = spec.power(-0.5)
        self.omega = self.vector(np.eye(n))
        self._perm = _transpose_permutation(n)
        self.tomita = self.modular_data(self.omega, None)

    # --- representation

    def vector(self, a) -> np.ndarray:
        """GNS vector ``pi(a) Omega`` of an algebra element (batched)."""
        a = np.asarray(a, dtype=complex)
        flat = a.reshape(*a.shape[:-2], -1)
        return flat @ self.gram_sqrt.T

    def pi(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        left = np.kron(a, np.eye(self.base_dim)) if a.ndim == 2 else np.array(
            [np.kron(x, np.eye(self.base_dim)) for x in a])
        return self.gram_sqrt @ left @ self.gram_inv_sqrt

    def inner(self, u, v) -> complex:
        return np.vdot(u, v)

    @property
    def S(self) -> Antilinear:
        return self.tomita.S

    @property
    def J(self) -> Antilinear:
        return self.tomita.J

    @property
    def F(self) -> Antilinear:
        return self.tomita.F

    @property
    def delta(self) -> np.ndarray:
        return self.tomita.delta

    def jpij(self, a) -> np.ndarray:
        """``J pi(a) J`` as a linear operator (lies in the commutant)."""
        j = self.J.matrix
        return j @ np.conj(self.pi(a)) @ np.conj(j)

    def modular_data(self, psi: np.ndarray, j_for_f: Antilinear | None) -> TomitaData:
        """S by ``pi(a) psi -> pi(a^dagger) psi``, then polar decomposition and F.

        ``F`` is defined on the commutant side with the conjugation found for
        ``psi`` itself unless ``j_for_f`` is given.
        """
        units = matrix_units(self.base_dim)
        cyc = np.einsum("kij,j->ki", self.pi(units), psi).T
        cyc_inv = np.linalg.inv(cyc)
        s = Antilinear(cyc @ self._perm @ np.conj(cyc_inv))
        delta = s.adjoint @ s
        delta = (delta + dagger(delta)) / 2
        spec = HermitianSpectrum(delta, self.tol)
        j = s @ spec.power(-0.5)
        jf = j if j_for_f is None else j_for_f
        jm = jf.matrix
        pis = self.pi(units)
        j_psi = jf(psi)
        comm = np.einsum("ab,kbc,c->ka", jm, np.conj(pis), np.conj(j_psi)).T
        f = Antilinear(comm @ self._perm @ np.conj(np.linalg.inv(comm)))
        return TomitaData(psi, s, delta, j, f, cyc)

    def delta_power(self, z: complex) -> np.ndarray:
        return self.tomita.delta_power(z)


def _structure_tracker(gns: GnsSystem, tol: Tolerance) -> Tracker:
    t = Tracker("gns.structure", tol)
    n = gns.base_dim
    units = matrix_units(n)
    phi = gns.state
    om = gns.omega
    td = gns.tomita
    pis = gns.pi(units)
    t.compare(np.einsum("i,kij,j->k", om.conj(), pis, om), phi(units), location="<Omega, pi(a) Omega> = phi(a)")
    t.compare(gns.S(np.einsum("kij,j->ki", pis, om).T).T,
              np.einsum("kij,j->ki", gns.pi(dagger(units)), om), location="S pi(a)Omega = pi(a*)Omega")
    t.compare(td.S.matrix, (td.J @ td.delta_power(0.5)).matrix, location="S = J Delta^1/2")
    t.compare(td.J @ td.J, np.eye(gns.space_dim), location="J^2 = 1")
    t.compare(td.J(om), om, location="J Omega = Omega")
    t.compare(dagger(td.J.matrix) @ td.J.matrix, np.eye(gns.space_dim), location="J antiunitary")
    t.compare(td.delta, td.F @ td.S, location="Delta = F S")
    t.compare(td.F.matrix, td.S.adjoint.matrix, location="F = S*")
    # E_0j and E_j0 generate M_n, so commuting with them is commuting with pi(M_n)
    gens = sorted({k for k in range(n * n) if k < n or k % n == 0})
    for k in gens:
        jej = gns.jpij(units[k])
        for l in gens:
            p = pis[l]
            t.compare(jej @ p, p @ jej, location=f"[J pi(E_{k // n}{k % n}) J, pi(E_{l // n}{l % n})] = 0")
    return t


def build_gns(state: FaithfulState, tol: Tolerance | None = None) -> GnsSystem:
    gns = GnsSystem(state, tol)
    v = _structure_tracker(gns, gns.tol).verdict()
    if not v.holds:
        raise InvariantViolation(f"GNS construction self-test failed: {v.witnesses}")
    return gns


def check_gns_structure(gns: GnsSystem, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    return _structure_tracker(gns, tol).verdict()


def check_flow_consistency(gns: GnsSystem, times: Sequence[float],
                           tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """``Delta^{it} pi(a) Delta^{-it} = pi(sigma_t(a))``."""
    t = Tracker("gns.modular_flow_consistency", tol)
    units = matrix_units(gns.base_dim)
    spec = gns.state.spectrum
    pis = gns.pi(units)
    for s in times:
        d = gns.delta_power(complex(0, s))
        r = spec.power(complex(0, s))
        t.compare(d @ pis @ dagger(d), gns.pi(r @ units @ dagger(r)), t=s)
    return t.verdict()


# ---------------------------------------------------------------- shifted vectors

@dataclass
class GnsShift:
    g: int
    sqrt_x: np.ndarray
    inv_sqrt_x: np.ndarray
    omega_g: np.ndarray
    U: np.ndarray
    V: np.ndarray
    tomita: TomitaData = field(repr=False)

    @property
    def S(self) -> Antilinear:
        return self.tomita.S

    @property
    def F(self) -> Antilinear:
        return self.tomita.F

    @property
    def J(self) -> Antilinear:
        return self.tomita.J

    @property
    def delta(self) -> np.ndarray:
        return self.tomita.delta


def shift_for(gns: GnsSystem, family: CocycleFamily, g: int) -> GnsShift:
    """Omega_g, U_g, V_g and the modular objects of the pair (M, Omega_g)."""
    if not family.strongly_quasi:
        raise NotStronglyQuasiInvariant(f"classification is {family.classification}")
    act = family.action
    spec = HermitianSpectrum(family[g], gns.tol)
    sqrt_x, inv_sqrt_x = spec.power(0.5), spec.power(-0.5)
    omega_g = gns.pi(sqrt_x) @ gns.omega
    # U_g pi(a) Omega = pi(g(a) x_{g^-1}^{1/2}) Omega; in matrix-unit coefficients
    # a -> u a u^dagger s is (u kron (u^dagger s)^T).
    u = act.unitary(g)
    s = HermitianSpectrum(family[act.group.inv(g)], gns.tol).power(0.5)
    cyc = gns.tomita.cyclic
    U = cyc @ np.kron(u, (dagger(u) @ s).T) @ np.linalg.inv(cyc)
    j = gns.J.matrix
    V = j @ np.conj(U) @ np.conj(j)
    tol = gns.tol
    eye = np.eye(gns.space_dim)
    for name, w in (("U", U), ("V", V)):
        ok, dev = approx_equal(dagger(w) @ w, eye, tol)
        if not ok:
            raise InvariantViolation(f"{name}_{g} is not unitary (deviation {dev:.3e})")
    td = gns.modular_data(omega_g, None)
    return GnsShift(g, sqrt_x, inv_sqrt_x, omega_g, U, V, td)


def all_shifts(gns: GnsSystem, family: CocycleFamily) -> list[GnsShift]:
    return [shift_for(gns, family, g) for g in family.action.elements()]


def _strong_only(cid: str, family: CocycleFamily) -> Verdict | None:
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    return None


def check_shift_state(gns, family, shifts, tol=DEFAULT_TOL) -> Verdict:
    """``<Omega_g, pi(a) Omega_g> = phi(g(a))``."""
    cid = "gns.shift_state"
    if (na := _strong_only(cid, family)):
        return na
    t = Tracker(cid, tol)
    units = matrix_units(gns.base_dim)
    pis = gns.pi(units)
    for sh in shifts:
        lhs = np.einsum("i,kij,j->k", sh.omega_g.conj(), pis, sh.omega_g)
        rhs = gns.state(np.array([family.action(sh.g, e) for e in units]))
        t.compare(lhs, rhs, g=sh.g)
    return t.verdict(HYP_SATISFIED)


def check_natural_cone(gns, family, shifts, tol=DEFAULT_TOL) -> Verdict:
    """Omega_g = Delta^{1/4} pi(sqrt x_g) Omega, with [pi(sqrt x_g), Delta] = 0 as premise."""
    cid = "gns.natural_cone"
    if (na := _strong_only(cid, family)):
        return na
    t = Tracker(cid, tol)
    d14 = gns.delta_power(0.25)
    for sh in shifts:
        p = gns.pi(sh.sqrt_x)
        t.compare(p @ gns.delta, gns.delta @ p, g=sh.g, location="[pi(sqrt x_g), Delta] = 0")
        t.compare(sh.omega_g, d14 @ p @ gns.omega, g=sh.g, location="Omega_g = Delta^1/4 pi(sqrt x_g) Omega")
        t.compare(sh.omega_g, p @ d14 @ gns.omega, g=sh.g, location="Omega_g = pi(sqrt x_g) Delta^1/4 Omega")
    return t.verdict(HYP_SATISFIED)


def check_j_equality(gns, family, shifts, tol=DEFAULT_TOL) -> Verdict:
    cid = "gns.j_equality"
    if (na := _strong_only(cid, family)):
        return na
    t = Tracker(cid, tol)
    for sh in shifts:
        t.compare(sh.J.matrix, gns.J.matrix, g=sh.g, location="J_g = J_phi")
        t.compare(gns.J(sh.omega_g), sh.omega_g, g=sh.g, location="J Omega_g = Omega_g")
    return t.verdict(HYP_SATISFIED)


def check_unitary_maps(gns, family, shifts, tol=DEFAULT_TOL) -> Verdict:
    """Defining action of U_g, V_g on cyclic vectors, unitarity, and J U_g J = V_g."""
    cid = "gns.unitary_maps"
    if (na := _strong_only(cid, family)):
        return na
    t = Tracker(cid, tol)
    units = matrix_units(gns.base_dim)
    pis = gns.pi(units)
    eye = np.eye(gns.space_dim)
    jm = gns.J.matrix
    for sh in shifts:
        ga = np.array([family.action(sh.g, e) for e in units])
        lhs = np.einsum("ij,kjl,l->ki", sh.U, pis, sh.omega_g)
        rhs = gns.vector(ga)
        t.compare(lhs, rhs, g=sh.g, location="U_g pi(a) Omega_g = pi(g(a)) Omega")
        j_pi_omg = np.array([gns.J(p @ sh.omega_g) for p in pis])
        j_pi_ga = np.array([gns.J(v) for v in rhs])
        t.compare(j_pi_omg @ sh.V.T, j_pi_ga, g=sh.g, location="V_g J pi(a) Omega_g = J pi(g(a)) Omega")
        t.compare(dagger(sh.U) @ sh.U, eye, g=sh.g, location="U_g unitary")
        t.compare(dagger(sh.V) @ sh.V, eye, g=sh.g, location="V_g unitary")
        t.compare(jm @ np.conj(sh.V) @ np.conj(jm), sh.U, g=sh.g, location="J V_g J = U_g")
    return t.verdict(HYP_SATISFIED)


def check_representation(gns, family, shifts, tol=DEFAULT_TOL) -> Verdict:
    cid = "gns.representation"
    if (na := _strong_only(cid, family)):
        return na
    t = Tracker(cid, tol)
    grp = family.action.group
    t.compare(shifts[grp.identity].U, np.eye(gns.space_dim), location="U_e = 1")
    for g in range(grp.order):
        t.compare(dagger(shifts[g].U), shifts[grp.inv(g)].U, g=g, location="U_g* = U_{g^-1}")
        for h in range(grp.order):
            t.compare(shifts[g].U @ shifts[h].U, shifts[grp.mul(g, h)].U, g=[g, h],
                      location="U_g U_h = U_gh")
    return t.verdict(HYP_SATISFIED)


def check_covariance(gns: GnsSystem, family: CocycleFamily, shift: GnsShift | Sequence[GnsShift],
                     tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """``U_g pi(a) U_g^-1 = pi(g(a))`` and ``V_g J pi(a) J V_g^-1 = J pi(g(a)) J``."""
    cid = "gns.covariance"
    if (na := _strong_only(cid, family)):
        return na
    shifts = [shift] if isinstance(shift, GnsShift) else list(shift)
    t = Tracker(cid, tol)
    n = gns.base_dim
    for sh in shifts:
        u_inv = np.linalg.inv(sh.U)
        v_inv = np.linalg.inv(sh.V)
        for k, e in enumerate(matrix_units(n)):
            ga = family.action(sh.g, e)
            t.compare(sh.U @ gns.pi(e) @ u_inv, gns.pi(ga), g=sh.g, location=f"U, E_{k // n}{k % n}")
            t.compare(sh.V @ gns.jpij(e) @ v_inv, gns.jpij(ga), g=sh.g, location=f"V, E_{k // n}{k % n}")
    return t.verdict(HYP_SATISFIED)


MODULAR_RELATION_IDS = ("gns.exchange_S", "gns.exchange_F", "gns.delta_factorization",
                        "gns.relation_S", "gns.relation_delta", "gns.relation_US")


def check_modular_relations(gns: GnsSystem, family: CocycleFamily,
                            shift: GnsShift | Sequence[GnsShift],
                            tol: Tolerance = DEFAULT_TOL) -> list[Verdict]:
    """The six operator identities linking (S, F, Delta) of Omega and of Omega_g.

    exchange_S:  S_phi U_g = U_g S_g
    exchange_F:  F_phi V_g = V_g F_g
    delta_factorization:  Delta_g = F_g S_g = (V_g* F_phi V_g)(U_g* S_phi U_g)
    relation_S:  S_g = pi(x^-1/2) J pi(x^1/2) J S_phi
    relation_delta:  Delta_g^1/2 = pi(x^1/2) J pi(x^-1/2) J Delta_phi^1/2
    relation_US:  U_g S_g = pi(x^1/2) J pi(x^-1/2) J S_g U_g
    """
    if not family.strongly_quasi:
        return [not_applicable(c, "state is not G-strongly quasi invariant") for c in MODULAR_RELATION_IDS]
    shifts = [shift] if isinstance(shift, GnsShift) else list(shift)
    tr = {c: Tracker(c, tol) for c in MODULAR_RELATION_IDS}
    S, F = gns.S, gns.F
    d12 = gns.delta_power(0.5)
    for sh in shifts:
        g = sh.g
        U, V = sh.U, sh.V
        tr["gns.exchange_S"].compare((S @ U).matrix, (U @ sh.S).matrix, g=g)
        tr["gns.exchange_F"].compare((F @ V).matrix, (V @ sh.F).matrix, g=g)
        fs = sh.F @ sh.S
        tr["gns.delta_factorization"].compare(sh.delta, fs, g=g, location="Delta_g = F_g S_g")
        tr["gns.delta_factorization"].compare(
            fs, (dagger(V) @ F @ V) @ (dagger(U) @ S @ U), g=g,
            location="F_g S_g = (V* F V)(U* S U)")
        p_half, p_mhalf = gns.pi(sh.sqrt_x), gns.pi(sh.inv_sqrt_x)
        j_half, j_mhalf = gns.jpij(sh.sqrt_x), gns.jpij(sh.inv_sqrt_x)
        tr["gns.relation_S"].compare(sh.S.matrix, (p_mhalf @ j_half @ S).matrix, g=g)
        tr["gns.relation_delta"].compare(sh.tomita.delta_power(0.5), p_half @ j_mhalf @ d12, g=g)
        tr["gns.relation_US"].compare((U @ sh.S).matrix, (p_half @ j_mhalf @ sh.S @ U).matrix, g=g,
                                      location="U_g S_g = pi(x^1/2) J pi(x^-1/2) J S_g U_g")
        tr["gns.relation_US"].compare((U @ sh.S).matrix, (S @ U).matrix, g=g,
                                      location="U_g S_g = S_phi U_g")
    return [tr[c].verdict(HYP_SATISFIED) for c in MODULAR_RELATION_IDS]


# ---------------------------------------------------------------- invariant subspace

def projection_PG(gns: GnsSystem, shifts: Sequence[GnsShift]) -> np.ndarray:
    """Haar mean of the U_g: the projection onto the U_G-fixed vectors."""
    return sum(sh.U for sh in shifts) / len(shifts)


def fixed_space_rank(shifts: Sequence[GnsShift], tol: Tolerance = DEFAULT_TOL) -> int:
    """Dimension of the joint fixed space from the null space of sum (U_g - 1)*(U_g - 1)."""
    eye = np.eye(shifts[0].U.shape[0])
    m = sum(dagger(sh.U - eye) @ (sh.U - eye) for sh in shifts)
    w = np.linalg.eigvalsh((m + dagger(m)) / 2)
    return int(np.sum(w <= tol.abs * np.sqrt(len(eye)) * max(1.0, float(w[-1]))))


def check_projection(gns, family, shifts, tol=DEFAULT_TOL) -> Verdict:
    cid = "gns.projection"
    if (na := _strong_only(cid, family)):
        return na
    t = Tracker(cid, tol)
    p = projection_PG(gns, shifts)
    t.compare(p @ p, p, location="P^2 = P")
    t.compare(dagger(p), p, location="P* = P")
    for sh in shifts:
        t.compare(p @ sh.U, p, g=sh.g, location="P U_g = P")
        t.compare(sh.U @ p, p, g=sh.g, location="U_g P = P")
    w, v = np.linalg.eigh((p + dagger(p)) / 2)
    range_vecs = v[:, w > 0.5]
    for sh in shifts:
        t.compare(sh.U @ range_vecs, range_vecs, g=sh.g, location="range vectors U_g-fixed")
    rank = range_vecs.shape[1]
    oracle = fixed_space_rank(shifts, tol)
    t.require(rank == oracle, abs(rank - oracle), location="rank(P) = dim joint fixed space")
    t.details.update(rank=rank)
    return t.verdict(HYP_SATISFIED)


def lifted_expectation(shifts: Sequence[GnsShift], op: np.ndarray) -> np.ndarray:
    """``(1/|G|) sum_g U_g op U_g*``."""
    return sum(sh.U @ op @ dagger(sh.U) for sh in shifts) / len(shifts)


def lifted_expectation_checks(gns: GnsSystem, family: CocycleFamily, P: np.ndarray,
                              shifts: Sequence[GnsShift], tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """Block identities of P_G against the lifted conditional expectation."""
    cid = "gns.lifted_expectation"
    if (na := _strong_only(cid, family)):
        return na
    t = Tracker(cid, tol)
    n = gns.base_dim
    q = np.eye(gns.space_dim) - P
    zero = np.zeros_like(P)
    for k, e in enumerate(matrix_units(n)):
        loc = f"E_{k // n}{k % n}"
        pa = gns.pi(e)
        ea = lifted_expectation(shifts, pa)
        t.compare(ea, gns.pi(mean_over_group(family.action, e)), location=f"E~(pi a) = pi(E_G a), {loc}")
        pap = P @ pa @ P
        t.compare(pap, ea @ P, location=f"P pi P = E~ P, {loc}")
        t.compare(pap, P @ ea, location=f"P pi P = P E~, {loc}")
        t.compare(pap, P @ ea @ P, location=f"P pi P = P E~ P, {loc}")
        t.compare(q @ ea @ P, zero, location=f"P^perp E~ P = 0, {loc}")
        t.compare(P @ ea @ q, zero, location=f"P E~ P^perp = 0, {loc}")
        for sh in shifts:
            t.compare(sh.U @ ea @ dagger(sh.U), ea, g=sh.g, location=f"u_g(E~ pi a) = E~ pi a, {loc}")
    return t.verdict(HYP_SATISFIED)


def compressed_abelianness(gns: GnsSystem, family: CocycleFamily, P: np.ndarray,
                           shifts: Sequence[GnsShift], tol: Tolerance = DEFAULT_TOL) -> dict:
    """Abelianness of P R P versus P Fix(u_G) P (they must agree)."""
    n = gns.base_dim
    units = matrix_units(n)
    pis = gns.pi(units)
    # E_0j and E_j0 generate M_n, so they generate the same algebra as all matrix units
    gen_idx = [k for k in range(n * n) if k < n or k % n == 0]
    r_alg = generate_algebra(list(pis[gen_idx]) + [sh.U for sh in shifts], tol)
    fix = generate_algebra([lifted_expectation(shifts, p) for p in pis], tol)
    lhs_ops = span_basis(P @ r_alg.basis @ P, tol)
    rhs_ops = span_basis(P @ fix.basis @ P, tol)
    lhs, lw, _ = is_abelian(lhs_ops, tol)
    rhs, rw, _ = is_abelian(rhs_ops, tol)
    return {"lhs": lhs, "rhs": rhs, "agree": lhs == rhs, "lhs_worst": lw, "rhs_worst": rw,
            "R_dim": r_alg.dim, "fix_dim": fix.dim, "PRP_dim": lhs_ops.dim, "PFixP_dim": rhs_ops.dim}


def check_compressed_abelianness(gns, family, shifts, tol=DEFAULT_TOL) -> Verdict:
    cid = "gns.compressed_abelianness"
    if (na := _strong_only(cid, family)):
        return na
    res = compressed_abelianness(gns, family, projection_PG(gns, shifts), shifts, tol)
    return Verdict(cid, "holds" if res["agree"] else "fails",
                   max(res["lhs_worst"], res["rhs_worst"]) if not res["agree"] else 0.0,
                   HYP_SATISFIED, details=res)


def _shifts_for_subgroup(shifts: Sequence[GnsShift], elements) -> list[GnsShift]:
    return [shifts[g] for g in elements]


def subgroup_chain_limit(gns: GnsSystem, family: CocycleFamily, chain: Sequence[Sequence[int]],
                         shifts: Sequence[GnsShift], tol: Tolerance = DEFAULT_TOL) -> dict:
    """Nested projections P_N of an exhausting chain and the limit ``E_N(pi a) P_G -> P_G pi(a) P_G``.

    Stage deviations use the operator norm so that monotonicity is a theorem,
    not an artefact of the entrywise norm.
    """
    grp = family.action.group
    sets = [sorted(set(int(g) for g in c)) for c in chain]
    if not sets:
        raise ChainNotNested("empty chain")
    for i, s in enumerate(sets):
        if not grp.is_subgroup(s):
            raise ChainNotNested(f"stage {i} is not a subgroup: {s}")
        if i and not set(sets[i - 1]) <= set(s):
            raise ChainNotNested(f"stage {i - 1} is not contained in stage {i}")
    if len(sets[-1]) != grp.order:
        raise ChainNotNested("the chain does not exhaust the group")
    n = gns.base_dim
    units = matrix_units(n)
    pis = gns.pi(units)
    p_g = projection_PG(gns, shifts)
    stages = []
    prev = None
    for s in sets:
        sub = _shifts_for_subgroup(shifts, s)
        p_n = projection_PG(gns, sub)
        nested = 0.0 if prev is None else float(np.linalg.norm(p_n @ prev - p_n, 2))
        block = 0.0
        limit = 0.0
        for pa in pis:
            ea = lifted_expectation(sub, pa)
            pap = p_n @ pa @ p_n
            block = max(block, float(np.max(np.abs(pap - ea @ p_n))),
                        float(np.max(np.abs(pap - p_n @ ea))),
                        float(np.max(np.abs(pap - p_n @ ea @ p_n))))
            limit = max(limit, float(np.linalg.norm(ea @ p_g - p_g @ pa @ p_g, 2)))
        stages.append({"order": len(s), "rank": int(round(np.trace(p_n).real)),
                       "nested_deviation": nested, "block_deviation": block,
                       "limit_deviation": limit})
        prev = p_n
    final_equal = approx_equal(prev, p_g, tol)[0]
    return {"stages": stages, "final_projection_equal": final_equal}


def check_subgroup_chain(gns, family, chain, shifts, tol=DEFAULT_TOL) -> Verdict:
    cid = "gns.subgroup_chain"
    if (na := _strong_only(cid, family)):
        return na
    rep = subgroup_chain_limit(gns, family, chain, shifts, tol)
    t = Tracker(cid, tol)
    st = rep["stages"]
    for i, s in enumerate(st):
        t.small(s["nested_deviation"], location=f"stage {i} nested")
        t.small(s["block_deviation"], location=f"stage {i} block identities")
        if i:
            t.require(s["limit_deviation"] <= st[i - 1]["limit_deviation"] + tol.abs,
                      max(0.0, s["limit_deviation"] - st[i - 1]["limit_deviation"]),
                      location=f"stage {i} limit deviation non-increasing")
    t.small(st[-1]["limit_deviation"], location="final stage limit identity")
    t.require(rep["final_projection_equal"], location="P_N = P_G at the final stage")
    t.details["limit_deviations"] = [s["limit_deviation"] for s in st]
    t.details["ranks"] = [s["rank"] for s in st]
    return t.verdict(HYP_SATISFIED)

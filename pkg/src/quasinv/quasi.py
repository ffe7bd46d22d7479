"""Faithful states, Radon-Nikodym cocycles of a group action, and their averages."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .algebra import AlgebraBasis, commutant, fixed_point_algebra, generate_algebra, is_abelian
from .errors import DimensionMismatch, InvariantViolation, NotFaithful, NotStronglyQuasiInvariant
from .group import GroupAction, mean_over_group
from .linalg import (
    DEFAULT_TOL,
    HermitianSpectrum,
    Tolerance,
    approx_equal,
    as_operator,
    dagger,
    hermiticity_deviation,
    matrix_from_json,
    matrix_to_json,
    matrix_units,
    max_norm,
)
from .verdict import HYP_SATISFIED, Tracker, Verdict, not_applicable

INVARIANT = "G-invariant"
STRONG = "strongly-quasi-invariant"
QUASI = "quasi-invariant-only"


@dataclass(frozen=True)
class FaithfulState:
    """``phi(a) = Tr(rho a)`` with ``rho`` strictly positive and of unit trace."""

    density: np.ndarray
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        rho = as_operator(self.density)
        dev = hermiticity_deviation(rho)
        if dev > self.tol.threshold(max_norm(rho)):
            raise NotFaithful(f"density is not Hermitian (deviation {dev:.3e})")
        rho = (rho + dagger(rho)) / 2
        ok, tr_dev = approx_equal(np.trace(rho), 1.0, self.tol)
        if not ok:
            raise NotFaithful(f"Tr rho = {np.trace(rho).real:.12g}")
        lam = np.linalg.eigvalsh(rho)[0]
        if lam <= self.tol.abs:
            raise NotFaithful(f"smallest eigenvalue {lam:.3e}")
        object.__setattr__(self, "density", rho)

    @property
    def dim(self) -> int:
        return self.density.shape[0]

    def __call__(self, a) -> complex:
        a = np.asarray(a)
        # batched over leading axes: Tr(rho a) = sum_ij rho_ij a_ji
        return np.einsum("ij,...ji->...", self.density, a)

    @cached_property
    def spectrum(self) -> HermitianSpectrum:
        return HermitianSpectrum(self.density, self.tol)

    @cached_property
    def inverse_density(self) -> np.ndarray:
        return self.spectrum.power(-1)

    def to_json(self) -> dict:
        return matrix_to_json(self.density)

    @classmethod
    def from_json(cls, obj, tol: Tolerance = DEFAULT_TOL) -> "FaithfulState":
        return cls(matrix_from_json(obj), tol)


def _check_dims(state: FaithfulState, action: GroupAction):
    if state.dim != action.dim:
        raise DimensionMismatch(f"state dim {state.dim} vs action dim {action.dim}")


def cocycle_of(state: FaithfulState, action: GroupAction, g: int) -> np.ndarray:
    """Unique ``x_g`` with ``phi(g(a)) = phi(x_g a)``: ``rho^-1 u^dagger rho u``."""
    _check_dims(state, action)
    u = action.unitary(g)
    x = np.linalg.solve(state.density, dagger(u) @ state.density @ u)
    dev = defining_relation_deviation(state, action, g, x)
    if dev > state.tol.threshold(1.0):
        raise InvariantViolation(f"cocycle of element {g} misses its defining relation by {dev:.3e}")
    return x


def defining_relation_deviation(state, action, g, x) -> float:
    """``max_ij |phi(g(E_ij)) - phi(x E_ij)|``."""
    units = matrix_units(state.dim)
    lhs = state(np.array([action(g, e) for e in units]))
    rhs = state(x @ units)
    return max_norm(lhs - rhs)


@dataclass(frozen=True)
class CocycleFamily:
    state: FaithfulState
    action: GroupAction
    cocycles: np.ndarray  # (|G|, n, n)
    classification: str
    hermiticity_deviation: float
    invariance_deviation: float
    residuals: dict = field(default_factory=dict)
    unbounded_witness: bool = False  # no unbounded affiliated cocycle exists in M_n

    @property
    def strongly_quasi(self) -> bool:
        return self.classification in (STRONG, INVARIANT)

    @property
    def invariant(self) -> bool:
        return self.classification == INVARIANT

    def __getitem__(self, g: int) -> np.ndarray:
        return self.cocycles[g]

    def to_json(self) -> dict:
        return {
            "classification": self.classification,
            "hermiticity_deviation": self.hermiticity_deviation,
            "invariance_deviation": self.invariance_deviation,
            "cocycles": [matrix_to_json(x) for x in self.cocycles],
            "residuals": dict(self.residuals),
        }


def cocycle_residuals(family_cocycles: np.ndarray, action: GroupAction) -> dict[str, float]:
    """Deviations of ``x_e = 1``, the chain rule and the inverse law."""
    grp = action.group
    x = family_cocycles
    n = action.dim
    eye = np.eye(n)
    ident = max_norm(x[grp.identity] - eye)
    chain = 0.0
    for g1 in action.elements():
        for g2 in action.elements():
            lhs = x[grp.mul(g2, g1)]
            rhs = x[g1] @ action.maps[g1].inverse(x[g2])
            chain = max(chain, max_norm(lhs - rhs))
    inv = 0.0
    for g in action.elements():
        rhs = action.maps[g].inverse(x[grp.inv(g)])
        inv = max(inv, max_norm(x[g] @ rhs - eye), max_norm(rhs @ x[g] - eye))
    return {"identity": ident, "chain": chain, "inverse": inv}


def classify_invariance(state: FaithfulState, action: GroupAction,
                        tol: Tolerance | None = None) -> CocycleFamily:
    """Compute every cocycle and place the state in the strongest class it satisfies.

    Borderline cases fall to the weaker class; the deviations are kept.
    """
    tol = tol or state.tol
    _check_dims(state, action)
    xs = np.array([cocycle_of(state, action, g) for g in action.elements()])
    eye = np.eye(state.dim)
    herm_ok = all(approx_equal(x, dagger(x), tol)[0] for x in xs)
    inv_ok = all(approx_equal(x, eye, tol)[0] for x in xs)
    herm_dev = max(hermiticity_deviation(x) for x in xs)
    inv_dev = max(max_norm(x - eye) for x in xs)
    if inv_ok and herm_ok:
        cls = INVARIANT
    elif herm_ok:
        cls = STRONG
    else:
        cls = QUASI
    return CocycleFamily(state, action, xs, cls, herm_dev, inv_dev,
                         cocycle_residuals(xs, action))


def _require_strong(family: CocycleFamily):
    if not family.strongly_quasi:
        raise NotStronglyQuasiInvariant(
            f"classification is {family.classification} "
            f"(hermiticity deviation {family.hermiticity_deviation:.3e})")


def kappa(family: CocycleFamily) -> np.ndarray:
    """Haar mean of the cocycles; Hermitian, positive definite, boundedly invertible."""
    _require_strong(family)
    k = family.cocycles.mean(axis=0)
    k = (k + dagger(k)) / 2
    HermitianSpectrum(k, family.state.tol).require_positive_definite()
    return k


def averaged_state(state: FaithfulState, family: CocycleFamily) -> FaithfulState:
    """``phi_G(a) = phi(kappa a)``, verified to equal ``phi(E_G(a))`` and G-invariant."""
    k = kappa(family)
    b = k @ state.density
    tol = state.tol
    ok, dev = approx_equal(b, dagger(b), tol)
    if not ok:
        raise InvariantViolation(f"kappa rho is not Hermitian ({dev:.3e}): kappa outside Centr(phi)")
    phi_g = FaithfulState(b, tol)
    action = family.action
    for e in matrix_units(state.dim):
        if not approx_equal(state(k @ e), state(mean_over_group(action, e)), tol)[0]:
            raise InvariantViolation("phi(kappa a) != phi(E_G(a))")
        for g in action.elements():
            if not approx_equal(phi_g(action(g, e)), phi_g(e), tol)[0]:
                raise InvariantViolation("phi_G is not G-invariant")
    return phi_g


def centralizer(state: FaithfulState, tol: Tolerance | None = None) -> AlgebraBasis:
    """``{x : phi(xy) = phi(yx)}``, computed as the commutant of ``rho``."""
    tol = tol or state.tol
    return commutant(generate_algebra([state.density], tol), tol)


def cocycle_algebra(family: CocycleFamily, tol: Tolerance | None = None) -> AlgebraBasis:
    return generate_algebra(list(family.cocycles), tol or family.state.tol)


# ---------------------------------------------------------------- checks

def check_defining_relation(family: CocycleFamily, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    t = Tracker("quasi.defining_relation", tol)
    st, act = family.state, family.action
    units = matrix_units(st.dim)
    for g in act.elements():
        lhs = st(np.array([act(g, e) for e in units]))
        rhs = st(family[g] @ units)
        for k in range(len(units)):
            t.compare(lhs[k], rhs[k], g=g, location=f"E_{k // st.dim}{k % st.dim}")
    return t.verdict()


def check_cocycle_laws(family: CocycleFamily, tol: Tolerance = DEFAULT_TOL) -> list[Verdict]:
    """Normalisation, chain rule over all pairs, and the inverse law."""
    act, x = family.action, family.cocycles
    grp = act.group
    eye = np.eye(act.dim)
    t_id = Tracker("quasi.cocycle_identity", tol)
    t_id.compare(x[grp.identity], eye, g=grp.identity)
    t_chain = Tracker("quasi.cocycle_chain", tol)
    for g1 in act.elements():
        for g2 in act.elements():
            t_chain.compare(x[grp.mul(g2, g1)], x[g1] @ act.maps[g1].inverse(x[g2]),
                            g=[g1, g2], location="x_{g2 g1} vs x_g1 g1^-1(x_g2)")
    t_inv = Tracker("quasi.cocycle_inverse", tol)
    for g in act.elements():
        t_inv.compare(np.linalg.inv(x[g]), act.maps[g].inverse(x[grp.inv(g)]), g=g)
    return [t_id.verdict(), t_chain.verdict(), t_inv.verdict()]


def check_adjoint_relation(family: CocycleFamily, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """``phi(x_g a) = phi(a x_g^dagger)`` on matrix units."""
    t = Tracker("quasi.cocycle_adjoint_relation", tol)
    st = family.state
    units = matrix_units(st.dim)
    for g in family.action.elements():
        x = family[g]
        lhs = st(x @ units)
        rhs = st(units @ dagger(x))
        t.compare(lhs, rhs, g=g)
    return t.verdict()


def check_strong_structure(family: CocycleFamily, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """Strictly positive, pairwise commuting cocycles; abelian cocycle algebra inside Centr(phi)."""
    cid = "quasi.strong_structure"
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    t = Tracker(cid, tol)
    xs = family.cocycles
    for g, x in enumerate(xs):
        lam = np.linalg.eigvalsh((x + dagger(x)) / 2)[0]
        t.require(lam > tol.abs, deviation=max(0.0, -lam), g=g, location="min eigenvalue")
        for h in range(g + 1, len(xs)):
            t.compare(x @ xs[h], xs[h] @ x, g=[g, h], location="[x_g, x_h]")
    c_alg = cocycle_algebra(family, tol)
    ab, worst, _ = is_abelian(c_alg, tol)
    t.require(ab, worst, location="cocycle algebra abelian")
    ok, res = centralizer(family.state, tol).contains_span(c_alg, tol)
    t.require(ok, res, location="cocycle algebra in Centr(phi)")
    t.details["cocycle_algebra_dim"] = c_alg.dim
    return t.verdict(HYP_SATISFIED)


def check_kappa_centralizers(family: CocycleFamily, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """kappa and kappa^-1 lie in Centr(phi) and in Centr(phi_G)."""
    cid = "quasi.kappa_centralizers"
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    t = Tracker(cid, tol)
    k = kappa(family)
    k_inv = np.linalg.inv(k)
    phi = family.state
    phi_g = averaged_state(phi, family)
    units = matrix_units(phi.dim)
    for name, s in (("phi", phi), ("phi_G", phi_g)):
        for label, y in (("kappa", k), ("kappa^-1", k_inv)):
            t.compare(s(y @ units), s(units @ y), location=f"{label} in Centr({name})")
    return t.verdict(HYP_SATISFIED)


def check_averaged_state(family: CocycleFamily, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    cid = "quasi.averaged_state"
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    t = Tracker(cid, tol)
    phi, act = family.state, family.action
    k = kappa(family)
    phi_g = averaged_state(phi, family)
    units = matrix_units(phi.dim)
    means = np.array([mean_over_group(act, e) for e in units])
    t.compare(phi(k @ units), phi(means), location="phi(kappa a) = phi(E_G a)")
    t.compare(phi_g(np.eye(phi.dim)), 1.0, location="phi_G(1)")
    for g in act.elements():
        t.compare(phi_g(np.array([act(g, e) for e in units])), phi_g(units), g=g,
                  location="phi_G o g = phi_G")
    # phi(x) = phi_G(kappa^-1 x)
    t.compare(phi(units), phi_g(np.linalg.inv(k) @ units), location="phi = phi_G(kappa^-1 .)")
    return t.verdict(HYP_SATISFIED)


def check_fixed_cocycle_lemma(family: CocycleFamily, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """Any cocycle lying in F(G) equals the identity."""
    cid = "quasi.fixed_cocycle_lemma"
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    t = Tracker(cid, tol)
    fg = fixed_point_algebra(family.action.maps, tol=tol)
    eye = np.eye(family.state.dim)
    in_fg = []
    for g, x in enumerate(family.cocycles):
        if fg.contains(x, tol):
            in_fg.append(g)
            t.compare(x, eye, g=g, location="x_g in F(G) => x_g = 1")
    t.details["elements_with_fixed_cocycle"] = len(in_fg)
    return t.verdict(HYP_SATISFIED)

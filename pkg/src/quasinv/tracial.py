"""Tracial decomposition of a strongly quasi-invariant state, reported as a diagnostic.

On the factor M_n the G-invariant trace is Tr up to a scalar, so the density
``c`` with ``phi(a) = Tr(c a)`` is forced to be ``rho``.  Whether ``c`` is
fixed by G is measured, not asserted.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import center, fixed_point_algebra, full_algebra, intersect
from .errors import ErgodicityHypothesisFailed
from .group import GroupAction
from .linalg import (
    DEFAULT_TOL,
    HermitianSpectrum,
    Tolerance,
    dagger,
    matrix_to_json,
    matrix_units,
)
from .quasi import CocycleFamily, FaithfulState, centralizer, kappa
from .verdict import HYP_SATISFIED, Tracker, Verdict, not_applicable


def ergodic_on_center(action: GroupAction, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, int]:
    """``F(G) ∩ Z = C 1``; returns the flag and the intersection dimension."""
    z = center(full_algebra(action.dim), tol)
    meet = intersect(fixed_point_algebra(action.maps, tol=tol), z, tol)
    return meet.dim == 1, meet.dim


def mean_density_checks(state: FaithfulState, family: CocycleFamily,
                        tol: Tolerance = DEFAULT_TOL) -> list[Verdict]:
    """kappa is Hermitian, positive definite and in Centr(phi); phi(kappa .) is a G-invariant state."""
    cid = "tracial.mean_density"
    if not family.strongly_quasi:
        return [not_applicable(cid, "state is not G-strongly quasi invariant")]
    ergodic, meet_dim = ergodic_on_center(family.action, tol)
    if not ergodic:
        err = ErgodicityHypothesisFailed(f"dim(F(G) ∩ Z) = {meet_dim}")
        return [not_applicable(cid, str(err))]
    t = Tracker(cid, tol)
    k = family.cocycles.mean(axis=0)
    t.compare(k, dagger(k), location="kappa Hermitian")
    k = (k + dagger(k)) / 2
    lam = HermitianSpectrum(k, tol).min_eigenvalue
    t.require(lam > tol.abs, max(0.0, -lam), location="kappa positive definite")
    t.details["kappa_min_eigenvalue"] = float(lam)
    rho = state.density
    t.compare(k @ rho, rho @ k, location="kappa in Centr(phi)")
    t.small(centralizer(state, tol).residual(k), location="kappa in Centr(phi) (subspace residual)")
    b = k @ rho
    t.compare(b, dagger(b), location="phi_G Hermitian")
    t.compare(np.trace(b), 1.0, location="phi_G(1) = 1")
    t.require(np.linalg.eigvalsh((b + dagger(b)) / 2)[0] > 0, location="phi_G positive")
    units = matrix_units(state.dim)
    act = family.action
    for g in act.elements():
        t.compare(state(k @ act(g, units)), state(k @ units), g=g, location="phi_G o g = phi_G")
    return [t.verdict(HYP_SATISFIED)]


@dataclass
class TracialDecomposition:
    trace_density: np.ndarray
    b: np.ndarray
    c: np.ndarray
    c_in_FG_residual: float
    residuals: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "trace_density": matrix_to_json(self.trace_density),
            "b": matrix_to_json(self.b),
            "c": matrix_to_json(self.c),
            "c_in_FG_residual": float(self.c_in_FG_residual),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }


def tracial_decomposition(state: FaithfulState, family: CocycleFamily,
                          tol: Tolerance = DEFAULT_TOL) -> TracialDecomposition:
    """tau = Tr, b = kappa rho (density of phi_G), c = b kappa^-1 with phi(a) = Tr(c a)."""
    ergodic, meet_dim = ergodic_on_center(family.action, tol)
    if not ergodic:
        raise ErgodicityHypothesisFailed(f"dim(F(G) ∩ Z) = {meet_dim}")
    k = kappa(family)
    n = state.dim
    tau = np.eye(n, dtype=complex)
    b = k @ state.density
    k_inv = HermitianSpectrum(k, tol).power(-1)
    c = b @ k_inv
    units = matrix_units(n)
    act = family.action
    fg = fixed_point_algebra(act.maps, tol=tol)
    ab = units[:, None] @ units[None, :]
    res = {
        "reconstruction": float(np.max(np.abs(state(units) - np.einsum("ij,kji->k", c, units)))),
        "trace_property": float(np.max(np.abs(np.trace(ab, axis1=-2, axis2=-1)
                                              - np.trace(np.swapaxes(ab, 0, 1), axis1=-2, axis2=-1)))),
        "trace_invariance": max(float(np.max(np.abs(np.trace(act(g, units), axis1=-2, axis2=-1)
                                                    - np.trace(units, axis1=-2, axis2=-1))))
                                for g in act.elements()),
        "b_in_FG": fg.residual(b),
        "b_kappa_inv_commutator": float(np.max(np.abs(b @ k_inv - k_inv @ b))),
        "b_hermitian": float(np.max(np.abs(b - dagger(b)))),
    }
    return TracialDecomposition(tau, b, c, fg.residual(c), res)


def check_tracial_decomposition(state: FaithfulState, family: CocycleFamily,
                                tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """Every invariant of the decomposition; the residual of c against F(G) is data only."""
    cid = "tracial.decomposition"
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    try:
        dec = tracial_decomposition(state, family, tol)
    except ErgodicityHypothesisFailed as exc:
        return not_applicable(cid, str(exc))
    t = Tracker(cid, tol)
    for name, value in dec.residuals.items():
        t.small(value, location=name)
    t.compare(dec.c, state.density, location="c = rho")
    t.details["c_in_FG_residual"] = float(dec.c_in_FG_residual)
    t.details["c_in_FG"] = bool(dec.c_in_FG_residual <= tol.threshold(1.0))
    return t.verdict(HYP_SATISFIED)

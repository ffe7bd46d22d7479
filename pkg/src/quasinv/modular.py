"""Modular automorphism group of a faithful state and the theorems tying it to G.

``sigma_t(a) = rho^{it} a rho^{-it}``.  Statements "for all t" are checked at a
finite sample of times; both sides are trigonometric polynomials in t with
finitely many frequencies, so a failure cannot hide between generic samples.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .algebra import (
    AlgebraBasis,
    center,
    fixed_point_algebra,
    full_algebra,
    generate_algebra,
    span_basis,
)
from .group import GroupAction, mean_over_group
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    approx_equal,
    as_operator,
    dagger,
    hermitian_power,
    matrix_units,
)
from .quasi import CocycleFamily, FaithfulState, averaged_state, centralizer, cocycle_of, kappa
from .verdict import HYP_SATISFIED, Tracker, Verdict, not_applicable

DEFAULT_TIMES = (0.0, 0.37, -0.37, 1.0, -1.0, 2.5, -2.5, np.pi)
CLUSTER_GAP = 1e-6


@dataclass(frozen=True)
class ModularFlow:
    state: FaithfulState
    sample_times: tuple = DEFAULT_TIMES

    def unitary(self, t: float) -> np.ndarray:
        """``rho^{it}``."""
        return self.state.spectrum.power(complex(0.0, t))

    def __call__(self, a, t: float) -> np.ndarray:
        u = self.unitary(t)
        return u @ np.asarray(a) @ dagger(u)


def modular_flow_apply(flow: ModularFlow, a, t: float) -> np.ndarray:
    a = as_operator(a, flow.state.dim)
    return flow(a, t)


def modular_invariant_expectation(flow: ModularFlow, x) -> np.ndarray:
    """Pinching ``sum_k P_k x P_k`` over the spectral projections of ``rho``.

    This is the phi-preserving conditional expectation onto Centr(phi), i.e.
    the ergodic (Cesaro) mean of ``t -> sigma_t(x)``.
    """
    x = np.asarray(x, dtype=complex)
    projs = flow.state.spectrum.spectral_projections(CLUSTER_GAP)
    return sum(p @ x @ p for p in projs)


def cesaro_mean(flow: ModularFlow, x, horizon: float = 200.0, nodes: int = 4001) -> np.ndarray:
    """Trapezoidal ``(1/2T) int_{-T}^{T} sigma_t(x) dt``; converges to the pinching as O(1/T)."""
    x = as_operator(x, flow.state.dim)
    ts = np.linspace(-horizon, horizon, nodes)
    w = np.full(nodes, ts[1] - ts[0])
    w[[0, -1]] /= 2
    spec = flow.state.spectrum
    # sigma_t(x)_ij in the eigenbasis is exp(it(log l_i - log l_j)) x_ij
    v = spec.eigenvectors
    y = dagger(v) @ x @ v
    logs = np.log(spec.eigenvalues)
    freq = logs[:, None] - logs[None, :]
    avg = np.einsum("t,tij->ij", w, np.exp(1j * ts[:, None, None] * freq[None])) / (2 * horizon)
    return v @ (avg * y) @ dagger(v)


def _times(flow: ModularFlow, extra=()) -> list[float]:
    return [float(t) for t in (*flow.sample_times, *extra)]


def _loc(k: int, n: int) -> str:
    return f"E_{k // n}{k % n}"


@lru_cache(maxsize=64)
def _center(n: int, tol: Tolerance) -> AlgebraBasis:
    return center(full_algebra(n), tol)


# ---------------------------------------------------------------- checks

def check_flow_laws(flow: ModularFlow, tol: Tolerance = DEFAULT_TOL, extra_times=()) -> Verdict:
    t = Tracker("modular.flow_laws", tol)
    phi = flow.state
    n = phi.dim
    units = matrix_units(n)
    times = _times(flow, extra_times)
    t.compare(flow(units, 0.0), units, t=0.0, location="sigma_0 = id")
    for s in times:
        for r in times[:4]:
            t.compare(flow(flow(units, r), s), flow(units, s + r), t=[s, r],
                      location="sigma_s o sigma_r = sigma_{s+r}")
        t.compare(phi(flow(units, s)), phi(units), t=s, location="phi o sigma_t = phi")
    return t.verdict()


def check_expectation_properties(flow: ModularFlow, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """Pinching is idempotent, phi-preserving, sigma-invariant, with range Centr(phi)."""
    t = Tracker("modular.expectation_properties", tol)
    phi = flow.state
    n = phi.dim
    units = matrix_units(n)
    images = np.array([modular_invariant_expectation(flow, e) for e in units])
    for k, (e, y) in enumerate(zip(units, images)):
        t.compare(modular_invariant_expectation(flow, y), y, location=f"idempotent {_loc(k, n)}")
        t.compare(phi(y), phi(e), location=f"phi-preserving {_loc(k, n)}")
        for s in flow.sample_times:
            t.compare(flow(y, s), y, t=s, location=f"sigma-invariant {_loc(k, n)}")
    rng = span_basis(images, tol)
    cent = centralizer(phi, tol)
    t.require(rng.same_span(cent, tol), location="range == Centr(phi)")
    t.details["centralizer_dim"] = cent.dim
    return t.verdict()


def _batched_mean(action: GroupAction, xs: np.ndarray) -> np.ndarray:
    return sum(u @ xs @ dagger(u) for u in (action.unitary(g) for g in action.elements())) / action.order


def check_group_mean_properties(action: GroupAction, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """E_G projects onto F(G), fixes F(G), is a *-preserving bimodule map, and is invariant."""
    t = Tracker("modular.group_mean_properties", tol)
    n = action.dim
    units = matrix_units(n)
    fg = fixed_point_algebra(action.maps, tol=tol)
    grp = action.group
    for k, e in enumerate(units):
        y = mean_over_group(action, e)
        loc = _loc(k, n)
        for g in action.elements():
            t.compare(action(g, y), y, g=g, location=f"g(E_G x) = E_G x, {loc}")
        t.compare(mean_over_group(action, y), y, location=f"idempotent {loc}")
        t.compare(mean_over_group(action, dagger(e)), dagger(y), location=f"*-map {loc}")
        for h in action.elements():
            shifted_r = sum(action(grp.mul(g, h), e) for g in action.elements()) / action.order
            shifted_l = sum(action(grp.mul(h, g), e) for g in action.elements()) / action.order
            t.compare(shifted_r, y, g=h, location=f"right invariance {loc}")
            t.compare(shifted_l, y, g=h, location=f"left invariance {loc}")
    means = _batched_mean(action, units)
    for i, a in enumerate(fg.basis):
        t.compare(mean_over_group(action, a), a, location=f"E_G fixes F(G) basis {i}")
        for j, b in enumerate(fg.basis):
            t.compare(_batched_mean(action, a @ units @ b), a @ means @ b,
                      location=f"bimodule F(G)[{i}], matrix units, F(G)[{j}]")
    t.details["fixed_algebra_dim"] = fg.dim
    return t.verdict()


def check_twisted_flow(flow: ModularFlow, family: CocycleFamily,
                       tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """``sigma^phi_t = kappa^{-it} sigma^G_t kappa^{it}`` and phi is sigma^G-invariant."""
    cid = "modular.twisted_flow"
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    t = Tracker(cid, tol)
    phi = flow.state
    k = kappa(family)
    flow_g = ModularFlow(averaged_state(phi, family), flow.sample_times)
    units = matrix_units(phi.dim)
    for s in flow.sample_times:
        kp = hermitian_power(k, complex(0, -s))
        rhs = kp @ flow_g(units, s) @ dagger(kp)
        t.compare(flow(units, s), rhs, t=s, location="kappa-twisted modular group")
        t.compare(phi(flow_g(units, s)), phi(units), t=s, location="phi o sigma^G_t = phi")
    return t.verdict(HYP_SATISFIED)


def check_factor_cocycle_relation(flow: ModularFlow, family: CocycleFamily,
                                  tol: Tolerance = DEFAULT_TOL, extra_times=()) -> Verdict:
    """``g^-1 o sigma_t(a) = x_g^{it} (sigma_t o g^-1)(a) x_g^{-it}`` on the factor M_n."""
    cid = "modular.factor_cocycle_relation"
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    t = Tracker(cid, tol)
    act = family.action
    units = matrix_units(flow.state.dim)
    for g in act.elements():
        ginv = act.maps[g].inverse
        ginv_units = ginv(units)
        for s in _times(flow, extra_times):
            xp = hermitian_power(family[g], complex(0, s))
            lhs = ginv(flow(units, s))
            rhs = xp @ flow(ginv_units, s) @ dagger(xp)
            t.compare(lhs, rhs, g=g, t=s)
    return t.verdict(HYP_SATISFIED)


def flow_group_deviation(flow: ModularFlow, action: GroupAction, times,
                         tol: Tolerance = DEFAULT_TOL) -> tuple[float, bool, dict]:
    """Worst ``|sigma_t(g(a)) - g(sigma_t(a))|`` and whether all comparisons pass."""
    units = matrix_units(flow.state.dim)
    worst, ok, where = 0.0, True, {}
    for g in action.elements():
        for s in times:
            lhs = flow(action(g, units), s)
            rhs = action(g, flow(units, s))
            good, dev = approx_equal(lhs, rhs, tol)
            ok = ok and good
            if dev > worst:
                worst, where = dev, {"g": g, "t": s}
    return worst, ok, where


def check_flow_group_commutation(flow: ModularFlow, action: GroupAction,
                                 tol: Tolerance = DEFAULT_TOL, extra_times=()) -> Verdict:
    """Flow and G commute  <=>  every cocycle is Hermitian and central."""
    phi = flow.state
    worst, commute, where = flow_group_deviation(flow, action, _times(flow, extra_times), tol)
    z = _center(phi.dim, tol)
    central_res = 0.0
    central = True
    for g in action.elements():
        x = cocycle_of(phi, action, g)
        central_res = max(central_res, z.residual(x))
        central = central and z.contains(x, tol) and approx_equal(x, dagger(x), tol)[0]
    status = "holds" if commute == central else "fails"
    return Verdict("modular.flow_group_commutation", status, worst, witnesses=[where] if where else [],
                   details={"commute": commute, "central_cocycles": central,
                            "central_residual": central_res})


def check_invariant_case(flow: ModularFlow, family: CocycleFamily,
                         tol: Tolerance = DEFAULT_TOL, extra_times=()) -> Verdict:
    """A G-invariant state has a modular group commuting with G."""
    cid = "modular.invariant_case"
    if not family.invariant:
        return not_applicable(cid, "state is not G-invariant")
    t = Tracker(cid, tol)
    units = matrix_units(flow.state.dim)
    for g in family.action.elements():
        for s in _times(flow, extra_times):
            t.compare(flow(family.action(g, units), s), family.action(g, flow(units, s)), g=g, t=s)
    return t.verdict(HYP_SATISFIED)


def check_state_level_commutation(flow: ModularFlow, family: CocycleFamily,
                                  tol: Tolerance = DEFAULT_TOL, extra_times=()) -> Verdict:
    """``phi(g(sigma_t(a))) = phi(sigma_t(g(a)))``, and phi o g is sigma-invariant."""
    cid = "modular.state_level_commutation"
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    t = Tracker(cid, tol)
    phi, act = flow.state, family.action
    units = matrix_units(phi.dim)
    for g in act.elements():
        for s in _times(flow, extra_times):
            t.compare(phi(act(g, flow(units, s))), phi(flow(act(g, units), s)), g=g, t=s)
            t.compare(phi(act(g, flow(units, s))), phi(act(g, units)), g=g, t=s,
                      location="phi_g o sigma_t = phi_g")
    return t.verdict(HYP_SATISFIED)


def check_mean_modular_commutation(flow: ModularFlow, family: CocycleFamily,
                                   tol: Tolerance = DEFAULT_TOL, extra_times=()) -> list[Verdict]:
    """State-level identity (always) and map-level identity (when flow and G commute)."""
    ids = ("modular.mean_state_level", "modular.mean_map_level")
    if not family.strongly_quasi:
        return [not_applicable(c, "state is not G-strongly quasi invariant") for c in ids]
    phi, act = flow.state, family.action
    units = matrix_units(phi.dim)
    times = _times(flow, extra_times)
    eps = np.array([mean_over_group(act, e) for e in units])
    t1 = Tracker(ids[0], tol)
    t2 = Tracker(ids[1], tol)
    for s in times:
        eps_sigma = np.array([mean_over_group(act, y) for y in flow(units, s)])
        t1.compare(phi(eps), phi(flow(eps, s)), t=s, location="phi o eps = phi o sigma o eps")
        t1.compare(phi(eps), phi(eps_sigma), t=s, location="phi o eps = phi o eps o sigma")
        t2.compare(flow(eps, s), eps_sigma, t=s, location="sigma o eps = eps o sigma")
    _, commute, _ = flow_group_deviation(flow, act, times, tol)
    v2 = t2.verdict(HYP_SATISFIED)
    if not commute:
        v2 = not_applicable(ids[1], "flow and G do not commute",
                            observed_deviation=t2.max_deviation)
    return [t1.verdict(HYP_SATISFIED), v2]


def check_sufficient_condition(flow: ModularFlow, family: CocycleFamily,
                               tol: Tolerance = DEFAULT_TOL, extra_times=()) -> Verdict:
    """If C is central or Centr(phi) is inside F(G), then sigma_t o E_G = E_G o sigma_t."""
    cid = "modular.sufficient_condition"
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    phi, act = flow.state, family.action
    c_alg = generate_algebra(list(family.cocycles), tol)
    c_central = _center(phi.dim, tol).contains_span(c_alg, tol)[0]
    fg = fixed_point_algebra(act.maps, tol=tol)
    cent_in_fg = fg.contains_span(centralizer(phi, tol), tol)[0]
    if not (c_central or cent_in_fg):
        return not_applicable(cid, "C is not central and Centr(phi) is not inside F(G)")
    t = Tracker(cid, tol)
    units = matrix_units(phi.dim)
    eps = np.array([mean_over_group(act, e) for e in units])
    for s in _times(flow, extra_times):
        eps_sigma = np.array([mean_over_group(act, y) for y in flow(units, s)])
        t.compare(flow(eps, s), eps_sigma, t=s)
    t.details.update(c_central=c_central, centralizer_in_fixed=cent_in_fg)
    return t.verdict(HYP_SATISFIED)


def check_inclusion(flow: ModularFlow, family: CocycleFamily,
                    tol: Tolerance = DEFAULT_TOL, extra_times=()) -> Verdict:
    """E_G(Centr(phi)) in Centr(phi) and sigma_t(F(G)) in F(G) when flow and G commute."""
    cid = "modular.inclusion"
    if not family.strongly_quasi:
        return not_applicable(cid, "state is not G-strongly quasi invariant")
    phi, act = flow.state, family.action
    times = _times(flow, extra_times)
    _, commute, _ = flow_group_deviation(flow, act, times, tol)
    if not commute:
        return not_applicable(cid, "flow and G do not commute")
    t = Tracker(cid, tol)
    cent = centralizer(phi, tol)
    fg = fixed_point_algebra(act.maps, tol=tol)
    for i, c in enumerate(cent.basis):
        t.small(cent.residual(mean_over_group(act, c)), location=f"E_G(Centr[{i}])")
    for i, f in enumerate(fg.basis):
        for s in times:
            t.small(fg.residual(flow(f, s)), t=s, location=f"sigma_t(F(G)[{i}])")
    return t.verdict(HYP_SATISFIED)


def check_ergodic_coincidence(flow: ModularFlow, family: CocycleFamily,
                              tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """``E_G(x) = T(x)`` for a G-invariant phi with Centr(phi) inside F(G)."""
    cid = "modular.ergodic_coincidence"
    if not family.invariant:
        return not_applicable(cid, "state is not G-invariant")
    phi, act = flow.state, family.action
    fg = fixed_point_algebra(act.maps, tol=tol)
    cent = centralizer(phi, tol)
    contained, res = fg.contains_span(cent, tol)
    if not contained:
        return not_applicable(cid, "Centr(phi) is not contained in F(G)",
                              containment_residual=res)
    t = Tracker(cid, tol)
    n = phi.dim
    for k, e in enumerate(matrix_units(n)):
        t.compare(mean_over_group(act, e), modular_invariant_expectation(flow, e), location=_loc(k, n))
    # the two ranges are F(G) and Centr(phi); the identity can only hold when they coincide
    t.details.update(centralizer_dim=cent.dim, fixed_algebra_dim=fg.dim,
                     centralizer_equals_fixed=bool(cent.dim == fg.dim))
    return t.verdict(HYP_SATISFIED)


def invariance_predicates(flow: ModularFlow, family: CocycleFamily,
                          tol: Tolerance = DEFAULT_TOL, extra_times=()) -> dict[str, bool]:
    """The three equivalent characterisations of G-invariance, evaluated independently."""
    phi, act = flow.state, family.action
    units = matrix_units(phi.dim)
    invariant = all(approx_equal(phi(act(g, units)), phi(units), tol)[0] for g in act.elements())
    fg = fixed_point_algebra(act.maps, tol=tol)
    hermitian = all(approx_equal(x, dagger(x), tol)[0] for x in family.cocycles)
    c_in_fg = hermitian and fg.contains_span(generate_algebra(list(family.cocycles), tol), tol)[0]
    _, commute, _ = flow_group_deviation(flow, act, _times(flow, extra_times), tol)
    all_in_fg = all(fg.contains(x, tol) for x in family.cocycles)
    return {"invariant": invariant, "strong_and_C_in_F": bool(c_in_fg),
            "commute_and_cocycles_in_F": bool(commute and all_in_fg)}


def check_invariance_equivalence(flow: ModularFlow, family: CocycleFamily,
                                 tol: Tolerance = DEFAULT_TOL, extra_times=()) -> Verdict:
    preds = invariance_predicates(flow, family, tol, extra_times)
    agree = len(set(preds.values())) == 1
    return Verdict("modular.invariance_equivalence", "holds" if agree else "fails",
                   family.invariance_deviation, details=preds)

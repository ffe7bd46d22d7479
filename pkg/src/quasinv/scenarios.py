"""The four worked examples and the random instance generators used by fuzz."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path

import numpy as np

from .algebra import fixed_point_algebra
from .errors import InvalidParams
from .group import GroupAction, build_action, cyclic_group, cyclic_subgroup_chain
from .linalg import (
    DEFAULT_TOL,
    HermitianSpectrum,
    Tolerance,
    dagger,
    load_matrices,
    matrix_units,
)
from .modular import DEFAULT_TIMES, ModularFlow
from .quasi import INVARIANT, QUASI, STRONG, FaithfulState, centralizer, classify_invariance, kappa
from .verdict import Tracker, Verdict

EX1_DEFAULT_DIM = 3
EX2_DEFAULT_BETA = float(np.log(2.0))
EX3_DEFAULT_SITES = 3
EX4_DEFAULT_LAMBDA = 0.7
FUZZ_KINDS = ("generic", "strong", "commuting")
EIGEN_FLOOR = 1e-3


@dataclass
class Scenario:
    id: str
    parameters: dict
    state: FaithfulState | None = None
    action: GroupAction | None = None
    chain: list | None = None
    example_verdicts: list = field(default_factory=list)
    classification: str | None = None  # set directly only when G is not finite (Example 1)
    extra_times: tuple = ()


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


# ---------------------------------------------------------------- Example 1

def _random_positive(rng, n, floor=EIGEN_FLOOR):
    w = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    p = w @ dagger(w)
    p = p / np.trace(p).real + floor * np.eye(n)
    return p / np.trace(p).real


def example1(dim: int = EX1_DEFAULT_DIM, seed: int = 0, tol: Tolerance = DEFAULT_TOL,
             times=DEFAULT_TIMES) -> Scenario:
    """G = R acting by the modular group of omega; phi = omega(K^-1 .) with random K.

    The density ``rho K^-1`` of phi is in general not Hermitian, so phi is handled
    as a functional and the flow is sampled at finitely many times.
    """
    if dim < 2:
        raise InvalidParams("ex1 needs dim >= 2")
    rng = np.random.default_rng(seed)
    rho = _random_positive(rng, dim)
    k = _random_positive(rng, dim)
    omega = FaithfulState(rho, tol)
    spec = omega.spectrum
    k_inv = HermitianSpectrum(k, tol).power(-1)
    scale = np.trace(rho @ k_inv).real  # omega(K^-1) = 1 after rescaling K
    k, k_inv = k * scale, k_inv / scale
    dens = rho @ k_inv  # phi(a) = Tr(rho K^-1 a)

    def phi(a):
        return np.einsum("ij,...ji->...", dens, a)

    def sigma(a, t):
        u = spec.power(complex(0, t))
        return u @ a @ dagger(u)

    def x(t):
        return k @ sigma(k_inv, -t)

    units = matrix_units(dim)
    ts = [float(t) for t in times]
    xs = {t: x(t) for t in ts}
    eye = np.eye(dim)

    qi = Tracker("ex1.quasi_invariance", tol)
    for t in ts:
        qi.compare(phi(sigma(units, t)), phi(xs[t] @ units), t=t, location="phi(sigma_t(a)) = phi(x_t a)")

    law = Tracker("ex1.cocycle_law", tol)
    law.compare(x(0.0), eye, t=0.0, location="x_0 = 1")
    for t in ts:
        law.compare(xs[t] @ sigma(x(-t), -t), eye, t=t, location="x_t sigma_-t(x_-t) = 1")
        for s in ts:
            law.compare(x(s + t), xs[t] @ sigma(xs[s], -t), t=[t, s], location="x_{s+t} = x_t sigma_-t(x_s)")

    norm = Tracker("ex1.normalization", tol)
    norm.compare(omega(k_inv), 1.0, location="omega(K^-1) = 1")
    norm.compare(phi(eye), 1.0, location="phi(1) = 1")
    for t in ts:
        norm.compare(omega(sigma(units, t)), omega(units), t=t, location="omega o sigma_t = omega")

    herm = all(np.allclose(xs[t], dagger(xs[t]), atol=tol.threshold(np.max(np.abs(xs[t]))), rtol=0)
               for t in ts)
    triv = all(np.allclose(xs[t], eye, atol=tol.threshold(1.0), rtol=0) for t in ts)
    cls = INVARIANT if triv else (STRONG if herm else QUASI)
    dens_herm = float(np.max(np.abs(dens - dagger(dens))))
    norm.details.update(density_hermiticity_deviation=dens_herm,
                        functional_is_state=bool(dens_herm <= tol.threshold(1.0)
                                                 and np.linalg.eigvalsh((dens + dagger(dens)) / 2)[0] > 0))
    return Scenario("ex1", {"dim": dim, "seed": seed},
                    example_verdicts=[qi.verdict(), law.verdict(), norm.verdict()],
                    classification=cls)


# ---------------------------------------------------------------- Example 2

def example2_action(tol: Tolerance = DEFAULT_TOL) -> GroupAction:
    """Z_4 with element k acting as a -> U_{-theta} a U_theta, theta = k pi/2."""
    return build_action(cyclic_group(4), [rotation(-k * np.pi / 2) for k in range(4)], tol)


def example2(beta: float = EX2_DEFAULT_BETA, tol: Tolerance = DEFAULT_TOL) -> Scenario:
    if not np.isfinite(beta):
        raise InvalidParams("ex2 needs a finite real beta")
    lam = 1.0 / (1.0 + np.exp(-beta))
    if not 0 < lam < 1 or min(lam, 1 - lam) <= tol.abs:
        raise InvalidParams(f"beta = {beta} makes rho numerically singular")
    state = FaithfulState(np.diag([lam, 1 - lam]).astype(complex), tol)
    action = example2_action(tol)
    scen = Scenario("ex2", {"beta": float(beta), "lambda": float(lam)}, state, action,
                    chain=[[0], [0, 2], [0, 1, 2, 3]])
    scen.example_verdicts = [example2_closed_forms(state, action, lam, beta, tol)]
    return scen


def example2_closed_forms(state, action, lam, beta, tol) -> Verdict:
    """Cocycles, kappa, phi_G and E_G against their closed forms."""
    t = Tracker("ex2.closed_forms", tol)
    fam = classify_invariance(state, action, tol)
    eye = np.eye(2)
    for k in range(4):
        th = k * np.pi / 2
        c2, s2 = np.cos(2 * th), np.sin(2 * th)
        closed = np.array([[(1 + (2 * lam - 1) * c2) / (2 * lam), (2 * lam - 1) / (2 * lam) * s2],
                           [(2 * lam - 1) / (2 * (1 - lam)) * s2, (1 + (1 - 2 * lam) * c2) / (2 * (1 - lam))]])
        t.compare(fam[k], closed, g=k, location="x_theta general formula")
        # x = K g_{-theta}(K^-1) with K = (2 rho)^-1
        kk = np.linalg.inv(2 * state.density)
        t.compare(fam[k], kk @ action(action.group.inv(k), np.linalg.inv(kk)), g=k,
                  location="x = K g_-theta(K^-1)")
    for k in (0, 2):
        t.compare(fam[k], eye, g=k, location="x_0 = x_pi = 1")
    for k in (1, 3):
        t.compare(fam[k], np.diag([np.exp(-beta), np.exp(beta)]), g=k, location="x_pi/2 = x_3pi/2 = diag(e^-b, e^b)")
        t.compare(fam[k], np.diag([(1 - lam) / lam, lam / (1 - lam)]), g=k, location="x = diag((1-l)/l, l/(1-l))")
    kap = kappa(fam)
    t.compare(kap, 0.5 * np.diag([1 / lam, 1 / (1 - lam)]), location="kappa")
    units = matrix_units(2)
    t.compare(state(kap @ units), np.trace(units, axis1=1, axis2=2) / 2, location="phi_G = Tr/2")
    for kk, e in enumerate(units):
        a = e
        s, d = a[0, 0] + a[1, 1], a[0, 1] - a[1, 0]
        closed = 0.5 * np.array([[s, d], [-d, s]])
        mean = sum(action(g, a) for g in range(4)) / 4
        t.compare(mean, closed, location=f"E_G(E_{kk // 2}{kk % 2})")
    t.require(fam.strongly_quasi, location="strongly quasi-invariant")
    t.details["classification"] = fam.classification
    return t.verdict()


# ---------------------------------------------------------------- Example 3

def translation_unitary(sites: int) -> np.ndarray:
    """Permutation unitary P with P (v_0 x ... x v_{N-1}) = v_1 x ... x v_{N-1} x v_0."""
    dim = 2 ** sites
    p = np.zeros((dim, dim))
    for idx in range(dim):
        bits = [(idx >> (sites - 1 - i)) & 1 for i in range(sites)]
        shifted = bits[1:] + bits[:1]
        out = 0
        for b in shifted:
            out = 2 * out + b
        p[out, idx] = 1.0
    return p.astype(complex)


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats)


def example3_k_default(sites: int) -> list[np.ndarray]:
    return [np.diag([1.0, 2.0 + i]).astype(complex) for i in range(sites)]


def load_k_file(path: str | Path, sites: int) -> list[np.ndarray]:
    mats = load_matrices(path)
    if len(mats) == 1:
        return mats * sites
    if len(mats) != sites:
        raise InvalidParams(f"--k-file holds {len(mats)} matrices for {sites} sites")
    return mats


def example3(sites: int = EX3_DEFAULT_SITES, ks=None, tol: Tolerance = DEFAULT_TOL) -> Scenario:
    if sites < 2:
        raise InvalidParams("ex3 needs at least 2 sites")
    ks = example3_k_default(sites) if ks is None else [np.asarray(k, dtype=complex) for k in ks]
    if len(ks) != sites:
        raise InvalidParams(f"{len(ks)} site operators for {sites} sites")
    for i, k in enumerate(ks):
        if k.shape != (2, 2):
            raise InvalidParams(f"K_{i} must be 2x2, got {k.shape}")
        if np.max(np.abs(k - np.diag(np.diag(k)))) > tol.abs:
            raise InvalidParams(f"K_{i} must be diagonal")
        d = np.diag(k)
        if np.max(np.abs(d.imag)) > tol.abs or np.min(d.real) <= 0:
            raise InvalidParams(f"K_{i} must have strictly positive diagonal")
    dim = 2 ** sites
    k_full = kron_all([np.diag(np.diag(k).real) for k in ks]).astype(complex)
    k_inv = np.diag(1 / np.diag(k_full))
    scale = np.trace(k_inv).real / dim  # omega(K^-1) = 1 after rescaling
    k_full, k_inv = k_full * scale, k_inv / scale
    state = FaithfulState(k_inv / dim, tol)
    p = translation_unitary(sites)
    action = build_action(cyclic_group(sites), [np.linalg.matrix_power(p, n) for n in range(sites)], tol)
    params = {"sites": sites, "K": [np.diag(k).real.tolist() for k in ks]}
    scen = Scenario("ex3", params, state, action, chain=cyclic_subgroup_chain(sites))
    uniform = all(np.allclose(k, ks[0]) for k in ks)
    scen.example_verdicts = [example3_closed_forms(state, action, ks, k_full, k_inv, uniform, tol)]
    return scen


def example3_closed_forms(state, action, ks, k_full, k_inv, uniform, tol) -> Verdict:
    t = Tracker("ex3.closed_forms", tol)
    sites = len(ks)
    rng = np.random.default_rng(0)
    for _ in range(3):
        local = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(sites)]
        t.compare(action(1, kron_all(local)), kron_all(local[1:] + local[:1]),
                  location="tau(a_0 x ... x a_N-1) = a_1 x ... x a_0")
    fam = classify_invariance(state, action, tol)
    grp = action.group
    for n in range(sites):
        t.compare(fam[n], k_full @ action(grp.inv(n), k_inv), g=n, location="x_gn = K g_{N-n}(K^-1)")
        t.compare(fam[n], dagger(fam[n]), g=n, location="x_gn Hermitian")
    kap = kappa(fam)
    t.compare(kap, k_full @ sum(action(n, k_inv) for n in range(sites)) / sites, location="kappa")
    units = matrix_units(2 ** sites)
    lhs = state(kap @ units)
    rhs = sum(state(np.array([action(n, e) for e in units])) for n in range(sites)) / sites
    t.compare(lhs, rhs, location="phi_G = mean of phi o g_n")
    omega_units = np.trace(units, axis1=1, axis2=2) / 2 ** sites
    for n in range(sites):
        t.compare(np.array([np.trace(action(n, e)) for e in units]) / 2 ** sites, omega_units,
                  g=n, location="omega G-invariant")
    if uniform:
        for n in range(sites):
            t.compare(fam[n], np.eye(2 ** sites), g=n, location="K_i = K_0 => x_g = 1")
        t.require(fam.invariant, location="K_i = K_0 => G-invariant")
        flow = ModularFlow(state)
        kd = HermitianSpectrum(k_full, tol)
        for s in flow.sample_times:
            kp = kd.power(complex(0, -s))
            t.compare(flow(units, s), kp @ units @ dagger(kp), t=s, location="sigma_t(a) = K^-it a K^it")
    t.details["uniform_K"] = bool(uniform)
    t.details["classification"] = fam.classification
    return t.verdict()


# ---------------------------------------------------------------- Example 4

def example4(lam: float = EX4_DEFAULT_LAMBDA, mu: float | None = None,
             tol: Tolerance = DEFAULT_TOL) -> Scenario:
    mu = 1.0 - lam if mu is None else mu
    if not (lam > 0 and mu > 0):
        raise InvalidParams("ex4 needs lambda, mu > 0")
    if abs(lam + mu - 1.0) > tol.abs:
        raise InvalidParams(f"ex4 needs lambda + mu = 1, got {lam + mu}")
    state = FaithfulState(np.diag([lam, mu]).astype(complex), tol)
    sz = np.diag([1.0, -1.0]).astype(complex)
    action = build_action(cyclic_group(2), [np.eye(2, dtype=complex), sz], tol)
    scen = Scenario("ex4", {"lambda": float(lam), "mu": float(mu)}, state, action, chain=[[0], [0, 1]])
    scen.example_verdicts = [example4_spin_flip(state, action, lam, mu, tol)]
    return scen


def example4_spin_flip(state, action, lam, mu, tol) -> Verdict:
    t = Tracker("ex4.spin_flip", tol)
    units = matrix_units(2)
    for kk, a in enumerate(units):
        flipped = a * np.array([[1, -1], [-1, 1]])
        t.compare(action(1, a), flipped, location=f"sigma_z(E_{kk // 2}{kk % 2})")
    fam = classify_invariance(state, action, tol)
    t.require(fam.invariant, fam.invariance_deviation, location="G-invariant")
    flow = ModularFlow(state)
    for s in flow.sample_times:
        r = (lam / mu) ** complex(0, s)
        closed = units * np.array([[1, r], [1 / r, 1]])
        t.compare(flow(units, s), closed, t=s, location="sigma_t closed form")
        t.compare(flow(action(1, units), s), action(1, flow(units, s)), t=s, location="G and sigma commute")
    fg = fixed_point_algebra(action.maps, tol=tol)
    diag = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    t.require(fg.dim == 2 and fg.contains_span(diag, tol)[0], location="F(G) = diagonals")
    if abs(lam - mu) > tol.abs:
        cent = centralizer(state, tol)
        t.require(cent.dim == 2 and cent.contains_span(diag, tol)[0], location="Centr(phi) = diagonals")
        t.require(cent.same_span(fg, tol), location="Centr(phi) = F(G)")
    t.details["lambda_equals_mu"] = bool(abs(lam - mu) <= tol.abs)
    return t.verdict()


# ---------------------------------------------------------------- fuzz instances

def random_density(rng, n: int) -> np.ndarray:
    """``W W^dagger / Tr + eps 1``, renormalised."""
    return _random_positive(rng, n)


def haar_unitary(rng, n: int) -> np.ndarray:
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def signed_permutation(rng, n: int, order: int) -> np.ndarray:
    """Signed permutation whose cycles have length dividing ``order`` and sign product +1."""
    perm = rng.permutation(n)
    u = np.zeros((n, n), dtype=complex)
    pos = 0
    divs = _divisors(order)
    while pos < n:
        choices = [d for d in divs if d <= n - pos]
        length = int(rng.choice(choices))
        cyc = perm[pos:pos + length]
        signs = rng.choice([-1.0, 1.0], size=length)
        signs[-1] = np.prod(signs[:-1]) if length > 1 else 1.0
        for i in range(length):
            u[cyc[(i + 1) % length], cyc[i]] = signs[i]
        pos += length
    return u


def fuzz_instance(rng, dim: int, order: int, kind: str, tol: Tolerance = DEFAULT_TOL):
    """Random (state, action) of the given kind; Z_order acts by powers of one unitary."""
    if kind == "generic":
        rho = random_density(rng, dim)
        v = haar_unitary(rng, dim)
        phases = np.exp(2j * np.pi * rng.integers(0, order, size=dim) / order)
        u = v @ np.diag(phases) @ dagger(v)
    elif kind == "strong":
        rho = np.diag(rng.uniform(EIGEN_FLOOR, 1.0, size=dim)).astype(complex)
        rho /= np.trace(rho).real
        u = signed_permutation(rng, dim, order)
    elif kind == "commuting":
        rho = np.diag(rng.uniform(EIGEN_FLOOR, 1.0, size=dim)).astype(complex)
        rho /= np.trace(rho).real
        u = np.diag(np.exp(2j * np.pi * rng.integers(0, order, size=dim) / order))
    else:
        raise InvalidParams(f"unknown fuzz kind {kind!r}")
    us = [np.linalg.matrix_power(u, m) for m in range(order)]
    return FaithfulState(rho, tol), build_action(cyclic_group(order), us, tol)


def parse_group_spec(spec: str) -> int:
    kind, _, arg = spec.partition(":")
    if kind != "cyclic" or not arg.isdigit() or int(arg) < 1:
        raise InvalidParams(f"group spec must look like cyclic:N, got {spec!r}")
    return int(arg)

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from quasinv.algebra import commutant, fixed_point_algebra, generate_algebra
from quasinv.linalg import DEFAULT_TOL, hermitian_power, matrix_units
from quasinv.modular import ModularFlow, modular_invariant_expectation
from quasinv.quasi import FaithfulState, classify_invariance, cocycle_residuals, kappa
from quasinv.report import fuzz_trial
from quasinv.scenarios import fuzz_instance, random_density

seeds = st.integers(0, 2 ** 32 - 1)
dims = st.integers(2, 4)
orders = st.integers(1, 4)
kinds = st.sampled_from(["generic", "strong", "commuting"])
prop = settings(max_examples=25, deadline=None)


@prop
@given(seeds, dims, st.floats(-3, 3))
def test_imaginary_powers_form_a_group(seed, n, t):
    h = random_density(np.random.default_rng(seed), n)
    u = hermitian_power(h, 1j * t)
    np.testing.assert_allclose(u @ hermitian_power(h, -1j * t), np.eye(n), atol=1e-10)


@prop
@given(seeds, dims)
def test_generate_algebra_is_idempotent(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    d = np.diag(rng.integers(0, 2, size=n).astype(float))
    alg = generate_algebra([d, d @ a @ d])
    again = generate_algebra(list(alg.basis))
    assert again.dim == alg.dim and again.same_span(alg)


@prop
@given(seeds, dims)
def test_double_commutant(seed, n):
    rng = np.random.default_rng(seed)
    d = np.diag(rng.integers(0, 3, size=n).astype(float))
    alg = generate_algebra([d])
    assert commutant(commutant(alg)).same_span(alg)


@prop
@given(seeds, dims, orders, kinds)
def test_cocycle_laws(seed, n, order, kind):
    state, act = fuzz_instance(np.random.default_rng(seed), n, order, kind)
    fam = classify_invariance(state, act)
    assert max(cocycle_residuals(fam.cocycles, act).values()) < 1e-9


@prop
@given(seeds, dims, orders)
def test_strong_kind_is_strongly_quasi_invariant(seed, n, order):
    state, act = fuzz_instance(np.random.default_rng(seed), n, order, "strong")
    fam = classify_invariance(state, act)
    assert fam.strongly_quasi
    k = kappa(fam)
    np.testing.assert_allclose(k @ state.density, state.density @ k, atol=1e-9)


@prop
@given(seeds, dims, orders)
def test_fixed_points_are_an_algebra(seed, n, order):
    _, act = fuzz_instance(np.random.default_rng(seed), n, order, "generic")
    fg = fixed_point_algebra(act.maps)
    assert max(fg.closure_deviations().values()) < 1e-9


@prop
@given(seeds, dims)
def test_pinching_is_a_state_preserving_idempotent(seed, n):
    state = FaithfulState(random_density(np.random.default_rng(seed), n))
    flow = ModularFlow(state)
    for e in matrix_units(n):
        p = modular_invariant_expectation(flow, e)
        np.testing.assert_allclose(modular_invariant_expectation(flow, p), p, atol=1e-12)
        assert abs(state(p) - state(e)) < 1e-12
        np.testing.assert_allclose(p @ state.density, state.density @ p, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(2, 3), st.integers(2, 3), kinds)
def test_random_trial_has_no_unexplained_failure(seed, n, order, kind):
    _, verdicts = fuzz_trial(n, order, kind, np.random.SeedSequence(seed), DEFAULT_TOL)
    for v in verdicts:
        if v.status != "fails":
            continue
        # the only known failure: E_G = T~ needs Centr(phi) = F(G), not just inclusion
        assert v.check_id == "modular.ergodic_coincidence", (v.check_id, v.witnesses)
        assert not v.details["centralizer_equals_fixed"]

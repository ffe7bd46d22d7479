import numpy as np
import pytest

from quasinv import gns as gnsmod
from quasinv.errors import ChainNotNested, NotStronglyQuasiInvariant
from quasinv.group import build_action, cyclic_group, cyclic_subgroup_chain
from quasinv.linalg import HermitianSpectrum, matrix_units
from quasinv.quasi import FaithfulState, classify_invariance
from quasinv.scenarios import example2_action, fuzz_instance, random_density, rotation


@pytest.fixture(scope="module")
def ex2():
    state = FaithfulState(np.diag([2 / 3, 1 / 3]))
    fam = classify_invariance(state, example2_action())
    g = gnsmod.build_gns(state)
    return g, fam, gnsmod.all_shifts(g, fam)


def test_delta_spectrum_for_diagonal_state(ex2):
    g, _, _ = ex2
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(g.delta)), [0.5, 1.0, 1.0, 2.0], atol=1e-12)


def test_inner_product_is_the_state(rng):
    state = FaithfulState(random_density(rng, 3))
    g = gnsmod.build_gns(state)
    a, b = rng.normal(size=(2, 3, 3)) + 1j * rng.normal(size=(2, 3, 3))
    assert g.inner(g.vector(a), g.vector(b)) == pytest.approx(state(a.conj().T @ b), abs=1e-12)
    np.testing.assert_allclose(g.pi(a) @ g.vector(b), g.vector(a @ b), atol=1e-12)


def test_standard_form_oracles(rng):
    # in the standard form a -> a rho^1/2: J is the adjoint and Delta is rho . rho^-1
    rho = random_density(rng, 3)
    state = FaithfulState(rho)
    g = gnsmod.build_gns(state)
    spec = HermitianSpectrum(rho)
    r, ri = spec.power(0.5), spec.power(-0.5)
    for e in matrix_units(3):
        np.testing.assert_allclose(g.J(g.vector(e)), g.vector(r @ e.conj().T @ ri), atol=1e-10)
        np.testing.assert_allclose(g.delta @ g.vector(e), g.vector(rho @ e @ np.linalg.inv(rho)), atol=1e-10)


def test_structure_and_flow_consistency(rng):
    g = gnsmod.build_gns(FaithfulState(random_density(rng, 4)))
    assert gnsmod.check_gns_structure(g).holds
    assert gnsmod.check_flow_consistency(g, [0.3, -1.7, 4.0]).holds


def test_shift_state_value_on_example2(ex2):
    g, _, shifts = ex2
    om = shifts[1].omega_g
    e00 = matrix_units(2)[0]
    assert np.vdot(om, g.pi(e00) @ om).real == pytest.approx(1 / 3, abs=1e-12)
    np.testing.assert_allclose(shifts[0].omega_g, g.omega, atol=1e-14)


def test_example2_every_gns_check_holds(ex2):
    g, fam, shifts = ex2
    verdicts = [gnsmod.check_shift_state(g, fam, shifts), gnsmod.check_natural_cone(g, fam, shifts),
                gnsmod.check_j_equality(g, fam, shifts), gnsmod.check_unitary_maps(g, fam, shifts),
                gnsmod.check_representation(g, fam, shifts), gnsmod.check_covariance(g, fam, shifts),
                *gnsmod.check_modular_relations(g, fam, shifts), gnsmod.check_projection(g, fam, shifts),
                gnsmod.lifted_expectation_checks(g, fam, gnsmod.projection_PG(g, shifts), shifts),
                gnsmod.check_compressed_abelianness(g, fam, shifts),
                gnsmod.check_subgroup_chain(g, fam, [[0], [0, 2], [0, 1, 2, 3]], shifts)]
    for v in verdicts:
        assert v.holds, (v.check_id, v.witnesses)
        assert v.max_deviation < 1e-12


def test_example2_chain_ranks(ex2):
    g, fam, shifts = ex2
    rep = gnsmod.subgroup_chain_limit(g, fam, [[0], [0, 2], [0, 1, 2, 3]], shifts)
    ranks = [s["rank"] for s in rep["stages"]]
    assert ranks == sorted(ranks, reverse=True) and ranks[0] == 4
    assert rep["final_projection_equal"]
    assert rep["stages"][-1]["limit_deviation"] < 1e-12
    assert gnsmod.fixed_space_rank(shifts) == ranks[-1]


def test_chain_errors(ex2):
    g, fam, shifts = ex2
    for chain in ([], [[0], [0, 1]], [[0], [0, 1, 2, 3], [0, 2]], [[0], [0, 2]]):
        with pytest.raises(ChainNotNested):
            gnsmod.subgroup_chain_limit(g, fam, chain, shifts)


def test_z8_rotation_chain_deviation_non_increasing():
    state = FaithfulState(np.eye(2) / 2)
    act = build_action(cyclic_group(8), [rotation(-k * np.pi / 4) for k in range(8)])
    fam = classify_invariance(state, act)
    g = gnsmod.build_gns(state)
    shifts = gnsmod.all_shifts(g, fam)
    rep = gnsmod.subgroup_chain_limit(g, fam, cyclic_subgroup_chain(8), shifts)
    devs = [s["limit_deviation"] for s in rep["stages"]]
    assert all(b <= a + 1e-12 for a, b in zip(devs, devs[1:]))
    assert devs[0] > 0.1 and devs[-1] < 1e-12
    assert gnsmod.check_subgroup_chain(g, fam, cyclic_subgroup_chain(8), shifts).holds


def test_representation_on_random_strong_instances(rng):
    for dim in (2, 3):
        state, act = fuzz_instance(rng, dim, 4, "strong")
        fam = classify_invariance(state, act)
        g = gnsmod.build_gns(state)
        shifts = gnsmod.all_shifts(g, fam)
        for sh in shifts:
            np.testing.assert_allclose(sh.U.conj().T @ sh.U, np.eye(dim * dim), atol=1e-10)
        assert gnsmod.check_representation(g, fam, shifts).holds
        assert gnsmod.compressed_abelianness(g, fam, gnsmod.projection_PG(g, shifts), shifts)["agree"]


def test_shift_requires_strong_quasi_invariance():
    rho = np.diag([0.8, 0.2])
    act = build_action(cyclic_group(8), [rotation(-k * np.pi / 4) for k in range(8)])
    fam = classify_invariance(FaithfulState(rho), act)
    g = gnsmod.build_gns(FaithfulState(rho))
    with pytest.raises(NotStronglyQuasiInvariant):
        gnsmod.shift_for(g, fam, 1)
    assert not gnsmod.check_natural_cone(g, fam, []).applicable


def test_antilinear_algebra(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    a = gnsmod.Antilinear(m)
    v, w = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    assert np.allclose(a(2j * v), -2j * a(v))
    # <A* x, y> = conj <x, A y>
    assert np.vdot(a.adjoint(w), v) == pytest.approx(np.conj(np.vdot(w, a(v))))
    np.testing.assert_allclose((a @ a) @ v, a(a(v)))
    b = np.eye(3) * 2 @ a
    np.testing.assert_allclose(b(v), 2 * a(v))

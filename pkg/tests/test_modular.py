import numpy as np
import pytest
import scipy.linalg as sla
from scipy.integrate import trapezoid

from quasinv.linalg import matrix_units
from quasinv.modular import ModularFlow, cesaro_mean, modular_invariant_expectation
from quasinv.quasi import FaithfulState
from quasinv.scenarios import random_density


def _quadrature_oracle(rho, x, horizon=200.0, nodes=4001):
    """Trapezoid over sigma_t(x) with sigma_t built from scipy expm/logm."""
    log_rho = sla.logm(rho)
    ts = np.linspace(-horizon, horizon, nodes)
    vals = np.array([sla.expm(1j * t * log_rho) @ x @ sla.expm(-1j * t * log_rho) for t in ts])
    return trapezoid(vals, ts, axis=0) / (2 * horizon)


def test_flow_is_a_one_parameter_group(rng):
    flow = ModularFlow(FaithfulState(random_density(rng, 3)))
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    np.testing.assert_allclose(flow(flow(a, 0.4), 1.1), flow(a, 1.5), atol=1e-12)
    np.testing.assert_allclose(flow(a, 0.0), a, atol=1e-12)


def test_flow_matches_scipy(rng):
    rho = random_density(rng, 3)
    flow = ModularFlow(FaithfulState(rho))
    a = rng.normal(size=(3, 3))
    u = sla.expm(0.8j * sla.logm(rho))
    np.testing.assert_allclose(flow(a, 0.8), u @ a @ u.conj().T, atol=1e-10)


def test_pinching_projects_onto_centralizer():
    flow = ModularFlow(FaithfulState(np.diag([0.5, 0.25, 0.25])))
    x = np.arange(9.0).reshape(3, 3)
    expected = np.array([[0, 0, 0], [0, 4, 5], [0, 7, 8.0]])
    np.testing.assert_allclose(modular_invariant_expectation(flow, x), expected, atol=1e-14)


def test_cesaro_quadrature_against_oracle(rng):
    rho = random_density(rng, 3)
    flow = ModularFlow(FaithfulState(rho))
    x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    oracle = _quadrature_oracle(rho, x, horizon=50.0, nodes=1001)
    np.testing.assert_allclose(cesaro_mean(flow, x, horizon=50.0, nodes=1001), oracle, atol=1e-9)


def _sinc_prediction(rho, x, horizon):
    """Continuous Cesaro mean in closed form: entry ij damped by sin(wT)/(wT)."""
    w, v = np.linalg.eigh(rho)
    freq = np.log(w)[:, None] - np.log(w)[None, :]
    damp = np.sinc(freq * horizon / np.pi)
    return v @ (damp * (v.conj().T @ x @ v)) @ v.conj().T


def test_cesaro_error_is_the_sinc_factor(rng):
    rho = random_density(rng, 3)
    flow = ModularFlow(FaithfulState(rho))
    for e in matrix_units(3):
        np.testing.assert_allclose(cesaro_mean(flow, e), _sinc_prediction(rho, e, 200.0), atol=1e-5)


def test_cesaro_converges_to_pinching(rng):
    rho = random_density(rng, 3)
    flow = ModularFlow(FaithfulState(rho))
    gap = np.min(np.diff(np.log(np.linalg.eigvalsh(rho))))
    for horizon, nodes in ((200.0, 4001), (2000.0, 40001)):
        err = max(np.max(np.abs(cesaro_mean(flow, e, horizon, nodes) - modular_invariant_expectation(flow, e)))
                  for e in matrix_units(3))
        assert err <= 1.0 / (gap * horizon)
    # a wide spectrum converges within 1e-3 at T = 200
    wide = FaithfulState(np.diag([1.0, 1e-3, 1e-6]) / 1.001001)
    flow = ModularFlow(wide)
    for e in matrix_units(3):
        assert np.max(np.abs(cesaro_mean(flow, e) - modular_invariant_expectation(flow, e))) < 1e-3


@pytest.mark.parametrize("t", [0.3, -2.0])
def test_kms_condition(rng, t):
    # phi(a sigma_{-i}(b)) = phi(b a) with sigma_{-i}(b) = rho b rho^-1
    rho = random_density(rng, 3)
    phi = FaithfulState(rho)
    a, b = rng.normal(size=(2, 3, 3))
    assert phi(a @ rho @ b @ np.linalg.inv(rho)) == pytest.approx(phi(b @ a), abs=1e-12)
    flow = ModularFlow(phi)
    assert phi(flow(a, t)) == pytest.approx(phi(a), abs=1e-12)

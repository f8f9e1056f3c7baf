import numpy as np
import pytest

from corrdyn.amplitudes import (
    ExchangeStatistics,
    InputProfile,
    TwoParticleAmplitude,
    VanishingAmplitudeError,
    amplitude_from_propagator,
    evolve_amplitude,
    g2_from_amplitude,
    initial_amplitude,
)
from corrdyn.network import build_network, paper_example_network
from corrdyn.propagator import IntegratorConfig, Propagator, evolve_exact

B, F, D = ExchangeStatistics.BOSON, ExchangeStatistics.FERMION, ExchangeStatistics.DISTINGUISHABLE
S = 1 / np.sqrt(2)


def brute_force(phi, u, sign):
    """Explicit double sum over the input sites, no matrix products."""
    n = u.shape[0]
    psi = np.zeros((n, n), dtype=complex)
    for p in range(n):
        for q in range(n):
            for m in range(n):
                for k in range(n):
                    psi[p, q] += phi[m, k] * (u[p, k] * u[q, m] + sign * u[p, m] * u[q, k])
    return psi


def test_boson_identity():
    psi = initial_amplitude(InputProfile.single(3, 1, 2), B).matrix
    assert psi[0, 1] == pytest.approx(S) and psi[1, 0] == pytest.approx(S)
    assert np.count_nonzero(psi) == 2


def test_fermion_sign_follows_minus_branch():
    # with U = 1 the minus branch puts -phi[m,n] at (m,n) and +phi[m,n] at (n,m)
    psi = initial_amplitude(InputProfile.single(3, 1, 2), F).matrix
    assert psi[0, 1] == pytest.approx(-S)
    assert psi[1, 0] == pytest.approx(S)


def test_fermion_diagonal_rejected():
    with pytest.raises(VanishingAmplitudeError, match="vanishing fermionic state"):
        initial_amplitude(InputProfile.single(3, 1, 1), F)


def test_input_profile_needs_unit_norm():
    with pytest.raises(ValueError):
        InputProfile(np.ones((2, 2)))
    assert InputProfile.normalized(np.ones((2, 2))).matrix[0, 0] == pytest.approx(0.5)


@pytest.mark.parametrize("stats, sign", [(B, 1), (F, -1)])
def test_symmetrization_matches_explicit_sum(rng, stats, sign):
    from conftest import random_network
    net = random_network(rng, 4)
    phi = InputProfile.normalized(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    u = evolve_exact(net, 1.3)
    psi = amplitude_from_propagator(phi, u, stats)
    want = brute_force(phi.matrix, u.matrix, sign)
    np.testing.assert_allclose(psi.matrix, want / np.linalg.norm(want), atol=1e-13)


def test_distinguishable_is_direct_term(rng):
    phi = InputProfile.single(3, 1, 2)
    u = evolve_exact(paper_example_network(), 0.7).matrix
    psi = amplitude_from_propagator(phi, Propagator(u, 0.7), D).matrix
    np.testing.assert_allclose(psi, np.outer(u[:, 1], u[:, 0]), atol=1e-14)


def test_uncoupled_global_phase():
    net = build_network([1.0, 2.0], [[0, 0], [0, 0]], [0, 0])
    psi0 = initial_amplitude(InputProfile.single(2, 1, 2), B)
    for t in (0.4, 3.0):
        psi = evolve_amplitude(net, psi0, t)
        np.testing.assert_allclose(psi.matrix, np.exp(3j * t) * psi0.matrix, atol=1e-13)


def test_zero_time_is_unchanged():
    psi0 = initial_amplitude(InputProfile.single(3, 1, 2), B)
    assert evolve_amplitude(paper_example_network(), psi0, 0.0) is psi0


def test_closed_form_equals_propagated_profile():
    net = paper_example_network()
    phi = InputProfile.single(3, 1, 2)
    via_psi = evolve_amplitude(net, initial_amplitude(phi, B), 7.5).matrix
    via_u = amplitude_from_propagator(phi, evolve_exact(net, 7.5), B).matrix
    np.testing.assert_allclose(via_psi, via_u, atol=1e-12)


def test_rk4_amplitude_matches_exact():
    net = paper_example_network()
    psi0 = initial_amplitude(InputProfile.single(3, 1, 2), F)
    a = evolve_amplitude(net, psi0, 10.0).matrix
    b = evolve_amplitude(net, psi0, 10.0, IntegratorConfig(method="fixed-step-rk4")).matrix
    assert np.abs(a - b).max() < 1e-9


def test_fermion_stays_antisymmetric():
    net = paper_example_network()
    psi0 = initial_amplitude(InputProfile.single(3, 1, 2), F)
    for t in (1.0, 10.0, 50.0):
        psi = evolve_amplitude(net, psi0, t)
        assert psi.exchange_residual() < 1e-12
        assert psi.norm_residual() < 1e-12
        assert np.abs(np.diag(g2_from_amplitude(psi))).max() < 1e-24


def test_g2_values():
    psi = TwoParticleAmplitude(np.array([[0, S, 0], [S, 0, 0], [0, 0, 0]]), B)
    g2 = g2_from_amplitude(psi)
    assert g2[0, 1] == pytest.approx(0.5) and g2[1, 0] == pytest.approx(0.5)
    assert g2.sum() == pytest.approx(1.0)

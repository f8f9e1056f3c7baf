import numpy as np
import pytest
from scipy.linalg import expm

from conftest import random_network
from corrdyn.amplitudes import ExchangeStatistics, InputProfile, initial_amplitude, g2_from_amplitude
from corrdyn.correlation import (
    CorrelationTensor,
    IntegrityError,
    StepSizeError,
    averaged_generator,
    coherent_generator,
    dephasing_coefficient,
    dephasing_generator,
    evolve_g4,
    exchange_elements,
    find_steady_state,
    flat_index,
    g2_from_g4,
    g4_from_amplitude,
    g4_snapshots,
    lindblad_oracle,
    mixture,
    swap_block_weights,
)
from corrdyn.network import build_network, hamiltonian, paper_example_network
from corrdyn.propagator import IntegratorConfig, evolve_exact
from corrdyn.states import CANONICAL_STATES, build_initial_g4

RK4 = IntegratorConfig(method="fixed-step-rk4")
B = ExchangeStatistics.BOSON


def state(label, n=3):
    return build_initial_g4(CANONICAL_STATES[label], n).g4


def test_flat_index_convention():
    assert flat_index(1, 1, 3) == 0
    assert flat_index(1, 2, 3) == 1
    assert flat_index(2, 1, 3) == 3
    assert flat_index(3, 3, 3) == 8


def test_pure_state_tensor_structure():
    g = state("i")
    want = np.zeros((9, 9))
    want[np.ix_([1, 3], [1, 3])] = 0.5
    np.testing.assert_allclose(g.matrix, want, atol=1e-15)
    g2 = state("ii")
    idx = [flat_index(1, 1, 3), flat_index(2, 2, 3)]
    np.testing.assert_allclose(g2.matrix[np.ix_(idx, idx)], 0.5)
    assert np.abs(g2.matrix).sum() == pytest.approx(2.0)


def test_rank_one(rng):
    phi = InputProfile.normalized(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    g = g4_from_amplitude(initial_amplitude(phi, B))
    s = np.linalg.svd(g.matrix, compute_uv=False)
    assert s[0] == pytest.approx(1.0) and s[1] < 1e-14


def test_g2_from_g4_matches_amplitude(rng):
    phi = InputProfile.normalized(rng.normal(size=(4, 4)))
    psi = initial_amplitude(phi, B)
    np.testing.assert_array_equal(g2_from_g4(g4_from_amplitude(psi)), g2_from_amplitude(psi))


def test_g2_integrity_error():
    m = np.eye(4, dtype=complex) / 4
    m[0, 0] += 1e-6j
    with pytest.raises(IntegrityError):
        g2_from_g4(CorrelationTensor(m))


def test_swap_weights():
    assert swap_block_weights(state("i")) == pytest.approx((1.0, 0.0))
    assert swap_block_weights(state("iv")) == pytest.approx((0.5, 0.5))
    psi = initial_amplitude(InputProfile.single(3, 1, 2), ExchangeStatistics.FERMION)
    assert swap_block_weights(g4_from_amplitude(psi)) == pytest.approx((0.0, 1.0))


@pytest.mark.parametrize("idx, want", [((1, 1, 1, 1), 0), ((1, 2, 2, 1), 0), ((1, 2, 1, 3), -2), ((1, 1, 2, 2), -8)])
def test_dephasing_coefficient_examples(idx, want):
    assert dephasing_coefficient(paper_example_network(2.0), *idx) == want


def test_exchange_coefficients_vanish_for_any_rates(rng):
    for _ in range(20):
        n = int(rng.integers(2, 6))
        net = random_network(rng, n, uniform_energy=True)
        for p in range(1, n + 1):
            assert dephasing_coefficient(net, p, p, p, p) == 0
            for q in range(1, n + 1):
                if p != q:
                    assert dephasing_coefficient(net, p, q, q, p) == 0


def test_dephasing_coefficient_bad_index():
    with pytest.raises(IndexError):
        dephasing_coefficient(paper_example_network(), 1, 2, 3, 4)


def test_generator_matches_lindblad_oracle(rng):
    for _ in range(20):
        net = random_network(rng, int(rng.integers(1, 5)))
        diff = np.abs(averaged_generator(net).dense() - lindblad_oracle(net).dense()).max()
        assert diff < 1e-12


def test_zero_rates_reduce_to_coherent(rng):
    net = random_network(rng, 3).with_rates([0, 0, 0])
    np.testing.assert_array_equal(averaged_generator(net).dense(), coherent_generator(net).dense())
    assert np.abs(dephasing_generator(net).dense()).max() == 0


def test_uncoupled_uniform_energy_has_no_coherent_action():
    net = build_network([0.7] * 3, np.zeros((3, 3)), [1, 1, 1])
    assert np.abs(coherent_generator(net).dense()).max() == 0


def test_matrix_free_matches_sparse(rng, monkeypatch):
    import corrdyn.correlation as corr
    net = random_network(rng, 3)
    v = rng.normal(size=81) + 1j * rng.normal(size=81)
    want = averaged_generator(net).apply(v)
    monkeypatch.setattr(corr, "MATERIALIZE_MAX_SITES", 2)
    gen = corr.averaged_generator(net)
    assert gen.matrix is None
    np.testing.assert_allclose(gen.apply(v), want, atol=1e-12)
    for kind in (corr.coherent_generator, corr.dephasing_generator):
        monkeypatch.setattr(corr, "MATERIALIZE_MAX_SITES", 8)
        a = kind(net).apply(v)
        monkeypatch.setattr(corr, "MATERIALIZE_MAX_SITES", 2)
        np.testing.assert_allclose(kind(net).apply(v), a, atol=1e-12)


def test_coherent_evolution_matches_two_particle_unitary():
    net = paper_example_network(0.0)
    g0 = state("iv")
    u = evolve_exact(net, 3.0).matrix
    u2 = np.kron(u, u)
    got = evolve_g4(coherent_generator(net), g0, 3.0, RK4).matrix
    np.testing.assert_allclose(got, u2 @ g0.matrix @ u2.conj().T, atol=1e-10)


def test_averaged_evolution_matches_expm_oracle(rng):
    net = random_network(rng, 3)
    g0 = state("ii")
    lin = lindblad_oracle(net).dense()
    want = (expm(lin * 2.0) @ g0.matrix.ravel()).reshape(9, 9)
    got = evolve_g4(averaged_generator(net), g0, 2.0, IntegratorConfig(step_size=1e-3)).matrix
    assert np.abs(got - want).max() < 1e-9


def test_immunity_under_evolution():
    net = build_network([1, 1, 1], np.zeros((3, 3)), [2, 2, 2])
    g0 = CorrelationTensor(np.full((9, 9), 1 / 9, dtype=complex))
    g1 = evolve_g4(averaged_generator(net), g0, 1.0, RK4)
    ex0, ex1 = exchange_elements(g0), exchange_elements(g1)
    assert np.abs(ex1 - ex0).max() < 1e-10
    assert np.abs(np.diag(g1.matrix) - np.diag(g0.matrix)).max() < 1e-10
    assert abs(g1.element(1, 2, 1, 3) - np.exp(-2.0) / 9) < 1e-8


def test_step_size_guard():
    gen = averaged_generator(paper_example_network())
    with pytest.raises(StepSizeError, match="step_size"):
        evolve_g4(gen, state("i"), 1.0, IntegratorConfig(step_size=0.1))


def test_zero_time_returns_initial():
    g0 = state("i")
    g = evolve_g4(averaged_generator(paper_example_network()), g0, 0.0, RK4)
    np.testing.assert_array_equal(g.matrix, g0.matrix)


def test_snapshots_are_composable():
    gen = averaged_generator(paper_example_network())
    g0 = state("i")
    snaps = g4_snapshots(gen, g0, [0.0, 1.0, 2.0], RK4)
    direct = evolve_g4(gen, g0, 2.0, RK4)
    assert [s.time for s in snaps] == [0.0, 1.0, 2.0]
    assert np.abs(snaps[-1].matrix - direct.matrix).max() < 1e-12
    with pytest.raises(ValueError):
        g4_snapshots(gen, g0, [1.0, 0.5], RK4)


def test_linearity_over_mixtures():
    gen = averaged_generator(paper_example_network())
    mix = mixture([(0.3, state("i")), (0.7, state("ii"))])
    lhs = evolve_g4(gen, mix, 1.5, RK4).matrix
    rhs = 0.3 * evolve_g4(gen, state("i"), 1.5, RK4).matrix + 0.7 * evolve_g4(gen, state("ii"), 1.5, RK4).matrix
    assert np.abs(lhs - rhs).max() < 1e-14


def test_steady_state_values():
    gen = averaged_generator(paper_example_network())
    res = find_steady_state(gen, state("i"), 1e-9, 200.0, RK4)
    assert res.converged and res.status == "converged"
    g2 = g2_from_g4(res.state)
    off = ~np.eye(3, dtype=bool)
    np.testing.assert_allclose(np.diag(g2), 1 / 6, atol=1e-6)
    np.testing.assert_allclose(g2[off], 1 / 12, atol=1e-6)
    np.testing.assert_allclose(exchange_elements(res.state)[off], 1 / 12, atol=1e-6)


def test_steady_state_not_converged_without_noise():
    gen = averaged_generator(paper_example_network(0.0))
    res = find_steady_state(gen, state("i"), 1e-9, 5.0, RK4)
    assert not res.converged and res.status == "not-converged"
    assert res.time == pytest.approx(5.0)
    assert res.residual > 1e-3


def test_invariants_along_evolution():
    gen = averaged_generator(paper_example_network())
    for label in CANONICAL_STATES:
        g0 = state(label)
        w0 = swap_block_weights(g0)
        for g in g4_snapshots(gen, g0, [1.0, 5.0, 20.0], RK4):
            assert g.trace_drift() < 1e-9
            assert g.hermiticity_residual() < 1e-10
            assert g.min_eigenvalue() > -1e-8
            assert abs(swap_block_weights(g)[0] - w0[0]) < 1e-8

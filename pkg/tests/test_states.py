import numpy as np
import pytest

from corrdyn.amplitudes import ExchangeStatistics
from corrdyn.correlation import flat_index, g4_from_amplitude, mixture, swap_block_weights
from corrdyn.states import InitialStateSpec, CANONICAL_STATES, build_initial_g4

S = 1 / np.sqrt(2)


def test_separable_amplitude():
    st = build_initial_g4(InitialStateSpec.separable(1, 2), 3)
    psi = st.amplitude.matrix
    assert psi[0, 1] == pytest.approx(S) and psi[1, 0] == pytest.approx(S)
    assert st.g4.trace() == pytest.approx(1.0)


def test_entangled_amplitude():
    psi = build_initial_g4(InitialStateSpec.entangled(2, 3), 3).amplitude.matrix
    assert psi[1, 1] == pytest.approx(S) and psi[2, 2] == pytest.approx(S)
    assert np.count_nonzero(psi) == 2


def test_classically_correlated_is_diagonal():
    st = build_initial_g4(InitialStateSpec.classically_correlated(1, 2), 3)
    assert st.amplitude is None
    want = np.zeros((9, 9))
    want[0, 0] = want[4, 4] = 0.5
    np.testing.assert_array_equal(st.g4.matrix, want)


def test_classically_correlated_equals_mixture():
    cc = build_initial_g4(InitialStateSpec.classically_correlated(1, 3), 3).g4
    e11 = np.zeros((3, 3)); e11[0, 0] = 1
    e33 = np.zeros((3, 3)); e33[2, 2] = 1
    mix = InitialStateSpec.custom_mixture([(0.5, InitialStateSpec.custom_pure(e11)),
                                           (0.5, InitialStateSpec.custom_pure(e33))])
    np.testing.assert_allclose(build_initial_g4(mix, 3).g4.matrix, cc.matrix, atol=1e-15)


def test_distinguishable_ordered_pairs():
    g = build_initial_g4(InitialStateSpec.distinguishable(1, 2), 3).g4
    a, b = flat_index(1, 2, 3), flat_index(2, 1, 3)
    want = np.zeros((9, 9))
    want[a, a] = want[b, b] = 0.5
    np.testing.assert_array_equal(g.matrix, want)
    assert swap_block_weights(g) == pytest.approx((0.5, 0.5))


def test_pure_kinds_match_amplitude_tensor():
    for spec in (CANONICAL_STATES["i"], CANONICAL_STATES["ii"],
                 InitialStateSpec.custom_pure(np.eye(3) + 1j * np.ones((3, 3)), ExchangeStatistics.BOSON)):
        st = build_initial_g4(spec, 3)
        np.testing.assert_array_equal(st.g4.matrix, g4_from_amplitude(st.amplitude).matrix)


def test_mixture_is_valid_tensor():
    spec = InitialStateSpec.custom_mixture([(0.5, CANONICAL_STATES["i"]), (0.5, CANONICAL_STATES["ii"])])
    g = build_initial_g4(spec, 3).g4
    assert g.trace_drift() < 1e-15
    assert g.hermiticity_residual() == 0
    assert g.min_eigenvalue() > -1e-15
    ref = mixture([(0.5, build_initial_g4(CANONICAL_STATES["i"], 3).g4), (0.5, build_initial_g4(CANONICAL_STATES["ii"], 3).g4)])
    np.testing.assert_allclose(g.matrix, ref.matrix, atol=1e-15)


@pytest.mark.parametrize("make", [
    lambda: InitialStateSpec.separable(1, 1),
    lambda: InitialStateSpec.distinguishable(2, 2),
    lambda: InitialStateSpec.separable(0, 1),
    lambda: InitialStateSpec.custom_mixture([(0.5, CANONICAL_STATES["i"]), (0.4, CANONICAL_STATES["ii"])]),
    lambda: InitialStateSpec.custom_mixture([(1.5, CANONICAL_STATES["i"]), (-0.5, CANONICAL_STATES["ii"])]),
    lambda: InitialStateSpec("bogus"),
])
def test_invalid_specs(make):
    with pytest.raises(ValueError):
        make()


def test_site_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        build_initial_g4(InitialStateSpec.separable(1, 4), 3)

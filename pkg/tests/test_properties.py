import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from corrdyn.amplitudes import ExchangeStatistics, InputProfile, initial_amplitude
from corrdyn.correlation import averaged_generator, dephasing_coefficient, g4_from_amplitude, lindblad_oracle
from corrdyn.network import build_network

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
rates = st.floats(0, 4, allow_nan=False, allow_infinity=False)


@st.composite
def networks(draw, max_sites=3):
    n = draw(st.integers(1, max_sites))
    eps = draw(arrays(float, n, elements=finite))
    upper = np.triu(draw(arrays(float, (n, n), elements=finite)), 1)
    gam = draw(arrays(float, n, elements=rates))
    return build_network(eps, upper + upper.T, gam)


@settings(max_examples=40, deadline=None)
@given(networks())
def test_generator_equals_oracle(net):
    diff = np.abs(averaged_generator(net).dense() - lindblad_oracle(net).dense()).max()
    assert diff < 1e-11


@settings(max_examples=60, deadline=None)
@given(networks(max_sites=4), st.data())
def test_exchange_and_population_coefficients_vanish(net, data):
    n = net.n_sites
    p = data.draw(st.integers(1, n))
    q = data.draw(st.integers(1, n))
    assert dephasing_coefficient(net, p, q, q, p).real == 0
    assert dephasing_coefficient(net, p, q, p, q) == 0


@settings(max_examples=60, deadline=None)
@given(networks(max_sites=4), st.data())
def test_coefficients_never_amplify(net, data):
    idx = [data.draw(st.integers(1, net.n_sites)) for _ in range(4)]
    assert dephasing_coefficient(net, *idx).real <= 0


@settings(max_examples=40, deadline=None)
@given(arrays(float, (3, 3), elements=finite), arrays(float, (3, 3), elements=finite))
def test_boson_tensor_is_symmetric_rank_one(re, im):
    phi = re + 1j * im
    if np.sum(np.abs(phi + phi.T) ** 2) < 1e-6:
        return
    g = g4_from_amplitude(initial_amplitude(InputProfile.normalized(phi), ExchangeStatistics.BOSON))
    assert abs(g.trace() - 1) < 1e-12
    assert g.hermiticity_residual() < 1e-15
    assert g.min_eigenvalue() > -1e-12

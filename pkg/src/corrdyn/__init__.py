"""Two-particle four-point correlations on dynamically disordered tight-binding networks."""

from .amplitudes import (
    ExchangeStatistics,
    InputProfile,
    TwoParticleAmplitude,
    amplitude_from_propagator,
    evolve_amplitude,
    g2_from_amplitude,
)
from .correlation import (
    CorrelationTensor,
    GeneratorMatrix,
    averaged_generator,
    coherent_generator,
    dephasing_coefficient,
    evolve_g4,
    find_steady_state,
    g2_from_g4,
    g4_from_amplitude,
    lindblad_oracle,
    swap_block_weights,
)
from .ensemble import (
    EnsembleResult,
    NoiseModel,
    compare_to_master,
    ensemble_average,
    gamma_from_sigma,
    run_trajectory,
)
from .network import Network, build_network, hamiltonian, paper_example_network
from .propagator import IntegratorConfig, Propagator, evolve_exact, evolve_ode
from .states import InitialStateSpec, build_initial_g4

__version__ = "0.1.0"

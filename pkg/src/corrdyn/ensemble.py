"""Monte-Carlo trajectories under fluctuating site energies.

Two noise modes are supported:

``ito-sde``
    White-noise phases with intensities ``rates``. Each step of size ``h``
    applies ``diag(exp(i sqrt(rate) dW))`` between two half steps of the
    deterministic propagator (Strang splitting), so every trajectory is
    exactly unitary. ``scheme="euler-maruyama"`` instead integrates the Ito
    equation with its ``-rate/2`` drift term; it is not norm preserving and
    is kept only to check that drift.
``piecewise-constant``
    Site energies are redrawn from ``Normal(energy, sigma**2)`` every
    ``delta_t`` and held fixed in between.

Noise for trajectory ``j`` comes from a Philox stream keyed on ``(seed, j)``;
the normal used at step ``s`` on site ``p`` is built from raw counter outputs
``2 (s N + p)`` and ``2 (s N + p) + 1``. Trajectories are processed in chunks
of fixed size, so results are bit-identical for any number of workers.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._fallback import box_muller
from .amplitudes import (
    ExchangeStatistics,
    InputProfile,
    TwoParticleAmplitude,
    symmetrize,
)
from .correlation import CorrelationTensor
from .network import Network, hamiltonian
from .propagator import IntegratorConfig, exp_hermitian, step_count
from .states import InitialStateSpec, pure_components

MODES = ("ito-sde", "piecewise-constant")
SCHEMES = ("split", "euler-maruyama")
CHUNK_SIZE = 64
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseModel:
    mode: str = "ito-sde"
    sigma: float = 0.0
    delta_t: float = 1.0
    rates: tuple | None = None
    seed: int = 0
    scheme: str = "split"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"noise mode must be one of {MODES}, got {self.mode!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.sigma >= 0:
            raise ValueError("sigma must be non-negative")
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if self.rates is not None:
            rates = tuple(float(r) for r in self.rates)
            if any(not r >= 0 for r in rates):
                raise ValueError("noise rates must be non-negative")
            object.__setattr__(self, "rates", rates)
        if not 0 <= int(self.seed) <= _U64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", int(self.seed))


def gamma_from_sigma(sigma: float, delta_t: float) -> float:
    """Dephasing rate equivalent to energies of standard deviation ``sigma``
    redrawn every ``delta_t``: ``sigma**2 * delta_t / 2``."""
    if sigma < 0 or delta_t <= 0:
        raise ValueError("need sigma >= 0 and delta_t > 0")
    return sigma * sigma * delta_t / 2.0


def effective_rates(net: Network, noise: NoiseModel) -> np.ndarray:
    """Per-site dephasing rates the averaged generator should use for ``noise``."""
    if noise.mode == "piecewise-constant":
        return np.full(net.n_sites, gamma_from_sigma(noise.sigma, noise.delta_t))
    if noise.rates is None:
        return np.array(net.dephasing_rates)
    if len(noise.rates) != net.n_sites:
        raise ValueError("noise rates length does not match the network")
    return np.array(noise.rates)


def master_network(net: Network, noise: NoiseModel) -> Network:
    return net.with_rates(effective_rates(net, noise))


def raw_stream(seed: int, trajectory: int, n_steps: int, n_sites: int) -> np.ndarray:
    """Philox counter outputs for one trajectory, shape ``(n_steps, n_sites, 2)``."""
    bitgen = np.random.Philox(key=(trajectory << 64) | (seed & _U64))
    return bitgen.random_raw(2 * n_steps * n_sites).reshape(n_steps, n_sites, 2)


def standard_normals(seed: int, trajectory: int, n_steps: int, n_sites: int) -> np.ndarray:
    """Counter-addressed standard normals of shape ``(n_steps, n_sites)``."""
    return box_muller(raw_stream(seed, trajectory, n_steps, n_sites))


def _ito_split(net, rates, seed, trajs, t, h):
    steps, h = step_count(t, h)
    n = net.n_sites
    ham = hamiltonian(net)
    raw = np.stack([raw_stream(seed, j, steps, n) for j in trajs])
    return kernels.phase_split(exp_hermitian(ham, 0.5 * h), exp_hermitian(ham, h),
                               np.sqrt(rates * h), raw)


def _ito_euler(net, rates, seed, trajs, t, h):
    steps, h = step_count(t, h)
    n = net.n_sites
    ham = hamiltonian(net)
    dw = np.stack([standard_normals(seed, j, steps, n) for j in trajs]) * np.sqrt(h)
    rt = np.sqrt(rates)[:, None]
    u = np.broadcast_to(np.eye(n, dtype=complex), (len(trajs), n, n)).copy()
    for s in range(steps):
        drift = 1j * np.matmul(ham, u) - 0.5 * rates[:, None] * u
        u = u + drift * h + 1j * rt * dw[:, s, :, None] * u
    return u


def _piecewise(net, sigma, delta_t, seed, trajs, t):
    n = net.n_sites
    intervals, lengths = [], []
    remaining = t
    while remaining > 1e-12 * max(1.0, t):
        lengths.append(min(delta_t, remaining))
        remaining -= lengths[-1]
    intervals = len(lengths)
    u = np.broadcast_to(np.eye(n, dtype=complex), (len(trajs), n, n)).copy()
    if intervals == 0:
        return u
    draws = np.stack([standard_normals(seed, j, intervals, n) for j in trajs])
    ham = np.broadcast_to(hamiltonian(net).real, (len(trajs), n, n)).copy()
    diag = np.arange(n)
    for k, length in enumerate(lengths):
        ham[:, diag, diag] = net.energies + sigma * draws[:, k, :]
        w, v = np.linalg.eigh(ham)
        step = np.matmul(v * np.exp(1j * w * length)[:, None, :], np.conj(np.swapaxes(v, 1, 2)))
        u = np.matmul(step, u)
    return u


def noisy_propagators(net: Network, noise: NoiseModel, t: float, trajectories,
                      cfg: IntegratorConfig | None = None) -> np.ndarray:
    """Single-particle propagators for the given trajectory indices, shape (M, N, N)."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    cfg = cfg or IntegratorConfig()
    trajs = [int(j) for j in trajectories]
    if noise.mode == "piecewise-constant":
        return _piecewise(net, noise.sigma, noise.delta_t, noise.seed, trajs, t)
    rates = effective_rates(net, noise)
    if noise.scheme == "euler-maruyama":
        return _ito_euler(net, rates, noise.seed, trajs, t, cfg.step_size)
    return _ito_split(net, rates, noise.seed, trajs, t, cfg.step_size)


def run_trajectory(net: Network, noise: NoiseModel, phi: InputProfile,
                   stats: ExchangeStatistics, t: float, trajectory_index: int,
                   cfg: IntegratorConfig | None = None) -> TwoParticleAmplitude:
    """One noisy realization of the two-particle amplitude at time ``t``."""
    stats = ExchangeStatistics(stats)
    u = noisy_propagators(net, noise, t, [trajectory_index], cfg)[0]
    psi = symmetrize(u, phi.matrix, stats)
    psi0 = symmetrize(np.eye(net.n_sites), phi.matrix, stats)
    return TwoParticleAmplitude(psi / np.sqrt(np.sum(np.abs(psi0) ** 2)), stats, float(t))


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Trajectory-averaged correlation tensor.

    ``std_error`` is the per-element standard error of the complex mean,
    ``sqrt((var(Re) + var(Im)) / M)`` with the unbiased sample variance.
    """

    mean_g4: CorrelationTensor
    std_error: np.ndarray
    trajectories: int
    wall_time: float


def _samples(net, noise, comps, t, trajs, cfg):
    u = noisy_propagators(net, noise, t, trajs, cfg)
    d = net.n_sites ** 2
    out = np.zeros((len(trajs), d, d), dtype=complex)
    eye = np.eye(net.n_sites)
    for w, phi, stats in comps:
        norm = np.sqrt(np.sum(np.abs(symmetrize(eye, phi.matrix, stats)) ** 2))
        psi = (symmetrize(u, phi.matrix, stats) / norm).reshape(len(trajs), d)
        out += w * (psi[:, :, None] * psi.conj()[:, None, :])
    return out


def _chunk_stats(samples):
    # trajectory axis last so numpy uses pairwise summation
    stacked = np.moveaxis(samples, 0, -1)
    mean = stacked.sum(axis=-1) / samples.shape[0]
    resid = stacked - mean[..., None]
    m2 = (resid.real ** 2 + resid.imag ** 2).sum(axis=-1)
    return samples.shape[0], mean, m2


def default_workers() -> int:
    value = os.environ.get("CORRDYN_THREADS")
    if value:
        return max(1, int(value))
    return max(1, min(os.cpu_count() or 1, 8))


def ensemble_from_components(net: Network, noise: NoiseModel, components, t: float,
                             M: int, cfg: IntegratorConfig | None = None,
                             workers: int | None = None) -> EnsembleResult:
    """Average ``sum_c w_c psi_c psi_c^dagger`` over ``M`` trajectories.

    ``components`` holds ``(weight, InputProfile, statistics)`` triples that
    share each noise realization.
    """
    if M < 2:
        raise ValueError("need at least two trajectories")
    started = time.perf_counter()
    workers = workers or default_workers()
    chunks = [range(a, min(a + CHUNK_SIZE, M)) for a in range(0, M, CHUNK_SIZE)]

    def work(chunk):
        return _chunk_stats(_samples(net, noise, components, t, chunk, cfg))

    if workers == 1 or len(chunks) == 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))

    # Chan et al. pairwise merge, always in chunk order
    count, mean, m2 = parts[0]
    for n_b, mean_b, m2_b in parts[1:]:
        total = count + n_b
        delta = mean_b - mean
        mean = mean + delta * (n_b / total)
        m2 = m2 + m2_b + (delta.real ** 2 + delta.imag ** 2) * (count * n_b / total)
        count = total
    se = np.sqrt(m2 / (M - 1) / M)
    return EnsembleResult(CorrelationTensor(mean, float(t)), se, M,
                          time.perf_counter() - started)


def ensemble_average(net: Network, noise: NoiseModel, phi: InputProfile,
                     stats: ExchangeStatistics, t: float, M: int,
                     cfg: IntegratorConfig | None = None,
                     workers: int | None = None) -> EnsembleResult:
    comps = [(1.0, phi, ExchangeStatistics(stats))]
    return ensemble_from_components(net, noise, comps, t, M, cfg, workers)


def ensemble_for_state(net: Network, noise: NoiseModel, spec: InitialStateSpec, t: float,
                       M: int, cfg: IntegratorConfig | None = None,
                       workers: int | None = None) -> EnsembleResult:
    """Ensemble for any initial state; mixture components share noise."""
    comps = pure_components(spec, net.n_sites)
    return ensemble_from_components(net, noise, comps, t, M, cfg, workers)


@dataclass(frozen=True, eq=False)
class DeviationReport:
    deviation: np.ndarray
    max_deviation: float
    fraction_within_3se: float
    consistent: bool

    def as_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "fraction_within_3se": self.fraction_within_3se,
            "consistent": self.consistent,
        }


def compare_to_master(ens: EnsembleResult, master: CorrelationTensor,
                      min_fraction: float = 0.99) -> DeviationReport:
    """Elementwise comparison of an ensemble mean with a master-equation tensor.

    ``consistent`` is False when fewer than ``min_fraction`` of the elements
    lie within three standard errors (plus a 1e-12 absolute floor).
    """
    if ens.mean_g4.matrix.shape != master.matrix.shape:
        raise ValueError("ensemble and master tensors differ in shape")
    dev = np.abs(ens.mean_g4.matrix - master.matrix)
    within = dev <= 3.0 * ens.std_error + 1e-12
    frac = float(np.mean(within))
    return DeviationReport(dev, float(dev.max()), frac, frac >= min_fraction)

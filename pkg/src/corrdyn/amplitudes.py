"""Two-particle probability amplitudes built from single-particle propagators."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import kernels
from .network import Network, hamiltonian
from .propagator import IntegratorConfig, Propagator, evolve_exact, step_count


class ExchangeStatistics(str, enum.Enum):
    BOSON = "boson"
    FERMION = "fermion"
    DISTINGUISHABLE = "distinguishable"


class VanishingAmplitudeError(ValueError):
    """The (anti)symmetrized amplitude is identically zero and cannot be normalized."""


@dataclass(frozen=True, eq=False)
class InputProfile:
    """Initial amplitude profile ``phi[m, n]`` with unit Frobenius norm."""

    matrix: np.ndarray

    def __post_init__(self):
        phi = np.array(self.matrix, dtype=complex)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise ValueError(f"input profile must be square, got shape {phi.shape}")
        norm = float(np.sum(np.abs(phi) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"input profile must have unit norm, got {norm!r}")
        object.__setattr__(self, "matrix", phi)

    @classmethod
    def normalized(cls, phi) -> InputProfile:
        phi = np.asarray(phi, dtype=complex)
        return cls(phi / np.sqrt(np.sum(np.abs(phi) ** 2)))

    @classmethod
    def single(cls, n_sites: int, m: int, n: int) -> InputProfile:
        """Profile with ``phi[m, n] = 1`` (1-based site indices)."""
        phi = np.zeros((n_sites, n_sites), dtype=complex)
        phi[m - 1, n - 1] = 1.0
        return cls(phi)


@dataclass(frozen=True, eq=False)
class TwoParticleAmplitude:
    matrix: np.ndarray
    statistics: ExchangeStatistics
    time: float = 0.0

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]

    def norm_residual(self) -> float:
        return abs(1.0 - float(np.sum(np.abs(self.matrix) ** 2)))

    def exchange_residual(self) -> float:
        """Deviation from the symmetry required by ``statistics`` (0 for distinguishable)."""
        psi = self.matrix
        if self.statistics is ExchangeStatistics.BOSON:
            return float(np.max(np.abs(psi - psi.T)))
        if self.statistics is ExchangeStatistics.FERMION:
            return float(max(np.max(np.abs(psi + psi.T)), np.max(np.abs(np.diag(psi)))))
        return 0.0


def symmetrize(u: np.ndarray, phi: np.ndarray, stats: ExchangeStatistics) -> np.ndarray:
    """Unnormalized ``sum_mn phi[m,n] (U[p,n] U[q,m] +/- U[p,m] U[q,n])``.

    Works on a single propagator (N, N) or a stack (M, N, N).
    """
    ut = np.swapaxes(u, -1, -2)
    direct = u @ phi.T @ ut
    if stats is ExchangeStatistics.DISTINGUISHABLE:
        return direct
    swapped = u @ phi @ ut
    if stats is ExchangeStatistics.BOSON:
        return direct + swapped
    return direct - swapped


def amplitude_from_propagator(phi: InputProfile, U: Propagator,
                              stats: ExchangeStatistics) -> TwoParticleAmplitude:
    """Two-particle amplitude at ``U.time``, renormalized to unit norm.

    Raises :class:`VanishingAmplitudeError` when the symmetrized amplitude
    vanishes, e.g. a fermionic profile supported only on ``m == n``.
    """
    stats = ExchangeStatistics(stats)
    if phi.matrix.shape != U.matrix.shape:
        raise ValueError("input profile and propagator sizes differ")
    psi = symmetrize(U.matrix, phi.matrix, stats)
    norm = np.sqrt(np.sum(np.abs(psi) ** 2))
    if norm < 1e-12:
        what = "fermionic " if stats is ExchangeStatistics.FERMION else ""
        raise VanishingAmplitudeError(f"vanishing {what}state: amplitude is identically zero")
    return TwoParticleAmplitude(psi / norm, stats, U.time)


def initial_amplitude(phi: InputProfile, stats: ExchangeStatistics) -> TwoParticleAmplitude:
    n = phi.matrix.shape[0]
    return amplitude_from_propagator(phi, Propagator(np.eye(n, dtype=complex), 0.0), stats)


def two_particle_generator(net: Network) -> sparse.csr_matrix:
    """``i (H x I + I x H)`` acting on the row-major flattening of the amplitude."""
    h = sparse.csr_matrix(hamiltonian(net))
    eye = sparse.identity(net.n_sites, format="csr")
    return sparse.csr_matrix(1j * (sparse.kron(h, eye) + sparse.kron(eye, h)))


def evolve_amplitude(net: Network, psi0: TwoParticleAmplitude, t: float,
                     cfg: IntegratorConfig | None = None) -> TwoParticleAmplitude:
    """Evolve an amplitude for time ``t``.

    The default closed form is ``U psi0 U^T``; ``cfg.method == "fixed-step-rk4"``
    integrates the coupled amplitude equations directly instead.
    """
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if psi0.n_sites != net.n_sites:
        raise ValueError("amplitude and network sizes differ")
    t0 = psi0.time
    if t == 0:
        return psi0
    if cfg is None or cfg.method == "matrix-exponential":
        u = evolve_exact(net, t).matrix
        psi = u @ psi0.matrix @ u.T
    else:
        steps, h = step_count(t, cfg.step_size)
        n = net.n_sites
        y = kernels.rk4(two_particle_generator(net), psi0.matrix.ravel(), h, steps)
        psi = y.reshape(n, n)
    return TwoParticleAmplitude(psi, psi0.statistics, t0 + t)


def g2_from_amplitude(psi: TwoParticleAmplitude) -> np.ndarray:
    """Joint detection probabilities ``|psi[p, q]|**2``."""
    return np.abs(psi.matrix) ** 2

"""Deterministic single-particle propagator ``U(t) = exp(i H t)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import kernels
from .network import Network, hamiltonian

METHODS = ("matrix-exponential", "fixed-step-rk4")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings shared by all evolution routines."""

    step_size: float = 1e-3
    method: str = "matrix-exponential"
    snapshot_times: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (self.step_size > 0 and math.isfinite(self.step_size)):
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        times = tuple(float(t) for t in self.snapshot_times)
        if any(t < 0 for t in times):
            raise ValueError("snapshot_times must be non-negative")
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot_times must be ascending")
        object.__setattr__(self, "snapshot_times", times)


@dataclass(frozen=True, eq=False)
class Propagator:
    """``matrix[p, n]`` is the amplitude at site ``p`` for a particle started at ``n``."""

    matrix: np.ndarray
    time: float

    def unitarity_residual(self) -> float:
        u = self.matrix
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def step_count(t: float, h: float) -> tuple[int, float]:
    """Number of equal steps no longer than ``h`` covering ``[0, t]``, and their size."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if t == 0:
        return 0, h
    n = max(1, math.ceil(t / h - 1e-9))
    return n, t / n


def exp_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(i h t)`` for Hermitian ``h`` through its eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w * t)) @ v.conj().T


def evolve_exact(net: Network, t: float) -> Propagator:
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if t == 0:
        return Propagator(np.eye(net.n_sites, dtype=complex), 0.0)
    return Propagator(exp_hermitian(hamiltonian(net), t), float(t))


def evolve_ode(net: Network, t: float, cfg: IntegratorConfig | None = None) -> Propagator:
    """RK4 integration of ``dU/dt = i H U`` from the identity.

    Independent of :func:`evolve_exact`; the two are used to check each other.
    """
    cfg = cfg or IntegratorConfig(method="fixed-step-rk4")
    n = net.n_sites
    steps, h = step_count(t, cfg.step_size)
    # row-major vec(U): (i H) U  ->  kron(i H, I)
    gen = sparse.csr_matrix(sparse.kron(1j * hamiltonian(net), sparse.identity(n)))
    y = kernels.rk4(gen, np.eye(n, dtype=complex).ravel(), h, steps)
    return Propagator(y.reshape(n, n), float(t))


def evolve(net: Network, t: float, cfg: IntegratorConfig | None = None) -> Propagator:
    """Dispatch on ``cfg.method``; matrix exponential by default."""
    if cfg is None or cfg.method == "matrix-exponential":
        return evolve_exact(net, t)
    return evolve_ode(net, t, cfg)

"""Tight-binding networks with onsite energies, couplings and dephasing rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NetworkValidationError(ValueError):
    """Raised when network parameters violate a structural invariant."""


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable tight-binding network.

    Attributes
    ----------
    energies : ndarray, shape (N,)
        Onsite energies in normalized units.
    couplings : ndarray, shape (N, N)
        Real symmetric hopping matrix with zero diagonal.
    dephasing_rates : ndarray, shape (N,)
        Non-negative white-noise intensities, one per site.
    """

    energies: np.ndarray
    couplings: np.ndarray
    dephasing_rates: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.energies.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            np.array_equal(self.energies, other.energies)
            and np.array_equal(self.couplings, other.couplings)
            and np.array_equal(self.dephasing_rates, other.dephasing_rates)
        )

    __hash__ = None

    def with_rates(self, rates) -> Network:
        """Copy of this network with different dephasing rates."""
        return build_network(self.energies, self.couplings, rates)


def _frozen(values, dtype) -> np.ndarray:
    out = np.array(values, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def build_network(energies, couplings, dephasing_rates) -> Network:
    """Validate parameters and return a :class:`Network`.

    Raises :class:`NetworkValidationError` for non-real or mis-shaped input,
    asymmetric couplings (naming the first offending 1-based pair), a nonzero
    coupling diagonal, or negative dephasing rates.
    """
    for label, values in (("energies", energies), ("couplings", couplings),
                          ("dephasing_rates", dephasing_rates)):
        if np.iscomplexobj(np.asarray(values)):
            raise NetworkValidationError(f"{label} must be real")
    eps = np.asarray(energies, dtype=float)
    kappa = np.asarray(couplings, dtype=float)
    gamma = np.asarray(dephasing_rates, dtype=float)

    if eps.ndim != 1 or eps.size < 1:
        raise NetworkValidationError("energies must be a non-empty vector")
    n = eps.size
    if kappa.shape != (n, n):
        raise NetworkValidationError(
            f"couplings must have shape ({n}, {n}), got {kappa.shape}")
    if gamma.shape != (n,):
        raise NetworkValidationError(
            f"dephasing_rates must have length {n}, got shape {gamma.shape}")
    for label, arr in (("energies", eps), ("couplings", kappa),
                       ("dephasing_rates", gamma)):
        if not np.all(np.isfinite(arr)):
            raise NetworkValidationError(f"{label} contain non-finite values")

    diag = np.flatnonzero(np.diag(kappa))
    if diag.size:
        p = diag[0] + 1
        raise NetworkValidationError(
            f"coupling diagonal must vanish: couplings[{p}][{p}] = {kappa[p - 1, p - 1]}")
    bad = np.argwhere(kappa != kappa.T)
    if bad.size:
        p, r = (int(i) + 1 for i in bad[0])
        raise NetworkValidationError(
            f"couplings not symmetric at ({p},{r}): "
            f"{kappa[p - 1, r - 1]} != {kappa[r - 1, p - 1]}")
    neg = np.flatnonzero(gamma < 0)
    if neg.size:
        p = neg[0] + 1
        raise NetworkValidationError(
            f"dephasing rate at site {p} is negative: {gamma[p - 1]}")

    return Network(_frozen(eps, float), _frozen(kappa, float), _frozen(gamma, float))


def paper_example_network(dephasing_rate: float = 2.0) -> Network:
    """The 3-site example: unit energies, kappa_12 = 1, kappa_13 = kappa_23 = 1/3.

    The default uniform dephasing rate 2 corresponds to sigma = 2, delta_t = 1.
    """
    third = 1.0 / 3.0
    kappa = [[0.0, 1.0, third],
             [1.0, 0.0, third],
             [third, third, 0.0]]
    return build_network([1.0, 1.0, 1.0], kappa, [dephasing_rate] * 3)


def hamiltonian(net: Network) -> np.ndarray:
    """Single-particle Hamiltonian ``diag(energies) + couplings``.

    Amplitudes evolve as ``dU/dt = +i H U``.
    """
    return (np.diag(net.energies) + net.couplings).astype(complex)


def network_from_hamiltonian(h, dephasing_rates) -> Network:
    h = np.asarray(h)
    if np.iscomplexobj(h):
        if np.any(h.imag != 0):
            raise NetworkValidationError("complex couplings are not supported")
        h = h.real
    off = h - np.diag(np.diag(h))
    return build_network(np.diag(h), off, dephasing_rates)

"""Canonical two-particle inputs and custom pure or mixed states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .amplitudes import (
    ExchangeStatistics,
    InputProfile,
    TwoParticleAmplitude,
    initial_amplitude,
)
from .correlation import CorrelationTensor, flat_index, g4_from_amplitude

KINDS = (
    "separable",
    "entangled",
    "classically-correlated",
    "distinguishable",
    "custom-pure",
    "custom-mixture",
)


@dataclass(frozen=True, eq=False)
class InitialStateSpec:
    """Description of an initial two-particle state.

    Use the classmethod constructors; ``sites`` are 1-based.
    """

    kind: str
    sites: tuple[int, int] | None = None
    phi: np.ndarray | None = None
    statistics: ExchangeStatistics = ExchangeStatistics.BOSON
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial state kind {self.kind!r}")
        if self.kind in ("separable", "entangled", "classically-correlated", "distinguishable"):
            if self.sites is None or len(self.sites) != 2:
                raise ValueError(f"{self.kind} state needs two site indices")
            m, n = (int(s) for s in self.sites)
            object.__setattr__(self, "sites", (m, n))
            if m < 1 or n < 1:
                raise ValueError("site indices are 1-based")
            if m == n and self.kind in ("separable", "distinguishable"):
                raise ValueError(f"{self.kind} state needs two different sites, got ({m},{n})")
        elif self.kind == "custom-pure":
            if self.phi is None:
                raise ValueError("custom-pure state needs a phi matrix")
            object.__setattr__(self, "statistics", ExchangeStatistics(self.statistics))
        else:
            comps = tuple((float(w), s) for w, s in self.components)
            if not comps:
                raise ValueError("custom-mixture needs at least one component")
            if any(w <= 0 for w, _ in comps):
                raise ValueError("mixture weights must be positive")
            total = sum(w for w, _ in comps)
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"mixture weights must sum to 1, got {total!r}")
            object.__setattr__(self, "components", comps)

    @classmethod
    def separable(cls, m: int, n: int) -> InitialStateSpec:
        return cls("separable", (m, n))

    @classmethod
    def entangled(cls, m: int, n: int) -> InitialStateSpec:
        return cls("entangled", (m, n))

    @classmethod
    def classically_correlated(cls, m: int, n: int) -> InitialStateSpec:
        return cls("classically-correlated", (m, n))

    @classmethod
    def distinguishable(cls, m: int, n: int) -> InitialStateSpec:
        return cls("distinguishable", (m, n), statistics=ExchangeStatistics.DISTINGUISHABLE)

    @classmethod
    def custom_pure(cls, phi, statistics=ExchangeStatistics.BOSON) -> InitialStateSpec:
        return cls("custom-pure", phi=np.asarray(phi, dtype=complex), statistics=statistics)

    @classmethod
    def custom_mixture(cls, components) -> InitialStateSpec:
        return cls("custom-mixture", components=tuple(components))


CANONICAL_STATES = {
    "i": InitialStateSpec.separable(1, 2),
    "ii": InitialStateSpec.entangled(1, 2),
    "iii": InitialStateSpec.classically_correlated(1, 2),
    "iv": InitialStateSpec.distinguishable(1, 2),
}


@dataclass(frozen=True, eq=False)
class InitialState:
    g4: CorrelationTensor
    amplitude: TwoParticleAmplitude | None


def _check_sites(spec: InitialStateSpec, n_sites: int) -> None:
    if spec.sites and max(spec.sites) > n_sites:
        raise ValueError(f"site index {max(spec.sites)} out of range 1..{n_sites}")


def pure_components(spec: InitialStateSpec, n_sites: int):
    """Decompose ``spec`` into ``(weight, InputProfile, statistics)`` triples."""
    _check_sites(spec, n_sites)
    boson = ExchangeStatistics.BOSON
    if spec.kind == "custom-mixture":
        out = []
        for w, sub in spec.components:
            out.extend((w * w2, phi, st) for w2, phi, st in pure_components(sub, n_sites))
        return out
    if spec.kind == "custom-pure":
        if spec.phi.shape != (n_sites, n_sites):
            raise ValueError(f"phi must have shape ({n_sites}, {n_sites})")
        return [(1.0, InputProfile.normalized(spec.phi), spec.statistics)]
    m, n = spec.sites
    single = InputProfile.single
    if spec.kind == "separable":
        return [(1.0, single(n_sites, m, n), boson)]
    if spec.kind == "entangled":
        phi = np.zeros((n_sites, n_sites), dtype=complex)
        phi[m - 1, m - 1] = phi[n - 1, n - 1] = 1.0
        return [(1.0, InputProfile.normalized(phi), boson)]
    if spec.kind == "classically-correlated":
        return [(0.5, single(n_sites, m, m), boson), (0.5, single(n_sites, n, n), boson)]
    # distinguishable: unsymmetrized psi(0) = phi^T, so phi[n,m] places the pair at (m,n)
    dist = ExchangeStatistics.DISTINGUISHABLE
    return [(0.5, single(n_sites, n, m), dist), (0.5, single(n_sites, m, n), dist)]


def build_initial_g4(spec: InitialStateSpec, n_sites: int) -> InitialState:
    """Initial correlation tensor, plus the amplitude when the state is pure."""
    _check_sites(spec, n_sites)
    d = n_sites * n_sites
    if spec.kind in ("classically-correlated", "distinguishable"):
        m, n = spec.sites
        if spec.kind == "classically-correlated":
            pairs = [(m, m), (n, n)]
        else:
            pairs = [(m, n), (n, m)]
        g = np.zeros((d, d), dtype=complex)
        for p, q in pairs:
            k = flat_index(p, q, n_sites)
            g[k, k] += 0.5
        return InitialState(CorrelationTensor(g), None)

    comps = pure_components(spec, n_sites)
    if len(comps) == 1:
        psi = initial_amplitude(comps[0][1], comps[0][2])
        return InitialState(g4_from_amplitude(psi), psi)
    g = sum(w * g4_from_amplitude(initial_amplitude(phi, st)).matrix for w, phi, st in comps)
    return InitialState(CorrelationTensor(np.asarray(g, dtype=complex)), None)

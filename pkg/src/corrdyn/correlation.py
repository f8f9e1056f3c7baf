"""Four-point correlation tensors and their generators.

A correlation tensor ``G[(p,q), (p',q')] = <psi[p,q] psi*[p',q']>`` is stored as
an ``N**2 x N**2`` matrix; the ordered pair ``(p, q)`` (1-based) maps to row
``(p-1)*N + (q-1)``. Generators act on the row-major flattening of that matrix,
so a generator is an ``N**4 x N**4`` operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse

from . import kernels
from .amplitudes import TwoParticleAmplitude
from .network import Network, hamiltonian
from .propagator import IntegratorConfig, step_count

#: Largest network for which generators are stored as explicit sparse matrices.
MATERIALIZE_MAX_SITES = 8
#: Upper limit on ``||generator||_inf * step_size`` accepted by the RK4 driver.
MAX_STEP_PRODUCT = 0.1


class IntegrityError(ValueError):
    """A tensor violates a structural property it must have."""


class StepSizeError(ValueError):
    """The RK4 step is too large for the generator's spectral scale."""


def flat_index(p: int, q: int, n_sites: int) -> int:
    """Row of the ordered pair ``(p, q)`` given 1-based site labels."""
    return (p - 1) * n_sites + (q - 1)


@dataclass(frozen=True, eq=False)
class CorrelationTensor:
    matrix: np.ndarray
    time: float = 0.0

    @property
    def n_sites(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def element(self, p: int, q: int, pp: int, qq: int) -> complex:
        """``G[(p,q);(pp,qq)]`` with 1-based site labels."""
        n = self.n_sites
        return complex(self.matrix[flat_index(p, q, n), flat_index(pp, qq, n)])

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def trace_drift(self) -> float:
        return abs(self.trace() - 1.0)

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def diagnostics(self) -> dict:
        sym, anti = swap_block_weights(self)
        return {
            "time": self.time,
            "trace_drift": self.trace_drift(),
            "hermiticity_residual": self.hermiticity_residual(),
            "min_eigenvalue": self.min_eigenvalue(),
            "sym_weight": sym,
            "antisym_weight": anti,
        }


def mixture(components) -> CorrelationTensor:
    """Convex combination of ``(weight, CorrelationTensor)`` pairs."""
    components = list(components)
    total = sum(w for w, _ in components)
    if abs(total - 1.0) > 1e-12 or any(w <= 0 for w, _ in components):
        raise ValueError("mixture weights must be positive and sum to 1")
    out = sum(w * g.matrix for w, g in components)
    return CorrelationTensor(np.asarray(out, dtype=complex), components[0][1].time)


def g4_from_amplitude(psi: TwoParticleAmplitude) -> CorrelationTensor:
    v = psi.matrix.ravel()
    return CorrelationTensor(np.outer(v, v.conj()), psi.time)


def g2_from_g4(g: CorrelationTensor) -> np.ndarray:
    """Two-point correlations from the diagonal of ``g``.

    Raises :class:`IntegrityError` if a diagonal element has an imaginary
    part above 1e-9.
    """
    diag = np.diag(g.matrix)
    if np.max(np.abs(diag.imag), initial=0.0) > 1e-9:
        raise IntegrityError("diagonal of the correlation tensor is not real")
    n = g.n_sites
    return diag.real.reshape(n, n).copy()


def exchange_elements(g: CorrelationTensor) -> np.ndarray:
    """Matrix ``X[p, q] = G[(p,q);(q,p)]`` (0-based indices)."""
    n = g.n_sites
    p, q = np.divmod(np.arange(n * n), n)
    return g.matrix[p * n + q, q * n + p].reshape(n, n)


def swap_block_weights(g: CorrelationTensor) -> tuple[float, float]:
    """Weights of ``g`` in the exchange-symmetric and antisymmetric subspaces."""
    tr = np.trace(g.matrix).real
    swap_tr = np.sum(exchange_elements(g)).real
    return 0.5 * (tr + swap_tr), 0.5 * (tr - swap_tr)


def _bracket(eps, gam, p, q, pp, qq):
    """Diagonal coefficient of the averaged equation, vectorized over 0-based indices.

    The noise part equals ``-1/2 sum_k gam[k] (n_k - n'_k)**2`` with ``n_k`` the
    occupation of site ``k`` in the ket pair ``(p, q)`` and ``n'_k`` in the bra
    pair. Summing it in that form makes the exchange and population
    coefficients exactly zero rather than zero up to rounding.
    """
    phase = 1j * ((eps[p] - eps[pp]) + (eps[q] - eps[qq]))
    decay = np.zeros(np.broadcast(p, q, pp, qq).shape)
    for k, rate in enumerate(gam):
        diff = np.asarray(p == k, dtype=int) + (q == k) - (pp == k) - (qq == k)
        decay = decay - 0.5 * rate * diff * diff
    return phase + decay


def dephasing_coefficient(net: Network, p: int, q: int, pp: int, qq: int) -> complex:
    """Scalar multiplying ``G[(p,q);(pp,qq)]`` in the averaged equation (1-based labels)."""
    n = net.n_sites
    for idx in (p, q, pp, qq):
        if not 1 <= idx <= n:
            raise IndexError(f"site index {idx} outside 1..{n}")
    return complex(_bracket(net.energies, net.dephasing_rates, p - 1, q - 1, pp - 1, qq - 1))


def _element_indices(n: int):
    idx = np.arange(n ** 4)
    row, col = np.divmod(idx, n * n)
    p, q = np.divmod(row, n)
    pp, qq = np.divmod(col, n)
    return idx, p, q, pp, qq


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Linear generator on flattened correlation tensors.

    ``matrix`` is a CSR matrix for networks up to ``MATERIALIZE_MAX_SITES``
    sites; larger networks keep ``matrix=None`` and act through ``_apply``.
    """

    kind: str
    n_sites: int
    matrix: sparse.csr_matrix | None
    _apply: Callable[[np.ndarray], np.ndarray] | None = None
    _norm: float | None = None

    def apply(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=complex).ravel()
        if self.matrix is not None:
            return self.matrix @ vec
        return self._apply(vec)

    def apply_tensor(self, g: CorrelationTensor) -> np.ndarray:
        d = self.n_sites ** 2
        return self.apply(g.matrix.ravel()).reshape(d, d)

    def norm_bound(self) -> float:
        """Max absolute row sum (an upper bound on the spectral radius)."""
        if self.matrix is not None:
            return float(np.max(np.asarray(abs(self.matrix).sum(axis=1)), initial=0.0))
        return float(self._norm)

    def dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.toarray()
        eye = np.eye(self.n_sites ** 4, dtype=complex)
        return np.column_stack([self._apply(col) for col in eye.T])

    def __add__(self, other: GeneratorMatrix) -> GeneratorMatrix:
        if self.n_sites != other.n_sites:
            raise ValueError("generator sizes differ")
        if self.matrix is not None and other.matrix is not None:
            return GeneratorMatrix("total", self.n_sites, sparse.csr_matrix(self.matrix + other.matrix))
        f, g = self.apply, other.apply
        return GeneratorMatrix("total", self.n_sites, None, lambda v: f(v) + g(v),
                               self.norm_bound() + other.norm_bound())


def _hopping_energy_matrix(net: Network) -> sparse.csr_matrix:
    n = net.n_sites
    kappa, eps = net.couplings, net.energies
    idx, p, q, pp, qq = _element_indices(n)
    rows = [idx]
    cols = [idx]
    vals = [1j * (eps[p] + eps[q] - eps[pp] - eps[qq])]
    d = n * n
    for r in range(n):
        # i sum_r kappa[p,r] G[(r,q);..] + kappa[q,r] G[(p,r);..]
        # - i sum_r kappa[p',r] G[..;(r,q')] + kappa[q',r] G[..;(p',r)]
        for coeff, target in (
            (1j * kappa[p, r], (r * n + q) * d + pp * n + qq),
            (1j * kappa[q, r], (p * n + r) * d + pp * n + qq),
            (-1j * kappa[pp, r], (p * n + q) * d + r * n + qq),
            (-1j * kappa[qq, r], (p * n + q) * d + pp * n + r),
        ):
            keep = coeff != 0
            rows.append(idx[keep])
            cols.append(target[keep])
            vals.append(coeff[keep])
    mat = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n ** 4, n ** 4))
    return sparse.csr_matrix(mat)


def _matrix_free(net: Network, kind: str) -> GeneratorMatrix:
    n = net.n_sites
    d = n * n
    h = sparse.csr_matrix(hamiltonian(net).real)
    eye = sparse.identity(n, format="csr")
    h2 = sparse.csr_matrix(sparse.kron(h, eye) + sparse.kron(eye, h))
    include_coherent = kind in ("coherent", "total")
    include_dephasing = kind in ("dephasing", "total")
    _, p, q, pp, qq = _element_indices(n)
    mask = _bracket(np.zeros(n), net.dephasing_rates, p, q, pp, qq).real.reshape(d, d)

    def apply(vec):
        g = vec.reshape(d, d)
        out = np.zeros((d, d), dtype=complex)
        if include_coherent:
            out += 1j * (h2 @ g - (h2.T @ g.T).T)
        if include_dephasing:
            out += mask * g
        return out.ravel()

    kap = np.abs(net.couplings).sum(axis=1).max(initial=0.0)
    bound = 0.0
    if include_coherent:
        bound += 4 * np.abs(net.energies).max() + 4 * kap
    if include_dephasing:
        bound += np.abs(mask).max()
    return GeneratorMatrix(kind, n, None, apply, float(bound))


def coherent_generator(net: Network) -> GeneratorMatrix:
    """Noiseless four-point dynamics: energy phases and the four hopping sums."""
    if net.n_sites > MATERIALIZE_MAX_SITES:
        return _matrix_free(net, "coherent")
    return GeneratorMatrix("coherent", net.n_sites, _hopping_energy_matrix(net))


def dephasing_generator(net: Network) -> GeneratorMatrix:
    """Real diagonal part contributed by the site-energy noise."""
    n = net.n_sites
    if n > MATERIALIZE_MAX_SITES:
        return _matrix_free(net, "dephasing")
    _, p, q, pp, qq = _element_indices(n)
    diag = _bracket(np.zeros(n), net.dephasing_rates, p, q, pp, qq).real
    return GeneratorMatrix("dephasing", n, sparse.diags(diag.astype(complex), format="csr"))


def averaged_generator(net: Network) -> GeneratorMatrix:
    """Generator of the noise-averaged correlation tensor."""
    if net.n_sites > MATERIALIZE_MAX_SITES:
        return _matrix_free(net, "total")
    return coherent_generator(net) + dephasing_generator(net)


def lindblad_oracle(net: Network) -> GeneratorMatrix:
    """Dense Lindblad superoperator with jump operators ``sqrt(g_k) (P_k x I + I x P_k)``.

    Built from Kronecker products alone, as a cross-check of the index
    bookkeeping in :func:`averaged_generator`.
    """
    n = net.n_sites
    eye = np.eye(n)
    d = n * n
    eye2 = np.eye(d)
    h = hamiltonian(net)
    h2 = np.kron(h, eye) + np.kron(eye, h)
    # row-major vec(A X B) = kron(A, B^T) vec(X)
    sup = 1j * (np.kron(h2, eye2) - np.kron(eye2, h2.T))
    for k, rate in enumerate(net.dephasing_rates):
        proj = np.zeros((n, n))
        proj[k, k] = 1.0
        a = np.sqrt(rate) * (np.kron(proj, eye) + np.kron(eye, proj))
        ada = a.conj().T @ a
        sup = sup + np.kron(a, a.conj()) - 0.5 * np.kron(ada, eye2) - 0.5 * np.kron(eye2, ada.T)
    return GeneratorMatrix("total", n, sparse.csr_matrix(sup))


def _rk4(gen: GeneratorMatrix, y: np.ndarray, h: float, steps: int) -> np.ndarray:
    if gen.matrix is not None:
        return kernels.rk4(gen.matrix, y, h, steps)
    for _ in range(steps):
        k1 = gen.apply(y)
        k2 = gen.apply(y + 0.5 * h * k1)
        k3 = gen.apply(y + 0.5 * h * k2)
        k4 = gen.apply(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def _check_step(gen: GeneratorMatrix, h: float) -> None:
    scale = gen.norm_bound()
    if scale * h > MAX_STEP_PRODUCT:
        raise StepSizeError(
            f"step size {h:g} too large for generator norm {scale:.4g}; "
            f"use step_size <= {MAX_STEP_PRODUCT / scale:.3g}")


def evolve_g4(gen: GeneratorMatrix, g0: CorrelationTensor, t: float,
              cfg: IntegratorConfig | None = None) -> CorrelationTensor:
    """RK4 integration of ``dG/dt = gen G`` over ``[g0.time, g0.time + t]``.

    Raises :class:`StepSizeError` when ``||gen|| * step_size > 0.1``.
    """
    cfg = cfg or IntegratorConfig(method="fixed-step-rk4")
    if g0.n_sites != gen.n_sites:
        raise ValueError("tensor and generator sizes differ")
    _check_step(gen, cfg.step_size)
    steps, h = step_count(t, cfg.step_size)
    d = g0.matrix.shape[0]
    y = _rk4(gen, g0.matrix.ravel(), h, steps)
    return CorrelationTensor(y.reshape(d, d), g0.time + t)


def g4_snapshots(gen: GeneratorMatrix, g0: CorrelationTensor, times,
                 cfg: IntegratorConfig | None = None) -> list[CorrelationTensor]:
    """Tensors at each absolute time in ``times`` (ascending, >= ``g0.time``)."""
    cfg = cfg or IntegratorConfig(method="fixed-step-rk4")
    out = []
    current = g0
    for t in times:
        if t < current.time:
            raise ValueError("snapshot times must be ascending and not before g0.time")
        current = evolve_g4(gen, current, t - current.time, cfg)
        current = CorrelationTensor(current.matrix, float(t))
        out.append(current)
    return out


@dataclass(frozen=True, eq=False)
class SteadyStateResult:
    state: CorrelationTensor
    converged: bool
    time: float
    residual: float

    @property
    def status(self) -> str:
        return "converged" if self.converged else "not-converged"


def find_steady_state(gen: GeneratorMatrix, g0: CorrelationTensor, tol: float,
                      t_max: float, cfg: IntegratorConfig | None = None,
                      check_interval: float = 0.5) -> SteadyStateResult:
    """Integrate until ``max |gen G| < tol`` or ``t_max`` is reached.

    The residual is tested every ``check_interval`` time units, so the
    reported convergence time is resolved to that interval. Non-convergence
    is reported through ``converged=False`` with the last state attached.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    cfg = cfg or IntegratorConfig(method="fixed-step-rk4")
    _check_step(gen, cfg.step_size)
    g = g0
    elapsed = 0.0
    while True:
        residual = float(np.max(np.abs(gen.apply(g.matrix.ravel()))))
        if residual < tol:
            return SteadyStateResult(g, True, g.time, residual)
        if elapsed >= t_max - 1e-12:
            return SteadyStateResult(g, False, g.time, residual)
        dt = min(check_interval, t_max - elapsed)
        g = evolve_g4(gen, g, dt, cfg)
        elapsed += dt

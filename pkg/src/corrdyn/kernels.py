"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``CORRDYN_PURE_PYTHON=1`` to force the numpy kernels.
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("CORRDYN_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python kernels requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_active = _compiled if _compiled is not None else _fallback


def backend() -> str:
    """Name of the active kernel backend: ``"compiled"`` or ``"python"``."""
    return "compiled" if _active is _compiled else "python"


def compiled_available() -> bool:
    return _compiled is not None


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily select ``"compiled"`` or ``"python"`` kernels."""
    global _active
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        chosen = _compiled
    elif name == "python":
        chosen = _fallback
    else:
        raise ValueError(f"unknown backend {name!r}")
    previous, _active = _active, chosen
    try:
        yield
    finally:
        _active = previous


def rk4(matrix, y0, h: float, n_steps: int) -> np.ndarray:
    """Fixed-step RK4 for ``dy/dt = A y`` with ``A`` a scipy CSR matrix."""
    y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    if n_steps <= 0:
        return y0.copy()
    return _active.rk4_csr(
        np.ascontiguousarray(matrix.indptr, dtype=np.intp),
        np.ascontiguousarray(matrix.indices, dtype=np.intp),
        np.ascontiguousarray(matrix.data, dtype=np.complex128),
        y0, float(h), int(n_steps))


def phase_split(e_half, e_full, scale, raw) -> np.ndarray:
    """Batch of Strang-split noisy propagators, shape (M, N, N).

    ``raw`` is the (M, S, N, 2) array of counter outputs; ``scale`` is
    ``sqrt(rate * h)`` per site.
    """
    return _active.phase_split_raw(
        np.ascontiguousarray(e_half, dtype=np.complex128),
        np.ascontiguousarray(e_full, dtype=np.complex128),
        np.ascontiguousarray(scale, dtype=float),
        np.ascontiguousarray(raw, dtype=np.uint64))

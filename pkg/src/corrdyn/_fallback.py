"""Pure numpy versions of the compiled kernels, same signatures and results
up to floating-point rounding."""

import numpy as np


def rk4_csr(indptr, indices, data, y0, h, n_steps):
    from scipy.sparse import csr_matrix

    n = len(indptr) - 1
    a = csr_matrix((data, indices, indptr), shape=(n, n))
    y = np.array(y0, dtype=np.complex128, copy=True)
    if y.shape[0] != n:
        raise ValueError("state length does not match generator")
    half = 0.5 * h
    sixth = h / 6.0
    for _ in range(n_steps):
        k1 = a @ y
        k2 = a @ (y + half * k1)
        k3 = a @ (y + half * k2)
        k4 = a @ (y + h * k3)
        y = y + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def box_muller(raw):
    """One standard normal per trailing pair of raw 64-bit counter outputs."""
    raw = np.asarray(raw, dtype=np.uint64)
    u1 = ((raw[..., 0] >> np.uint64(11)) + np.uint64(1)) * 2.0 ** -53
    u2 = (raw[..., 1] >> np.uint64(11)) * 2.0 ** -53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def phase_split_raw(e_half, e_full, scale, raw):
    n_traj, n_steps, n, _ = raw.shape
    if e_half.shape[0] != n or scale.shape[0] != n:
        raise ValueError("noise stream does not match network size")
    if n_steps == 0:
        return np.broadcast_to(np.eye(n, dtype=complex), (n_traj, n, n)).copy()
    phases = np.exp(1j * (scale * box_muller(raw)))
    u = np.broadcast_to(e_half, (n_traj, n, n)).copy()
    for s in range(n_steps):
        u = phases[:, s, :, None] * u
        u = np.matmul(e_full if s < n_steps - 1 else e_half, u)
    return u

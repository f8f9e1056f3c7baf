"""Compiled inner loops: fixed-step RK4 on a CSR generator and the
split-step propagation of phase-noise trajectories.

Both functions release the GIL so trajectory chunks can run on threads.
"""
import numpy as np

from libc.math cimport cos, log, sin, sqrt
from libc.string cimport memcpy

cdef double TWO_M53 = 2.0 ** -53
cdef double TWO_PI = 6.283185307179586


cdef inline void _csr_matvec(const Py_ssize_t[::1] indptr,
                             const Py_ssize_t[::1] indices,
                             const double complex[::1] data,
                             const double complex[::1] x,
                             double complex[::1] out) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double complex acc
    for i in range(out.shape[0]):
        acc = 0
        for k in range(indptr[i], indptr[i + 1]):
            acc = acc + data[k] * x[indices[k]]
        out[i] = acc


def rk4_csr(const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] indices,
            const double complex[::1] data, y0, double h, Py_ssize_t n_steps):
    """Integrate ``dy/dt = A y`` with ``n_steps`` classical RK4 steps of size ``h``."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef double complex[::1] y = np.array(y0, dtype=np.complex128, copy=True)
    cdef double complex[::1] k1 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k2 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k3 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k4 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(n, dtype=np.complex128)
    cdef double half = 0.5 * h
    cdef double sixth = h / 6.0
    cdef Py_ssize_t s, i
    if y.shape[0] != n:
        raise ValueError("state length does not match generator")
    with nogil:
        for s in range(n_steps):
            _csr_matvec(indptr, indices, data, y, k1)
            for i in range(n):
                tmp[i] = y[i] + half * k1[i]
            _csr_matvec(indptr, indices, data, tmp, k2)
            for i in range(n):
                tmp[i] = y[i] + half * k2[i]
            _csr_matvec(indptr, indices, data, tmp, k3)
            for i in range(n):
                tmp[i] = y[i] + h * k3[i]
            _csr_matvec(indptr, indices, data, tmp, k4)
            for i in range(n):
                y[i] = y[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return np.asarray(y)


cdef inline double _box_muller(unsigned long long a, unsigned long long b) noexcept nogil:
    cdef double u1 = <double>((a >> 11) + 1) * TWO_M53
    cdef double u2 = <double>(b >> 11) * TWO_M53
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


cdef void _propagate(Py_ssize_t n, Py_ssize_t n_steps,
                     const double complex* e_half, const double complex* e_full,
                     const double* scale, const unsigned long long* raw,
                     double complex* u, double complex* w) noexcept nogil:
    cdef Py_ssize_t s, p, q, r
    cdef double theta
    cdef double complex ph, acc
    cdef const double complex* e
    memcpy(u, e_half, n * n * sizeof(double complex))
    for s in range(n_steps):
        for p in range(n):
            theta = scale[p] * _box_muller(raw[2 * (s * n + p)], raw[2 * (s * n + p) + 1])
            ph = cos(theta) + 1j * sin(theta)
            for q in range(n):
                u[p * n + q] = ph * u[p * n + q]
        e = e_full if s < n_steps - 1 else e_half
        for p in range(n):
            for q in range(n):
                acc = 0
                for r in range(n):
                    acc = acc + e[p * n + r] * u[r * n + q]
                w[p * n + q] = acc
        memcpy(u, w, n * n * sizeof(double complex))


def phase_split_raw(const double complex[:, ::1] e_half,
                    const double complex[:, ::1] e_full,
                    const double[::1] scale,
                    const unsigned long long[:, :, :, ::1] raw):
    """Strang-split propagation ``U <- E_half D_{S-1} E ... E D_0 E_half``.

    ``raw`` has shape (M, S, N, 2): counter outputs turned into one standard
    normal ``z`` per (step, site) by Box-Muller, and
    ``D_s = diag(exp(i scale * z[s]))``. Returns shape (M, N, N).
    """
    cdef Py_ssize_t n_traj = raw.shape[0]
    cdef Py_ssize_t n_steps = raw.shape[1]
    cdef Py_ssize_t n = e_half.shape[0]
    cdef Py_ssize_t m, p
    if raw.shape[2] != n or scale.shape[0] != n or raw.shape[3] != 2:
        raise ValueError("noise stream does not match network size")
    out_arr = np.empty((n_traj, n, n), dtype=np.complex128)
    if n_steps == 0:
        out_arr[...] = np.eye(n)
        return out_arr
    cdef double complex[:, :, ::1] out = out_arr
    cdef double complex[:, ::1] work = np.empty((n, n), dtype=np.complex128)
    with nogil:
        for m in range(n_traj):
            _propagate(n, n_steps, &e_half[0, 0], &e_full[0, 0], &scale[0],
                       &raw[m, 0, 0, 0], &out[m, 0, 0], &work[0, 0])
    return out_arr

"""Hot inner loops.

Every kernel exists twice: a loop version compiled with numba and a
vectorized numpy version.  ``chirp_sum`` / ``horner`` dispatch on
``_accel.USE_NUMBA``; both variants are importable for tests and the
benchmark script.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit

# Max. number of phase-matrix entries materialised per block by the numpy path.
_BLOCK_ENTRIES = 2_000_000


@njit(cache=True)
def _chirp_sum_loop(p, A, a, b):
    K = a.shape[0]
    J = p.shape[0]
    out = np.empty(K, dtype=np.complex128)
    for k in range(K):
        ak = a[k]
        bk = b[k]
        sr = 0.0
        si = 0.0
        for j in range(J):
            pj = p[j]
            ph = (ak + bk * pj) * pj
            c = math.cos(ph)
            s = math.sin(ph)
            ar = A[j].real
            ai = A[j].imag
            sr += ar * c - ai * s
            si += ar * s + ai * c
        out[k] = complex(sr, si)
    return out


def chirp_sum_numpy(p, A, a, b):
    """Return ``S[k] = sum_j A[j] * exp(1j*(a[k]*p[j] + b[k]*p[j]**2))``."""
    p = np.ascontiguousarray(p, dtype=np.float64)
    A = np.ascontiguousarray(A, dtype=np.complex128)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    out = np.empty(a.shape[0], dtype=np.complex128)
    step = max(1, _BLOCK_ENTRIES // max(1, p.shape[0]))
    for k0 in range(0, a.shape[0], step):
        ak = a[k0:k0 + step, None]
        bk = b[k0:k0 + step, None]
        out[k0:k0 + step] = np.exp(1j * ((ak + bk * p) * p)) @ A
    return out


def chirp_sum_numba(p, A, a, b):
    """Loop version of :func:`chirp_sum_numpy` (compiled when numba is available)."""
    return _chirp_sum_loop(
        np.ascontiguousarray(p, dtype=np.float64),
        np.ascontiguousarray(A, dtype=np.complex128),
        np.ascontiguousarray(a, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64),
    )


def chirp_sum(p, A, a, b):
    """Quadratic-phase transform of the weighted samples ``A`` at nodes ``p``.

    This single kernel covers every real-axis wavefunction transform in the
    package: coordinate amplitudes (``a`` = positions), arrival amplitudes
    (``b`` = -T/2m) and free evolution (``b`` = -t/2m).
    """
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.broadcast_to(np.asarray(b, dtype=np.float64), a.shape)
    if _accel.USE_NUMBA:
        return chirp_sum_numba(p, A, a, b)
    return chirp_sum_numpy(p, A, a, b)


@njit(cache=True)
def _horner_loop(coeffs, z):
    out = np.empty(z.shape[0], dtype=np.complex128)
    n = coeffs.shape[0]
    for k in range(z.shape[0]):
        acc = 0j
        zk = z[k]
        for i in range(n - 1, -1, -1):
            acc = acc * zk + coeffs[i]
        out[k] = acc
    return out


def horner_numpy(coeffs, z):
    z = np.asarray(z, dtype=np.complex128)
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def horner_numba(coeffs, z):
    z = np.asarray(z, dtype=np.complex128)
    flat = _horner_loop(np.ascontiguousarray(coeffs, dtype=np.float64), np.ascontiguousarray(z.ravel()))
    return flat.reshape(z.shape)


def horner(coeffs, z):
    """Evaluate ``sum_n coeffs[n] * z**n`` (real coefficients, complex z)."""
    if _accel.USE_NUMBA:
        return horner_numba(coeffs, z)
    return horner_numpy(coeffs, z)

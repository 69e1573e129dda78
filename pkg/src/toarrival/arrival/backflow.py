"""Free evolution in position space, probability flux and backflow intervals."""
import math

import numpy as np

from .. import oscint
from ..units import H, HBAR

FLUX_TOL = 1e-10
_QUAD_TOL = 1e-12
# a state counts as one-signed if the other sign carries less probability than this
ONE_SIGN_WEIGHT = 1e-12


def _transform(x, t, state, power, tol):
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    shape = x.shape
    a = ((x - state.x0) / HBAR).ravel()
    b = (-(t + state.t) / (2 * state.mass * HBAR)).ravel()
    out = np.zeros(a.shape, dtype=np.complex128)
    env = state.envelope
    for lo, hi in state.support:
        bp = tuple(p for p in state.breakpoints if lo < p < hi)
        amp = lambda p: (1j * p / HBAR) ** power * np.asarray(env(p), dtype=complex) / math.sqrt(H)
        vals, _ = oscint.quadratic_phase_transform(amp, a, b, lo, hi, tol=tol, breakpoints=bp,
                                                   sqrt_start=False)
        out += vals
    out = out.reshape(shape)
    return out[()] if out.ndim == 0 else out


def wavefunction(x, t, state, tol=_QUAD_TOL):
    """``<x | psi(t)> = h**-0.5 int psi(p) exp(i p x / hbar - i p^2 t / 2 m hbar) dp``."""
    return _transform(x, t, state, 0, tol)


def wavefunction_derivative(x, t, state, tol=_QUAD_TOL):
    return _transform(x, t, state, 1, tol)


def flux(x, t, state, tol=_QUAD_TOL):
    """``J(x, t) = (hbar / m) Im(psi* d psi / dx)``; ``x`` and ``t`` broadcast."""
    psi = wavefunction(x, t, state, tol)
    dpsi = wavefunction_derivative(x, t, state, tol)
    return HBAR / state.mass * np.imag(np.conjugate(psi) * dpsi)


def momentum_sign(state):
    """``+1`` or ``-1`` for one-signed states; ``ValueError`` otherwise."""
    wp, wm = state.sign_weight(1), state.sign_weight(-1)
    if wm <= ONE_SIGN_WEIGHT:
        return 1
    if wp <= ONE_SIGN_WEIGHT:
        return -1
    raise ValueError(f"state carries both momentum signs (weights {wp:.3g}, {wm:.3g})")


def _runs(mask):
    idx = np.flatnonzero(np.diff(np.concatenate([[0], mask.astype(np.int8), [0]])))
    return list(zip(idx[::2], idx[1::2] - 1))


def backflow_scan(state, x, t_grid, tol=FLUX_TOL):
    """Maximal runs of ``t_grid`` where the flux at ``x`` opposes the momentum sign.

    For a positive-momentum state these are the runs with ``J < -tol``; for
    a negative-momentum state, ``J > tol``.  Grid points with zero flux never
    open a run.  Returns a list of ``(t_start, t_end)`` grid values.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    sign = momentum_sign(state)
    J = flux(x, t_grid, state)
    mask = sign * J < -tol
    return [(float(t_grid[i]), float(t_grid[j])) for i, j in _runs(mask)]

"""Arrival-time amplitudes and the distribution ``Pi(T)``.

    <T, alpha | psi> = int_{alpha p > 0} (|p| / m h)**0.5 exp(-i p^2 T / 2 m hbar) psi(p) dp,
    Pi(T) = |<T + | psi>|^2 + |<T - | psi>|^2.

Amplitudes go through the banded quadratic-phase transform on the real
axis, with the state's shift and evolution phases folded into the kernel.
For large ``|T|`` the endpoint ``p = 0`` dominates; with ``psi ~ c |p|**k``
there,

    |<T alpha | psi>|^2 ~ |c|^2 Gamma(k/2 + 3/4)^2 / (4 m h) * (2 m hbar / |T|)**(k + 3/2),

which sizes the time grids and supplies the analytic tail beyond them.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .. import oscint
from ..errors import DomainError, GridTooNarrowWarning
from ..units import H, HBAR

QUAD_TOL = 1e-10
DIST_TOL = 1e-6
GRID_NORM_TOL = 1e-4
# the analytic tail takes over at TAIL_START_FACTOR quantum time scales
TAIL_START_FACTOR = 200.0
# bulk window half-width in units of the state's time scale
BULK_WIDTHS = 40.0


def _sign(alpha):
    if alpha in (1, "+"):
        return 1
    if alpha in (-1, "-"):
        return -1
    raise ValueError(f"alpha must be +1 or -1, got {alpha!r}")


def _pieces(state, alpha):
    """Support pieces of one sign, mapped to ``q = |p| >= 0``."""
    out = []
    for lo, hi in state.support:
        if alpha > 0 and lo >= 0:
            out.append((lo, hi, tuple(b for b in state.breakpoints if lo < b < hi)))
        elif alpha < 0 and hi <= 0:
            out.append((-hi, -lo, tuple(sorted(-b for b in state.breakpoints if lo < b < hi))))
    return out


def toa_amplitude(T, alpha, state, tol=QUAD_TOL, return_error=False):
    """``<T, alpha | psi>`` for scalar or array ``T``."""
    alpha = _sign(alpha)
    T = np.asarray(T, dtype=float)
    flat = np.atleast_1d(T).ravel()
    m = state.mass
    b = -(flat + state.t) / (2 * m * HBAR)
    a = np.full(flat.shape, -alpha * state.x0 / HBAR)
    out = np.zeros(flat.shape, dtype=np.complex128)
    err = 0.0
    env = state.envelope
    for qlo, qhi, bp in _pieces(state, alpha):
        amp = lambda q: np.sqrt(q / (m * H)) * np.asarray(env(alpha * q), dtype=complex)
        vals, e = oscint.quadratic_phase_transform(amp, a, b, qlo, qhi, tol=tol, breakpoints=bp,
                                                   sqrt_start=(qlo == 0.0))
        out += vals
        err += e
    out = out.reshape(T.shape)
    out = out[()] if out.ndim == 0 else out
    return (out, err) if return_error else out


def _pi(T, state, tol=QUAD_TOL):
    plus, e1 = toa_amplitude(T, 1, state, tol, return_error=True)
    minus, e2 = toa_amplitude(T, -1, state, tol, return_error=True)
    return np.abs(plus) ** 2, np.abs(minus) ** 2, (abs(plus) + abs(minus)) * (e1 + e2)


# ---------------------------------------------------------------------------
# large-|T| law

@dataclass(frozen=True)
class TailLaw:
    """``Pi(T) ~ prefactor * |T|**(-exponent)`` as ``|T| -> inf`` (same on both sides)."""

    prefactor: float
    exponent: float
    k: float

    @property
    def u(self):
        return self.k / 2

    def __call__(self, T):
        return self.prefactor * np.abs(T) ** -self.exponent

    def integral_beyond(self, T_edge, n=0):
        """``int_{|T_edge|}^inf T**n * prefactor * T**(-exponent) dT``."""
        q = self.exponent - n - 1
        if q <= 0:
            return math.inf
        return self.prefactor * abs(T_edge) ** -q / q


def side_tail_law(state, alpha):
    """Tail law contributed by the momentum side ``alpha``, or ``None``."""
    law = state.small_p_law(_sign(alpha))
    if law is None:
        return None
    c, k = law
    if c == 0 or not math.isfinite(k):
        return None
    m = state.mass
    pref = abs(c) ** 2 * math.gamma(k / 2 + 0.75) ** 2 / (4 * m * H) * (2 * m * HBAR) ** (k + 1.5)
    return TailLaw(pref, k + 1.5, k)


def tail_law(state):
    """Leading tail law of ``Pi`` (the side with the slowest decay wins)."""
    laws = [L for L in (side_tail_law(state, 1), side_tail_law(state, -1)) if L is not None]
    if not laws:
        return None
    lead = min(L.exponent for L in laws)
    top = [L for L in laws if L.exponent == lead]
    return TailLaw(sum(L.prefactor for L in top), lead, top[0].k)


def _tail_beyond(state, T_edge, n=0):
    laws = [L for L in (side_tail_law(state, 1), side_tail_law(state, -1)) if L is not None]
    total = 0.0
    sgn = 1.0 if T_edge > 0 or n % 2 == 0 else -1.0
    for L in laws:
        total += L.integral_beyond(T_edge, n)
    return sgn * total


def missing_norm_estimate(state, T_lo, T_hi):
    """Tail-law estimate of the probability outside ``[T_lo, T_hi]``."""
    if not (T_lo < 0 < T_hi):
        return math.nan
    return _tail_beyond(state, T_lo) + _tail_beyond(state, T_hi)


def _negligible_edge(state, n, target):
    """Smallest ``|T|`` beyond which the analytic tail of ``T**n Pi`` is below ``target``."""
    edge = 0.0
    for L in (side_tail_law(state, 1), side_tail_law(state, -1)):
        if L is None:
            continue
        q = L.exponent - n - 1
        if q <= 0:
            return math.inf
        edge = max(edge, (L.prefactor / (q * target)) ** (1 / q))
    return edge


@dataclass(frozen=True)
class _Scales:
    centre: float
    width: float
    quantum: float


def _scales(state):
    P2 = state.momentum_moment(2)
    xm, x2 = state.position_moments()
    X = abs(xm) + math.sqrt(max(x2 - xm * xm, 0.0))
    quantum = state.mass * (X * X + HBAR ** 2 / P2) / HBAR
    return _Scales(state.time_centre(), state.time_scale(), quantum)


def integration_window(state, n=0, tol=DIST_TOL):
    """``(T_lo, T_hi)`` outside which the analytic tail replaces quadrature."""
    sc = _scales(state)
    tt = min(TAIL_START_FACTOR * sc.quantum, _negligible_edge(state, n, 1e-3 * tol))
    tt = max(tt, BULK_WIDTHS * sc.width)
    lo = min(sc.centre - BULK_WIDTHS * sc.width, -tt)
    hi = max(sc.centre + BULK_WIDTHS * sc.width, tt)
    return lo, hi


# ---------------------------------------------------------------------------
# distribution on a grid

@dataclass(frozen=True)
class DistributionResult:
    T_grid: np.ndarray
    values: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    captured_norm: float
    error_estimate: float
    missing_norm: float

    def moment(self, n):
        """Grid moment ``int T**n Pi dT`` (no tail correction)."""
        return float(integrate.simpson(self.T_grid ** n * self.values, x=self.T_grid))


def toa_distribution(T_grid, state, tol=QUAD_TOL, norm_tol=GRID_NORM_TOL):
    """``Pi`` and its two components on ``T_grid``.

    Warns with :class:`GridTooNarrowWarning` when the probability outside
    the grid (tail-law estimate, or ``1 - captured_norm`` if larger)
    exceeds ``norm_tol``.
    """
    T = np.asarray(T_grid, dtype=float)
    if T.ndim != 1 or T.size < 2 or np.any(np.diff(T) <= 0):
        raise ValueError("T_grid must be a strictly increasing 1-d array with at least 2 points")
    plus, minus, err = _pi(T, state, tol)
    values = plus + minus
    captured = float(integrate.simpson(values, x=T))
    tail = missing_norm_estimate(state, T[0], T[-1])
    missing = max(1.0 - captured, tail if math.isfinite(tail) else 0.0)
    if missing > norm_tol:
        warnings.warn(GridTooNarrowWarning(
            f"time grid [{T[0]:g}, {T[-1]:g}] misses an estimated {missing:.2e} of the arrival probability",
            missing), stacklevel=2)
    return DistributionResult(T, values, plus, minus, captured, float(np.max(err)), float(missing))


def suggest_time_grid(state, norm_tol=GRID_NORM_TOL, points_per_width=50, max_points=20001):
    """Uniform time grid holding all but ``norm_tol`` of the probability.

    A coarse ``sinh``-graded scan locates the bulk; the tail law decides how
    far the grid must reach when the decay is algebraic.
    """
    sc = _scales(state)
    s = np.linspace(-6.0, 6.0, 481)
    Tc = sc.centre + sc.width * np.sinh(s)
    plus, minus, _ = _pi(Tc, state)
    dens = (plus + minus) * sc.width * np.cosh(s)
    F = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s))])
    left_tail = _tail_beyond(state, Tc[0]) if Tc[0] < 0 else 0.0
    right_tail = _tail_beyond(state, Tc[-1]) if Tc[-1] > 0 else 0.0
    left_out = left_tail + F
    right_out = right_tail + F[-1] - F
    budget = 0.25 * norm_tol
    ok_lo = np.nonzero(left_out <= budget)[0]
    ok_hi = np.nonzero(right_out <= budget)[0]
    lo = Tc[ok_lo[-1]] if ok_lo.size else -_negligible_edge(state, 0, budget)
    hi = Tc[ok_hi[0]] if ok_hi.size else _negligible_edge(state, 0, budget)
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError("could not size a time grid for this state")
    n = int(min(max_points, max(101, math.ceil(points_per_width * (hi - lo) / sc.width))))
    n += 1 - n % 2
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# integrals over T

def _integrate_T(state, lo, hi, n, tol, sc):
    if lo == hi:
        return 0.0

    def compute(panels):
        s_lo = math.asinh((lo - sc.centre) / sc.width)
        s_hi = math.asinh((hi - sc.centre) / sc.width)
        s, w = oscint.composite_nodes(s_lo, s_hi, panels)
        T = sc.centre + sc.width * np.sinh(s)
        plus, minus, _ = _pi(T, state, QUAD_TOL)
        f = T ** n * (plus + minus) * sc.width * np.cosh(s) * w
        return math.fsum(f)

    value, _, _, _ = oscint._refine(compute, 16, tol, 0.0, 4096)
    return value


def _interval(state, T1, T2, n, tol):
    if not T1 < T2:
        raise ValueError("need T1 < T2")
    sc = _scales(state)
    lo, hi = integration_window(state, n, tol)
    a = lo if T1 == -math.inf else T1
    b = hi if T2 == math.inf else T2
    total = 0.0
    if T1 == -math.inf:
        total += _tail_beyond(state, lo, n)
    if T2 == math.inf:
        total += _tail_beyond(state, hi, n)
    if a < b:
        total += _integrate_T(state, a, b, n, tol, sc)
    return total


def interval_probability(T1, T2, state, tol=DIST_TOL):
    """Probability of arrival in ``[T1, T2]``; infinite limits are allowed."""
    return _interval(state, float(T1), float(T2), 0, tol)


def arrival_moment(state, n, tol=DIST_TOL):
    """``int T**n Pi(T) dT`` over the whole line (``inf`` if the tail forbids it)."""
    law = tail_law(state)
    if law is not None and law.exponent - n - 1 <= 0:
        return math.inf
    return _interval(state, -math.inf, math.inf, n, tol)


# ---------------------------------------------------------------------------
# time-of-arrival operator

@dataclass(frozen=True)
class OperatorImage:
    """Unnormalized ``T_op psi`` on the support of ``state``."""

    state: object

    def __call__(self, p):
        st = self.state
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -1j * st.mass * HBAR * (st.derivative_values(p) / p - st(p) / (2 * p * p))
        out = np.where(p != 0, out, 0j)
        return out[()] if out.ndim == 0 else out

    def norm_squared(self):
        return self.state.integrate(lambda p: np.abs(self(p)) ** 2).real

    def overlap(self):
        """``<psi | T_op psi>``."""
        return self.state.integrate(lambda p: np.conjugate(self.state(p)) * self(p))


def _require_domain(state):
    if not state.domain_flag:
        raise DomainError("state is outside the operator domain: psi(p) / |p|^1.5 does not vanish at p = 0")


def apply_T_operator(state):
    """``(T_op psi)(p) = -i m hbar (psi'(p) / p - psi(p) / (2 p^2))``."""
    _require_domain(state)
    return OperatorImage(state)


def t_operator_expectation(state):
    return apply_T_operator(state).overlap().real


def variance_form(state, tol=DIST_TOL):
    """``int T^2 Pi dT - ||T_op psi||^2``."""
    img = apply_T_operator(state)
    return arrival_moment(state, 2, tol) - img.norm_squared()


# ---------------------------------------------------------------------------
# tail fit

@dataclass(frozen=True)
class TailFit:
    slope: float
    log_prefactor: float
    drift: float
    law: TailLaw

    @property
    def prefactor(self):
        return math.exp(self.log_prefactor)

    @property
    def u_fit(self):
        """``u`` from the fitted slope under ``slope = -(2 u + 3/2)``."""
        return (-self.slope - 1.5) / 2


def fit_tail(state, T_window, n=24, side=1):
    """Least-squares log-log fit of ``Pi`` over ``T_window`` (on the ``side`` half-line)."""
    lo, hi = (float(v) for v in T_window)
    if not 0 < lo < hi:
        raise ValueError("T_window must satisfy 0 < T_lo < T_hi")
    T = np.geomspace(lo, hi, n)
    plus, minus, _ = _pi(side * T, state)
    y = np.log(plus + minus)
    x = np.log(T)
    slope, icpt = np.polyfit(x, y, 1)
    h = n // 2
    s1 = np.polyfit(x[:h], y[:h], 1)[0]
    s2 = np.polyfit(x[h:], y[h:], 1)[0]
    drift = abs(s1 - s2) / abs(slope)
    if drift > 0.01:
        warnings.warn(f"local slope drifts by {100 * drift:.2f}% across the fit window; move it outward",
                      RuntimeWarning, stacklevel=2)
    return TailFit(float(slope), float(icpt), float(drift), tail_law(state))


def tail_exponent(state, T_window, n=24):
    """``(u_fit, prefactor_fit)`` from the large-``T`` decay of ``Pi``."""
    fit = fit_tail(state, T_window, n)
    return fit.u_fit, fit.prefactor

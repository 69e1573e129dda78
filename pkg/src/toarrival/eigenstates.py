"""Time-of-arrival eigenstates of a free particle, arrival point X = 0.

Three families:

* ``|T, alpha>``: the Aharonov-Bohm states, momentum support on the half
  line ``alpha p > 0``;
* ``|T>``: the combination built from ``|T +>`` alone, see
  :func:`tminus_coordinate_amp`;
* ``|T +/->_eps``: eigenstates of the regularized operator, equal to the
  Aharonov-Bohm states up to a phase for ``|p| > eps``.

A state evolved for a time ``t`` depends on ``T`` only through
``T_eff = T - t``.  The coordinate amplitude is

    <x|T+> = (1 / (h m**0.5)) int_0^inf p**0.5 exp(i x p + i p**2 T_eff / 2m) dp,

which equals ``Gamma(3/2) U(z) / (h m**0.5 (a**0.5)**3)`` times the phase
:data:`BRANCH_PHASE`, with ``U(z) = exp(z**2/4) D_{-3/2}(z)``,
``z = x exp(-i pi/4) (m/T_eff)**0.5`` and the complex scale factor
``a = -(T_eff/m)**0.5 exp(-i pi/4)`` (principal square root).  The same
letter is used for the sign index in the literature; here the scale factor
is never called ``alpha``.
"""
import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import oscint, specfun
from .errors import DomainError
from .units import H, HBAR

# Phase between the principal-branch closed form and the defining integral.
# Fixed once by comparing with contour quadrature (tests/test_eigenstates.py).
BRANCH_PHASE = -1j

MIN_ABS_TEFF = 1e-6
ASYMPTOTIC_MIN_Z = 10.0
# series for the [0, eps] piece is used while |x| eps + |t| eps**2 / 2m stays below this
GRT_SERIES_RADIUS = 8.0

_G32 = math.gamma(1.5)
_RTOL = 1e-12


def _sign(alpha):
    if alpha in (1, "+", "+1"):
        return 1
    if alpha in (-1, "-", "-1"):
        return -1
    raise ValueError(f"alpha must be + or -, got {alpha!r}")


@dataclass(frozen=True)
class EigenstateSpec:
    """Aharonov-Bohm eigenstate ``|T, alpha>`` evolved for time ``t``."""

    T: float
    alpha: int = 1
    m: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", _sign(self.alpha))
        for name in ("T", "m", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.m <= 0:
            raise ValueError("mass must be positive")

    @property
    def T_eff(self):
        return self.T - self.t

    def require_teff(self, min_abs=MIN_ABS_TEFF):
        te = self.T_eff
        if abs(te) < min_abs:
            raise ValueError(f"coordinate amplitude undefined at T - t = {te!r} (|T - t| < {min_abs})")
        return te


@dataclass(frozen=True)
class GrtSpec:
    """Regularized eigenstate ``|T sign>_eps``."""

    T: float
    epsilon: float
    sign: int = 1
    m: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sign", _sign(self.sign))
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError("epsilon must be positive")
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if not math.isfinite(self.T):
            raise ValueError("T must be finite")


# ---------------------------------------------------------------------------
# momentum representation

def ab_momentum_amp(p, spec):
    """``<p|T alpha>`` including the free evolution phase."""
    p = np.asarray(p, dtype=float)
    if np.any(p == 0):
        raise ValueError("momentum amplitude is singular-phase at p = 0")
    m = spec.m
    mod = np.sqrt(np.abs(p) / (m * H))
    out = np.where(spec.alpha * p > 0, mod * np.exp(1j * p * p * spec.T_eff / (2 * m * HBAR)), 0j)
    return out[()] if out.ndim == 0 else out


def grt_momentum_amp(p, spec):
    """``<p|T sign>_eps``: ``(h m f_eps(p))**-0.5 exp(i T F(p) / m)`` on ``sign p > 0``."""
    p = np.asarray(p, dtype=float)
    m, eps, T = spec.m, spec.epsilon, spec.T
    a = np.abs(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        outer = a > eps
        F = np.where(outer, 0.5 * (a * a - eps * eps), eps * eps * np.log(a / eps))
        inv_f = np.where(outer, a, eps * eps / a)
        out = np.sqrt(inv_f / (H * m)) * np.exp(1j * T * F / (m * HBAR))
    out = np.where((spec.sign * p > 0), out, 0j)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# half-line integrals  int_{p0}^inf p**nu exp(i (x p + tau p**2 / 2)) dp

def _half_line(x, tau, nu=0.5, p0=0.0, rtol=_RTOL):
    if tau < 0:
        return _half_line(-x, -tau, nu, p0, rtol).conjugate()
    path = oscint.build_toa_contour(x, tau, 1.0, p_start=p0)

    def f(p):
        return p ** nu * oscint.chirp_phase(p, x, tau)

    return oscint.integrate_contour(f, path, tol=1e-300, rtol=rtol).value


def _half_line_mirror(x, tau, nu=0.5, rtol=_RTOL):
    # int_{-inf}^0 (-p)**nu exp(i (x p + tau p**2/2)) dp on the reflected path
    if tau < 0:
        return _half_line_mirror(-x, -tau, nu, rtol).conjugate()
    path = oscint.build_toa_contour(x, tau, 1.0, alpha=-1)

    def f(p):
        return (-p) ** nu * oscint.chirp_phase(p, x, tau)

    return oscint.integrate_contour(f, path, tol=1e-300, rtol=rtol).value


# ---------------------------------------------------------------------------
# coordinate representation

def scale_factor(T_eff, m=1.0):
    """Complex scale ``-(T_eff/m)**0.5 exp(-i pi/4)`` of the substitution ``s = a p``."""
    return -cmath.sqrt(T_eff / (m * HBAR)) * cmath.exp(-0.25j * math.pi)


def _exact_plus(x, te, m):
    # T_eff > 0, alpha = +
    a = scale_factor(te, m)
    z = x * cmath.exp(-0.25j * math.pi) * math.sqrt(m / (HBAR * te))
    pref = BRANCH_PHASE * _G32 / (H * math.sqrt(m) * cmath.sqrt(a) ** 3)
    return pref * specfun.pcf_scaled_m32(z)


def _asymptotic_plus(x, te, m):
    x = np.asarray(x, dtype=float)
    zabs = np.abs(x) * math.sqrt(m / (HBAR * te))
    if np.any(zabs < ASYMPTOTIC_MIN_Z):
        raise DomainError(f"asymptotic form needs |z| >= {ASYMPTOTIC_MIN_Z}")
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        right = math.sqrt(H) * cmath.exp(0.75j * math.pi) / (ax ** 1.5 * math.pi * 2 ** 2.5 * math.sqrt(m))
    left = np.sqrt(m * ax / H) / te * cmath.exp(0.25j * math.pi) * np.exp(-1j * x * x * m / (2 * HBAR * te))
    return np.where(x > 0, right, left)


def _plus_amp(x, te, m, method):
    """``<x|T_eff +>`` on an array of positions."""
    x = np.asarray(x, dtype=float)
    if te < 0:
        # <x|T+>* = <-x|-T+>
        return np.conjugate(_plus_amp(-x, -te, m, method))
    if method == "exact":
        return np.asarray(_exact_plus(x, te, m))
    if method == "asymptotic":
        return np.asarray(_asymptotic_plus(x, te, m))
    if method == "contour":
        c = 1.0 / (H * math.sqrt(m))
        tau = te / m
        out = np.empty(x.shape, dtype=complex)
        for idx, xx in np.ndenumerate(x):
            out[idx] = c * _half_line(float(xx), tau)
        return out
    raise ValueError(f"unknown method {method!r}")


def ab_coordinate_amp(x, spec, method="exact"):
    """``<x|T_t alpha>`` for scalar or array ``x``.

    Args:
        method: ``"exact"`` (parabolic cylinder closed form), ``"contour"``
            (quadrature of the defining integral on a deformed path) or
            ``"asymptotic"`` (leading large-``|z|`` terms, ``|z| >= 10``).

    Raises:
        ValueError: ``|T - t| < 1e-6``.
        DomainError: asymptotic method requested at ``|z| < 10``.
    """
    te = spec.require_teff()
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    if spec.alpha == -1:
        if method == "contour":
            out = _minus_contour(x, te, spec.m)
        else:
            # <x|T-> = <-x|T+>
            out = _plus_amp(-x, te, spec.m, method)
    else:
        out = _plus_amp(x, te, spec.m, method)
    out = np.asarray(out, dtype=complex)
    return out[()] if out.ndim == 0 else out


def _minus_contour(x, te, m):
    # independent route for alpha = -: integrate over p < 0 directly
    c = 1.0 / (H * math.sqrt(m))
    out = np.empty(x.shape, dtype=complex)
    for idx, xx in np.ndenumerate(x):
        out[idx] = c * _half_line_mirror(float(xx), te / m)
    return out


def ab_coordinate_derivative(x, spec):
    """``d/dx <x|T_t alpha>`` from the ``i p``-weighted integrand."""
    te = spec.require_teff()
    m = spec.m
    c = 1.0 / (H * math.sqrt(m) * HBAR)
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    for idx, xx in np.ndenumerate(x):
        if spec.alpha == 1:
            out[idx] = 1j * c * _half_line(float(xx), te / m, nu=1.5)
        else:
            out[idx] = -1j * c * _half_line_mirror(float(xx), te / m, nu=1.5)
    return out[()] if out.ndim == 0 else out


def flux(psi, dpsi, m=1.0):
    """Probability current ``(hbar/m) Im(psi* dpsi/dx)``."""
    return HBAR / m * np.imag(np.conjugate(psi) * dpsi)


def ab_flux_x0(T, m=1.0):
    """Current of ``|T+>`` at the arrival point, ``Gamma(3/2)**2 / (4 pi**2 T**2)``.

    Equivalently ``Gamma(3/4) Gamma(5/4) / (2**2.5 pi**2 T**2)``; it does not
    depend on the mass.  :func:`ab_flux_numeric` evaluates the same quantity
    by quadrature.
    """
    T = float(T)
    if not T > 0:
        raise ValueError("T must be positive")
    return _G32 ** 2 / (4 * math.pi ** 2 * T * T)


def ab_flux_numeric(x, T, m=1.0):
    """Current of ``|T+>`` at ``x`` from contour amplitudes."""
    spec = EigenstateSpec(T, 1, m)
    psi = ab_coordinate_amp(x, spec, method="contour")
    return flux(psi, ab_coordinate_derivative(x, spec), m)


def tminus_coordinate_amp(x, T, t=0.0, m=1.0, method="exact"):
    """``<x|T_t> = <x|(T - t)+> + <x|(T + t)+>*``; equals ``2 Re <x|T+>`` at ``t = 0``."""
    a = ab_coordinate_amp(x, EigenstateSpec(T - t, 1, m), method)
    b = ab_coordinate_amp(x, EigenstateSpec(T + t, 1, m), method)
    return a + np.conjugate(b)


# ---------------------------------------------------------------------------
# regularized states

def _grt_inner(x, t, T, eps, m):
    """``int_0^eps`` part for sign +, scaled out as ``eps**1.5 / (h m**0.5)``."""
    A = 1j * T * eps * eps / (m * HBAR) + 0.5
    beta = t / (2 * m * HBAR)
    a = 1j * x * eps / HBAR
    b = -1j * beta * eps * eps
    size = abs(x) * eps / HBAR + abs(beta) * eps * eps
    if size <= GRT_SERIES_RADIUS:
        # exp(a u + b u^2) = sum d_n u^n,  (n+1) d_{n+1} = a d_n + 2 b d_{n-1}
        d_prev, d = 0j, 1.0 + 0j
        total = d / A
        for n in range(400):
            d_prev, d = d, (a * d + 2 * b * d_prev) / (n + 1)
            term = d / (A + n + 1)
            total += term
            if n > size and abs(d) <= 1e-17 * abs(total) and abs(d_prev) <= 1e-16 * abs(total):
                return total
        raise ArithmeticError("regularized series did not converge")

    # u = exp(-s): int_0^inf exp(-A s + a e^{-s} + b e^{-2s}) ds
    def f(s):
        u = np.exp(-s)
        return np.exp(-A * s + (a + b * u) * u)

    return oscint.integrate_interval(f, 0.0, 80.0, tol=1e-300, rtol=1e-13).value


def grt_inner_part(x, t, spec):
    """``I1``: contribution of momenta ``0 < sign p < eps`` to :func:`grt_coordinate_amp`."""
    if spec.sign == -1:
        x = -x
    eps, m = spec.epsilon, spec.m
    return eps ** 1.5 / (H * math.sqrt(m)) * _grt_inner(float(x), float(t), spec.T, eps, m)


def grt_outer_part(x, t, spec):
    """``I2``: contribution of momenta ``sign p > eps``."""
    if spec.sign == -1:
        x = -x
    eps, m = spec.epsilon, spec.m
    te = spec.T - t
    if abs(te) < MIN_ABS_TEFF:
        raise ValueError(f"outer part undefined at T - t = {te!r}")
    phase = cmath.exp(-1j * spec.T * eps * eps / (2 * m * HBAR))
    return phase / (H * math.sqrt(m)) * _half_line(float(x), te / m, p0=eps)


def grt_coordinate_amp(x, t, spec):
    """``<x| exp(-i H t) |T sign>_eps``, scalar or array ``x``."""
    xs = np.asarray(x, dtype=float)
    out = np.empty(xs.shape, dtype=complex)
    for idx, xx in np.ndenumerate(xs):
        out[idx] = grt_inner_part(float(xx), t, spec) + grt_outer_part(float(xx), t, spec)
    return out[()] if out.ndim == 0 else out


def grt_inner_bound(spec):
    """``2 eps**1.5 / (h m**0.5)``, an upper bound on ``|I1|``."""
    return 2 * spec.epsilon ** 1.5 / (H * math.sqrt(spec.m))

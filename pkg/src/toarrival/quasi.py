"""Normalized quasi-eigenstates: Gaussian superpositions of ``|T'_t +>``.

    <p|Psi(t; T, dT)> = K p**0.5 exp(i (T - t) p**2 / 2m) exp(-dT**2 p**4 / 8m**2),   p > 0,

with ``K = 2 pi**0.25 dT**0.5 / (h m)**0.5``.  Everything depends on ``T``
and ``t`` only through ``T - t``.  Positions are obtained by quadrature over
the quartic-damped momentum integrand; moments, overlaps and the values at
the space-time point ``(x=0, t=T)`` are closed forms.
"""
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from . import oscint, specfun
from .units import H, HBAR

_TOL = 1e-12


@dataclass(frozen=True)
class QuasiSpec:
    T: float
    deltaT: float
    t: float = 0.0
    m: float = 1.0

    def __post_init__(self):
        if not (self.deltaT > 0 and math.isfinite(self.deltaT)):
            raise ValueError("deltaT must be positive")
        if not self.m > 0:
            raise ValueError("mass must be positive")

    @property
    def tau(self):
        """``T - t``."""
        return self.T - self.t

    @property
    def damping(self):
        """Coefficient ``c`` of ``exp(-c p**4)`` in the amplitude."""
        return self.deltaT ** 2 / (8 * self.m ** 2 * HBAR ** 2)

    @property
    def prefactor(self):
        return 2 * math.pi ** 0.25 * math.sqrt(self.deltaT) / math.sqrt(H * self.m)

    def at(self, t):
        return replace(self, t=float(t))


def quasi_momentum_amp(p, spec):
    p = np.asarray(p, dtype=float)
    pp = np.where(p > 0, p, 0.0)
    out = spec.prefactor * np.sqrt(pp) * np.exp(1j * spec.tau * pp * pp / (2 * spec.m * HBAR)
                                               - spec.damping * pp ** 4)
    out = np.where(p > 0, out, 0j)
    return out[()] if out.ndim == 0 else out


def _transform(spec, a, b, nu=0.5, tol=_TOL):
    """``int_0^inf p**nu exp(-c p**4) exp(i (a p + b p**2)) dp`` for vectors ``a``, ``b``."""
    c = spec.damping
    return oscint.damped_quartic_transform(lambda p: p ** nu * np.exp(-c * p ** 4), c, a, b, tol)[0]


def _far_field(x, spec, rtol=1e-13, max_terms=40):
    """Endpoint expansion of ``int_0^inf p**0.5 g(p) exp(i x p) dp`` for large ``|x|``.

    ``g = exp(i beta p**2 - c p**4) = sum_j e_j p**(2j)`` integrated term by
    term.  Returns ``(value, ok)``; ``ok`` is False where the smallest term is
    not below ``rtol`` or where a stationary point of the phase still carries
    weight.
    """
    beta = spec.tau / (2 * spec.m * HBAR)
    c = spec.damping
    x = np.asarray(x, dtype=float)
    ax = np.where(x != 0, np.abs(x), 1.0)
    sgn = np.sign(x)
    total = np.zeros(x.shape, dtype=complex)
    last = np.full(x.shape, np.inf)
    done = np.zeros(x.shape, dtype=bool)
    e_prev, e = 0j, 1.0 + 0j
    for j in range(max_terms):
        s = 1.5 + 2 * j
        with np.errstate(over="ignore", invalid="ignore"):
            term = e * math.gamma(s) * np.exp(0.5j * math.pi * s * sgn) * ax ** -s
            mag = np.abs(term)
        if e != 0:
            done |= (mag > last) | ~np.isfinite(mag)
            add = ~done
            total[add] += term[add]
            last = np.where(add, mag, last)
        e_prev, e = e, (1j * beta * e - 2 * c * e_prev) / (j + 1)
    ok = (last <= rtol * np.abs(total)) & (x != 0) & (last > 0)
    if beta != 0:
        # stationary point p_s = -x / (2 beta) on the positive axis
        ps = -x / (2 * beta)
        weight = np.sqrt(np.maximum(ps, 0.0)) * np.exp(-c * np.maximum(ps, 0.0) ** 4) * math.sqrt(math.pi / abs(beta))
        ok &= (ps <= 0) | (weight <= 1e-3 * rtol * np.abs(total))
    return total, ok


def quasi_coordinate_amp(x, spec, tol=_TOL):
    """``<x|Psi(t; T, dT)>`` for scalar or array ``x``.

    Large ``|x|`` uses the endpoint expansion when it is accurate to
    ``1e-13``; the remaining points are integrated numerically.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    vals, ok = _far_field(flat, spec)
    # the endpoint expansion is only trusted well outside the packet
    ok &= np.abs(flat - quasi_centroid(spec)) > 20 * _width_scale(spec)
    rest = ~ok
    if rest.any():
        vals[rest] = _transform(spec, flat[rest] / HBAR, spec.tau / (2 * spec.m * HBAR), 0.5, tol)
    out = (spec.prefactor / math.sqrt(H) * vals).reshape(x.shape)
    return out[()] if out.ndim == 0 else out


def quasi_coordinate_derivative(x, spec, tol=_TOL):
    """``d/dx <x|Psi>`` from the ``i p / hbar`` weighted integrand."""
    x = np.asarray(x, dtype=float)
    vals = _transform(spec, x.ravel() / HBAR, spec.tau / (2 * spec.m * HBAR), 1.5, tol)
    out = (1j / HBAR * spec.prefactor / math.sqrt(H) * vals).reshape(x.shape)
    return out[()] if out.ndim == 0 else out


def quasi_flux(x, spec, tol=_TOL):
    """Probability current ``J(x, t)``."""
    psi = quasi_coordinate_amp(x, spec, tol)
    dpsi = quasi_coordinate_derivative(x, spec, tol)
    return HBAR / spec.m * np.imag(np.conjugate(psi) * dpsi)


def quasi_flux_at_origin(t, spec, tol=_TOL):
    """``J(0, t)`` for an array of times (``spec.t`` is ignored)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    b = (spec.T - t) / (2 * spec.m * HBAR)
    zero = np.zeros_like(b)
    k = spec.prefactor / math.sqrt(H)
    psi = k * _transform(spec, zero, b, 0.5, tol)
    dpsi = 1j / HBAR * k * _transform(spec, zero, b, 1.5, tol)
    return HBAR / spec.m * np.imag(np.conjugate(psi) * dpsi)


# ---------------------------------------------------------------------------
# closed forms

def quasi_overlap(T, Tprime, deltaT):
    """``<Psi(T')|Psi(T)> = w((T - T') / (2 dT))`` at equal ``t`` and width."""
    if not deltaT > 0:
        raise ValueError("deltaT must be positive")
    return complex(specfun.faddeeva_w((T - Tprime) / (2.0 * deltaT)))


def quasi_moments(spec, n):
    """``<p**n> = Gamma((n+2)/4) pi**(-(1+n)/2) (dT / (h m))**(-n/2)``."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    g = specfun.gamma_real((n + 2) / 4.0)
    return g * math.pi ** (-(1 + n) / 2.0) * (spec.deltaT / (H * spec.m)) ** (-n / 2.0)


def quasi_energy(spec):
    """Mean energy ``h / (2 pi**1.5 dT)``."""
    return H / (2 * math.pi ** 1.5 * spec.deltaT)


def quasi_energy_spread(spec):
    """Energy standard deviation ``(1/2 - 1/pi)**0.5 hbar / dT``."""
    return math.sqrt(0.5 - 1 / math.pi) * HBAR / spec.deltaT


def quasi_velocity(spec):
    return math.gamma(0.75) * math.sqrt(H / (spec.deltaT * spec.m * math.pi ** 2))


def quasi_centroid(spec):
    """``<x> = -velocity * (T - t)``; it crosses the origin at ``t = T``."""
    return -quasi_velocity(spec) * spec.tau


def quasi_peak_density(spec):
    """``|<0|Psi(t=T)>|**2 = (m / (h dT))**0.5 Gamma(3/8)**2 / (pi 2**1.25)``."""
    return math.sqrt(spec.m / (H * spec.deltaT)) * math.gamma(0.375) ** 2 / (math.pi * 2 ** 1.25)


def quasi_peak_flux(spec):
    """``J(0, t=T) = Gamma(3/8) Gamma(5/8) / (2 pi**1.5 dT)``, independent of the mass."""
    return math.gamma(0.375) * math.gamma(0.625) / (2 * math.pi ** 1.5 * spec.deltaT)


def quasi_residual_norm_exact(spec):
    """Norm of ``(T_op - T) Psi`` at ``t = 0``: ``dT / sqrt(2)``, independent of ``T`` and ``m``."""
    return spec.deltaT / math.sqrt(2.0)


# ---------------------------------------------------------------------------
# numerical checks of the closed forms

def quasi_eigen_residual(spec, tol=1e-12):
    """Norm of ``T_op Psi - T Psi`` by momentum quadrature.

    The arrival-time operator ``-(m/2)(p^-1 x + x p^-1)`` is applied with
    the analytic logarithmic derivative of the amplitude.
    """
    if spec.t != 0:
        raise ValueError("residual is defined for t = 0")
    m, c, T = spec.m, spec.damping, spec.T

    def res2(p):
        psi = quasi_momentum_amp(p, spec)
        dlog = 0.5 / p + 1j * T * p / (m * HBAR) - 4 * c * p ** 3
        top = -1j * m * HBAR * (dlog / p - 0.5 / p ** 2) * psi
        return np.abs(top - T * psi) ** 2

    return math.sqrt(oscint.integrate_damped_quartic(res2, 2 * c, tol * 1e-4).value.real)


def quasi_momentum_norm(spec, tol=1e-12):
    c = spec.damping
    return oscint.integrate_damped_quartic(lambda p: np.abs(quasi_momentum_amp(p, spec)) ** 2, 2 * c, tol).value.real


def quasi_tail_coefficient(spec):
    """``C`` in ``|<x|Psi>|**2 ~ C / |x|**3`` for ``|x| -> inf`` (endpoint term)."""
    return spec.prefactor ** 2 * math.gamma(1.5) ** 2 / H


def _grid(center, inner, W, per_panel_levels=4):
    # panels graded geometrically away from the center out to +-W
    k = max(1, int(math.ceil(math.log2(W / inner))))
    radii = inner * 2.0 ** np.arange(k + 1)
    radii[-1] = W
    edges = np.concatenate([center - radii[::-1], [center], center + radii])
    fine = [np.linspace(a, b, per_panel_levels + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
    return np.concatenate(fine + [edges[-1:]])


def _windowed(spec, weight, tol, tail_target, inner=None, tail=None):
    """``int weight(x) |psi(x)|**2 dx`` over a growing window around the centroid."""
    center = quasi_centroid(spec)
    if inner is None:
        inner = 0.5 * _width_scale(spec)
    C = quasi_tail_coefficient(spec)
    # missing norm on both sides ~ C / W**2
    W = max(64 * inner, 2 * abs(center), math.sqrt(C / tail_target))
    levels = 4
    prev = None
    for _ in range(8):
        edges = _grid(center, inner, W, levels)
        xs, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            xn, wn = oscint.composite_nodes(a, b, 1)
            xs.append(xn)
            ws.append(wn)
        x = np.concatenate(xs)
        w = np.concatenate(ws)
        dens = np.abs(quasi_coordinate_amp(x, spec, tol)) ** 2
        val = math.fsum(w * weight(x) * dens)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            break
        prev = val
        levels *= 2
    extra = 0.0 if tail is None else tail(center, W, C)
    return val + extra, W


def quasi_position_norm(spec, tol=1e-10, tail_target=1e-8):
    """``int |<x|Psi>|**2 dx`` by position-space quadrature.

    The window ``[<x> - W, <x> + W]`` is grown until the estimated missing
    probability ``C / W**2`` falls below ``tail_target``; that estimate is
    then added.
    """
    val, _ = _windowed(spec, lambda x: 1.0, tol, tail_target,
                       tail=lambda c, W, C: 0.5 * C * (1 / (W + c) ** 2 + 1 / (W - c) ** 2))
    return val


def quasi_position_centroid(spec, tol=1e-10, tail_target=1e-8):
    """``<x>`` by quadrature over a symmetric window (leading tails added)."""
    tail = lambda c, W, C: C * (1 / (W + c) - 1 / (W - c))
    val, _ = _windowed(spec, lambda x: x, tol, tail_target, tail=tail)
    return val


def half_norm_right(spec, tol=1e-10):
    """``int_0^inf |<x|Psi>|**2 dx`` including the ``C / (2 W**2)`` tail."""
    C = quasi_tail_coefficient(spec)
    W = math.sqrt(C / 1e-9)
    inner = 0.5 * _width_scale(spec)
    right = np.concatenate([[0.0], inner * 2.0 ** np.arange(0, int(math.ceil(math.log2(W / inner))) + 1)])
    levels = 4
    prev = None
    for _ in range(8):
        xs, ws = [], []
        for a, b in zip(right[:-1], right[1:]):
            xn, wn = oscint.composite_nodes(a, b, levels)
            xs.append(xn)
            ws.append(wn)
        x, w = np.concatenate(xs), np.concatenate(ws)
        val = math.fsum(w * np.abs(quasi_coordinate_amp(x, spec, tol)) ** 2)
        if prev is not None and abs(val - prev) <= tol:
            break
        prev = val
        levels *= 2
    return val + 0.5 * C / right[-1] ** 2


def density_peak(spec, tol=_TOL):
    """Position and value of the maximum of ``|<x|Psi>|**2``."""
    c = quasi_centroid(spec)
    scale = _width_scale(spec)
    xs = np.linspace(c - 6 * scale, c + 6 * scale, 601)
    d = np.abs(quasi_coordinate_amp(xs, spec, tol)) ** 2
    i = int(np.argmax(d))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    res = optimize.minimize_scalar(lambda x: -abs(quasi_coordinate_amp(x, spec, tol)) ** 2,
                                   bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * scale})
    return float(res.x), float(-res.fun)


def _width_scale(spec):
    # width ~ (hbar dT / m)**0.5 at t = T, spreading as |T - t| <p> / m
    return math.sqrt(HBAR * spec.deltaT / spec.m) + abs(spec.tau) * quasi_velocity(spec) * 0.5


def half_width(spec, tol=_TOL):
    """Half width at half height of the position density."""
    x0, peak = density_peak(spec, tol)
    scale = _width_scale(spec)
    f = lambda x: abs(quasi_coordinate_amp(x, spec, tol)) ** 2 - 0.5 * peak
    sides = []
    for direction in (-1, 1):
        step = 0.05 * scale
        b = x0 + direction * step
        while f(b) > 0:
            step *= 1.5
            b = x0 + direction * step
            if step > 1e3 * scale:
                raise ArithmeticError("half height not bracketed")
        a = b - direction * step / 1.5 if step > 0.05 * scale else x0
        sides.append(optimize.brentq(f, min(a, b), max(a, b), xtol=1e-14 * scale))
    return 0.5 * (sides[1] - sides[0])

"""Normalized momentum-space states.

A state is stored as a non-oscillatory envelope ``e(p)`` on a list of
support intervals together with a spatial shift ``x0`` and an evolution
time ``t``:

    psi(p) = e(p) * exp(-1j * p * x0 / hbar - 1j * p**2 * t / (2 m hbar)).

Keeping the two phases separate lets every transform fold them into the
quadratic-phase kernel instead of resolving them on the envelope.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicSpline

from .. import oscint
from ..units import HBAR

NORM_TOL = 1e-8
# Gaussian presets are cut at p0 +- GAUSS_WIDTHS * sigma, where |psi|^2 < 1e-36.
GAUSS_WIDTHS = 13.0

_QUAD_TOL = 1e-13
_LIMIT_POINTS = (1e-5, 1e-6)


def _split_at_zero(lo, hi):
    if lo < 0 < hi:
        return ((lo, 0.0), (0.0, hi))
    return ((lo, hi),)


@dataclass(frozen=True)
class MomentumState:
    """Normalized state with envelope ``envelope`` on ``support``.

    ``law`` maps a momentum sign to ``(c, k)`` with ``psi ~ c |p|**k`` as
    ``p -> 0`` on that side; missing signs are estimated by sampling.
    """

    envelope: object
    support: tuple
    mass: float = 1.0
    x0: float = 0.0
    t: float = 0.0
    derivative: object = None
    law: dict = field(default_factory=dict)
    breakpoints: tuple = ()
    label: str = "custom"
    check_norm: bool = field(default=True, compare=False)

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        pieces = []
        for lo, hi in self.support:
            if not lo < hi:
                raise ValueError(f"empty support interval ({lo}, {hi})")
            pieces.extend(_split_at_zero(float(lo), float(hi)))
        object.__setattr__(self, "support", tuple(pieces))
        if self.check_norm:
            n = self.norm()
            if abs(n - 1.0) > NORM_TOL:
                raise ValueError(f"state is not normalized: norm = {n!r}")

    # -- evaluation -----------------------------------------------------

    def _inside(self, p):
        mask = np.zeros(p.shape, dtype=bool)
        for lo, hi in self.support:
            mask |= (p >= lo) & (p <= hi)
        return mask

    def phase(self, p):
        p = np.asarray(p, dtype=float)
        return np.exp(-1j * p * self.x0 / HBAR - 0.5j * p * p * self.t / (self.mass * HBAR))

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        out = np.where(self._inside(p), np.asarray(self.envelope(p), dtype=complex) * self.phase(p), 0j)
        return out[()] if out.ndim == 0 else out

    def envelope_derivative(self, p):
        p = np.asarray(p, dtype=float)
        if self.derivative is not None:
            return np.asarray(self.derivative(p), dtype=complex)
        # five-point stencil, step scaled to the support
        h = 1e-4 * max(1.0, max(abs(b) for _, b in self.support), max(abs(a) for a, _ in self.support))
        f = self.envelope
        return (f(p - 2 * h) - 8 * f(p - h) + 8 * f(p + h) - f(p + 2 * h)) / (12 * h)

    def derivative_values(self, p):
        """``d psi / dp`` including both phases."""
        p = np.asarray(p, dtype=float)
        e = np.asarray(self.envelope(p), dtype=complex)
        de = self.envelope_derivative(p)
        rate = -1j * self.x0 / HBAR - 1j * p * self.t / (self.mass * HBAR)
        out = np.where(self._inside(p), (de + rate * e) * self.phase(p), 0j)
        return out[()] if out.ndim == 0 else out

    # -- integrals ------------------------------------------------------

    def integrate(self, f, tol=_QUAD_TOL):
        """``sum over support of int f(p) dp`` for a vectorized ``f``."""
        total = 0j
        for lo, hi in self.support:
            bp = tuple(b for b in self.breakpoints if lo < b < hi)
            rep = oscint.integrate_interval(f, lo, hi, tol, sqrt_start=(lo == 0.0), breakpoints=bp)
            total += rep.value
        return total

    def norm(self):
        return self.integrate(lambda p: np.abs(self.envelope(p)) ** 2).real

    def sign_weight(self, sign):
        pieces = [(lo, hi) for lo, hi in self.support if (hi > 0 if sign > 0 else lo < 0)]
        total = 0.0
        for lo, hi in pieces:
            total += oscint.integrate_interval(lambda p: np.abs(self.envelope(p)) ** 2, lo, hi, _QUAD_TOL).value.real
        return total

    def momentum_moment(self, n):
        return self.integrate(lambda p: p ** n * np.abs(self.envelope(p)) ** 2).real

    def position_moments(self):
        """``(<x>, <x^2>)`` with ``x = i hbar d/dp``."""
        mean = self.integrate(lambda p: np.conjugate(self(p)) * 1j * HBAR * self.derivative_values(p)).real
        second = self.integrate(lambda p: HBAR ** 2 * np.abs(self.derivative_values(p)) ** 2).real
        return mean, second

    def time_scale(self):
        """Rough width of the arrival-time distribution, used to grade grids."""
        P2 = self.momentum_moment(2)
        P = math.sqrt(P2)
        p1 = self.momentum_moment(1)
        dp = math.sqrt(max(P2 - p1 * p1, 0.0))
        xm, x2 = self.position_moments()
        dx = math.sqrt(max(x2 - xm * xm, 0.0))
        return self.mass * (dx / P + abs(xm) * dp / P2 + HBAR / P2)

    def time_centre(self):
        """Classical arrival time ``-m <x><p> / <p^2>`` at the origin."""
        xm, _ = self.position_moments()
        return -self.mass * xm * self.momentum_moment(1) / self.momentum_moment(2)

    # -- small-momentum behaviour ---------------------------------------

    def touches_zero(self, sign):
        return any((lo == 0.0 and sign > 0) or (hi == 0.0 and sign < 0) for lo, hi in self.support)

    def small_p_law(self, sign):
        """``(c, k)`` with ``psi(p) ~ c |p|**k`` as ``p -> 0`` from side ``sign``.

        Returns ``None`` when the support does not reach ``p = 0`` from that side.
        """
        if not self.touches_zero(sign):
            return None
        if sign in self.law:
            return self.law[sign]
        p = sign * np.array(_LIMIT_POINTS)
        v = np.abs(np.asarray(self.envelope(p), dtype=complex))
        if not np.all(v > 0):
            return (0j, math.inf)
        k = math.log(v[0] / v[1]) / math.log(abs(p[0] / p[1]))
        k = round(2 * k) / 2 if abs(2 * k - round(2 * k)) < 1e-3 else k
        c = complex(np.asarray(self.envelope(p[1:]), dtype=complex)[0]) / abs(p[1]) ** k
        return (c, k)

    @property
    def domain_flag(self):
        """True iff ``psi(p) / |p|**1.5 -> 0`` as ``p -> 0`` from either side.

        Decided from the small-momentum exponent: the state is inside the
        operator domain when every side touching ``p = 0`` has ``k > 3/2``
        (or vanishes identically there).
        """
        for sign in (1, -1):
            law = self.small_p_law(sign)
            if law is None:
                continue
            c, k = law
            if c != 0 and not k > 1.5 + 1e-9:
                return False
        return True

    # -- transformations ------------------------------------------------

    def conjugate(self):
        """State with momentum amplitude ``psi(p)*``."""
        env, der = self.envelope, self.derivative
        return replace(
            self,
            envelope=lambda p: np.conjugate(env(p)),
            derivative=None if der is None else (lambda p: np.conjugate(der(p))),
            x0=-self.x0,
            t=-self.t,
            law={s: (complex(c).conjugate(), k) for s, (c, k) in self.law.items()},
            label=f"conj({self.label})",
            check_norm=False,
        )

    def evolve(self, t):
        """Free evolution over time ``t``: ``psi -> exp(-i p^2 t / 2 m hbar) psi``."""
        return replace(self, t=self.t + float(t), label=f"evolve({self.label},{t:g})", check_norm=False)

    def shift(self, dx):
        """Spatial translation by ``dx``: ``psi -> exp(-i p dx / hbar) psi``."""
        return replace(self, x0=self.x0 + float(dx), label=f"shift({self.label},{dx:g})", check_norm=False)

    def reflect(self):
        """Spatial inversion composed with complex conjugation: ``psi(p) -> psi(-p)*``."""
        env, der = self.envelope, self.derivative
        flipped = tuple(sorted((-hi, -lo) for lo, hi in self.support))
        return replace(
            self,
            envelope=lambda p: np.conjugate(env(-np.asarray(p))),
            derivative=None if der is None else (lambda p: -np.conjugate(der(-np.asarray(p)))),
            support=flipped,
            t=-self.t,
            law={-s: (complex(c).conjugate(), k) for s, (c, k) in self.law.items()},
            breakpoints=tuple(sorted(-b for b in self.breakpoints)),
            label=f"reflect({self.label})",
            check_norm=False,
        )


# ---------------------------------------------------------------------------
# presets

def gaussian(p0=10.0, sigma=1.0, x0=-5.0, mass=1.0):
    """``(2 pi sigma^2)^(-1/4) exp(-(p - p0)^2 / 4 sigma^2 - i p x0)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    norm = (2 * math.pi * sigma * sigma) ** -0.25

    def env(p):
        return norm * np.exp(-((p - p0) ** 2) / (4 * sigma * sigma)) + 0j

    def der(p):
        return -(p - p0) / (2 * sigma * sigma) * env(p)

    c0 = norm * math.exp(-p0 * p0 / (4 * sigma * sigma))
    lo, hi = p0 - GAUSS_WIDTHS * sigma, p0 + GAUSS_WIDTHS * sigma
    return MomentumState(env, ((lo, hi),), mass, x0=float(x0), derivative=der,
                         law={1: (complex(c0), 0.0), -1: (complex(c0), 0.0)},
                         label=f"gaussian(p0={p0:g},sigma={sigma:g},x0={x0:g})")


def monomial_cutoff(k, rel=1e-18):
    """Momentum beyond which ``p**k exp(-p^2/2)`` is below ``rel`` times its maximum."""
    pk = math.sqrt(k) if k > 0 else 0.0
    logmax = (k * math.log(pk) if k > 0 else 0.0) - pk * pk / 2
    g = lambda p: k * math.log(p) - p * p / 2 - logmax - math.log(rel)
    return optimize.brentq(g, max(pk, 1e-3) + 1e-9, 100.0)


def monomial(k=2.0, mass=1.0):
    """``N p**k exp(-p^2/2)`` for ``p > 0``, ``N = (2 / Gamma(k + 1/2))**0.5``."""
    k = float(k)
    if not k > -0.5:
        raise ValueError("monomial power must exceed -1/2")
    N = math.sqrt(2.0 / math.gamma(k + 0.5))

    def env(p):
        return N * np.abs(p) ** k * np.exp(-p * p / 2) + 0j

    def der(p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lead = np.where(p > 0, k * np.abs(p) ** (k - 1), 0.0) if k != 0 else 0.0
        return N * (lead - p * np.abs(p) ** k) * np.exp(-p * p / 2) + 0j

    return MomentumState(env, ((0.0, monomial_cutoff(k)),), mass, derivative=der,
                         law={1: (complex(N), k)}, label=f"monomial(k={k:g})")


def backflow(p1=3.0, p2=10.0, sigma=0.8, x0=0.0, mass=1.0):
    """Equal-weight sum of two Gaussians, projected on ``p > 0`` and renormalized."""
    g = (2 * math.pi * sigma * sigma) ** -0.25
    s2 = 2 * sigma * sigma
    half = lambda pc: 0.5 * math.erfc(-pc / math.sqrt(s2))
    cross = math.exp(-((p1 - p2) ** 2) / (4 * s2)) * half(0.5 * (p1 + p2))
    n = 1.0 / math.sqrt(half(p1) + half(p2) + 2 * cross)

    def env(p):
        return n * g * (np.exp(-((p - p1) ** 2) / (2 * s2)) + np.exp(-((p - p2) ** 2) / (2 * s2))) + 0j

    def der(p):
        return n * g * (-(p - p1) / s2 * np.exp(-((p - p1) ** 2) / (2 * s2))
                        - (p - p2) / s2 * np.exp(-((p - p2) ** 2) / (2 * s2))) + 0j

    c0 = n * g * (math.exp(-p1 * p1 / (2 * s2)) + math.exp(-p2 * p2 / (2 * s2)))
    hi = max(p1, p2) + GAUSS_WIDTHS * sigma
    return MomentumState(env, ((0.0, hi),), mass, x0=float(x0), derivative=der,
                         law={1: (complex(c0), 0.0)},
                         label=f"backflow(p1={p1:g},p2={p2:g},sigma={sigma:g},x0={x0:g})")


def custom(func, support, *, derivative=None, mass=1.0, law=None, normalize=False, label="custom"):
    """State from a vectorized callable ``func(p)`` on ``support = (lo, hi)`` or a list of intervals."""
    if np.ndim(support) == 1:
        support = (tuple(support),)
    support = tuple((float(a), float(b)) for a, b in support)
    if normalize:
        tmp = MomentumState(func, support, mass, check_norm=False)
        scale = 1.0 / math.sqrt(tmp.norm())
        f0, d0 = func, derivative
        func = lambda p: scale * np.asarray(f0(p), dtype=complex)
        if d0 is not None:
            derivative = lambda p: scale * np.asarray(d0(p), dtype=complex)
        if law:
            law = {s: (c * scale, k) for s, (c, k) in law.items()}
    return MomentumState(func, support, mass, derivative=derivative, law=dict(law or {}), label=label)


def sampled(p, values, *, mass=1.0, normalize=False):
    """State interpolated from samples by a cubic spline; zero outside the sample range."""
    p = np.asarray(p, dtype=float)
    values = np.asarray(values, dtype=complex)
    if p.ndim != 1 or p.shape != values.shape or p.size < 4:
        raise ValueError("need matching 1-d arrays with at least 4 samples")
    if np.any(np.diff(p) <= 0):
        raise ValueError("sample momenta must increase")
    spline = CubicSpline(p, values, extrapolate=False)
    dspline = spline.derivative()

    def env(q):
        out = spline(np.asarray(q, dtype=float))
        return np.nan_to_num(out, nan=0.0)

    def der(q):
        return np.nan_to_num(dspline(np.asarray(q, dtype=float)), nan=0.0)

    knots = tuple(p[1:-1]) if p.size <= 4097 else ()
    state = MomentumState(env, ((p[0], p[-1]),), mass, derivative=der, breakpoints=knots,
                          label=f"sampled(n={p.size})", check_norm=False)
    n = state.norm()
    if normalize:
        return sampled(p, values / math.sqrt(n), mass=mass)
    if abs(n - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized: norm = {n!r}")
    return state


PRESETS = {"gaussian": gaussian, "monomial": monomial, "backflow": backflow}


def from_descriptor(text, mass=1.0):
    """Parse ``name:key=value,...`` (for example ``gaussian:p0=10,sigma=1,x0=-5``)."""
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    if name not in PRESETS:
        raise ValueError(f"unknown state preset {name!r}; choose from {sorted(PRESETS)}")
    kwargs = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"malformed state parameter {item!r}")
        try:
            kwargs[key.strip()] = float(val)
        except ValueError:
            raise ValueError(f"state parameter {key!r} is not a number") from None
    try:
        return PRESETS[name](mass=mass, **kwargs)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from None

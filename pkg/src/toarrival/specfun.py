"""Complex special functions with independent evaluation regimes.

The parabolic cylinder function is handled through its scaled form

    U(z) = exp(z**2/4) * D_{-3/2}(z) = (1/Gamma(3/2)) * int_0^inf t**0.5 exp(-t**2/2 - z*t) dt,

which is what the eigenstate formulas need and which stays O(1) in modulus on
the rays arg z = +-pi/4, +-3pi/4.  Three regimes are available:

* ``"series"``: Taylor series with real coefficients, used for ``|z| <= R_SERIES``;
* ``"asymptotic"``: large-|z| expansion including the Stokes-switched
  exponential term for ``|arg z| > pi/2``, used for ``|z| >= R_ASYMPTOTIC``;
* ``"quadrature"``: Gauss-Legendre quadrature of the integral above along a
  steepest-descent path through the saddle ``t = -z``.

All branches are principal, cut on the negative real axis.
"""
import cmath
import math

import numpy as np
from scipy import special as _sp

from . import kernels
from .errors import AccuracyError, NonConvergenceError, PoleError

R_SERIES = 4.0
R_ASYMPTOTIC = 8.0
# beyond this angle the asymptotic form is not used (Stokes line at arg z = pi)
_ASYM_MAX_ARG = 7.0 * math.pi / 8.0

_G32 = math.gamma(1.5)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def gamma_real(x):
    """Gamma function of a real argument.

    Raises:
        PoleError: ``x`` is zero or a negative integer.
    """
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise PoleError(f"Gamma has a pole at {x!r}")
    return math.gamma(x)


def faddeeva_w(z):
    """Faddeeva function ``w(z) = exp(-z**2) * erfc(-1j*z)``; array aware."""
    out = _sp.wofz(np.asarray(z, dtype=np.complex128))
    return out[()] if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# series regime

def _series_coefficients(n_max=500):
    a = np.empty(n_max + 1)
    a[0] = 2.0 ** -0.25 * math.gamma(0.75) / _G32
    a[1] = -(2.0 ** 0.25) * math.gamma(1.25) / _G32
    for n in range(n_max - 1):
        a[n + 2] = a[n] * (2 * n + 3) / (2.0 * (n + 1) * (n + 2))
    return a


_SERIES_COEFFS = _series_coefficients()
_SERIES_TAIL_REL = 1e-13


def _series_terms_needed(r):
    mags = np.abs(_SERIES_COEFFS) * r ** np.arange(_SERIES_COEFFS.size)
    total = mags.sum()
    # reverse cumulative sum = bound on everything not yet added
    tail = np.cumsum(mags[::-1])[::-1]
    # |U| >~ |z|**-1.5 on the rays, so this keeps the tail 1e-13 below the sum
    floor = _SERIES_TAIL_REL * 1e-3 * min(1.0, max(r, 1.0) ** -1.5)
    ok = np.nonzero(tail < floor)[0]
    if ok.size == 0 or not np.isfinite(total):
        raise NonConvergenceError(f"power series needs more than {_SERIES_COEFFS.size} terms at |z|={r}")
    return int(ok[0])


def _pcf_series(z):
    rmax = float(np.max(np.abs(z))) if z.size else 0.0
    n = max(_series_terms_needed(rmax), 2)
    return kernels.horner(_SERIES_COEFFS[:n], z)


# ---------------------------------------------------------------------------
# asymptotic regime

def _pcf_asymptotic(z):
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty_like(z)
    for idx, zz in np.ndenumerate(z):
        out[idx] = _pcf_asymptotic_scalar(complex(zz))
    return out


def _asym_sum(z2, first, alternating):
    # sum_s (+-1)^s (first)_{2s} / (s! (2 z^2)^s), cut at the smallest term
    term = 1.0 + 0j
    total = term
    prev = abs(term)
    for s in range(200):
        ratio = (first + 2 * s) * (first + 2 * s + 1) / ((s + 1) * 2.0 * z2)
        nxt = term * (-ratio if alternating else ratio)
        if abs(nxt) >= prev:
            break
        term = nxt
        total += term
        prev = abs(term)
        if prev < 1e-17 * abs(total):
            break
    return total, prev


def _pcf_asymptotic_scalar(z):
    z2 = z * z
    s1, last1 = _asym_sum(z2, 1.5, True)
    val = z ** -1.5 * s1
    err = abs(z ** -1.5) * last1
    th = cmath.phase(z)
    if abs(th) > math.pi / 2:
        s2, last2 = _asym_sum(z2, -0.5, False)
        sign = -1j if th > 0 else 1j
        big = sign * (_SQRT_2PI / _G32) * cmath.exp(z2 / 2) * cmath.sqrt(z)
        val += big * s2
        err += abs(big) * last2
    if err > 1e-12 * abs(val):
        raise AccuracyError(f"asymptotic expansion too inaccurate at z={z} (est. {err / abs(val):.1e})")
    return val


# ---------------------------------------------------------------------------
# quadrature regime

_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


def _gl_line(f, a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = mid[:, None] + half[:, None] * _GL_X
    return np.sum(f(x) * (half[:, None] * _GL_W))


def _pcf_quadrature_scalar(z, rtol=1e-14, max_panels=512):
    if z.real >= 0.0:
        def total(n):
            # t = v**2 removes the sqrt endpoint; t_max = 11 puts exp(-t^2/2) below 1e-26
            return _gl_line(lambda v: 2.0 * v * v * np.exp(-0.5 * v ** 4 - z * v * v), 0.0, math.sqrt(11.0), n)
    else:
        w = -z
        w32 = w ** 1.5
        z2 = z * z

        def total(n):
            seg = _gl_line(lambda lam: 2.0 * w32 * lam * lam * np.exp(z2 * (lam * lam - 0.5 * lam ** 4)), 0.0, 1.0, n)
            ray = _gl_line(lambda r: np.sqrt(w + r) * np.exp(0.5 * z2 - 0.5 * r * r), 0.0, 11.0, n)
            return seg + ray

    n = 4
    prev = total(n)
    while n < max_panels:
        n *= 2
        cur = total(n)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur / _G32
        prev = cur
    raise AccuracyError(f"quadrature regime did not converge at z={z}")


def _pcf_quadrature(z):
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty_like(z)
    for idx, zz in np.ndenumerate(z):
        out[idx] = _pcf_quadrature_scalar(complex(zz))
    return out


# ---------------------------------------------------------------------------

def pcf_scaled_m32(z, regime="auto"):
    """Return ``exp(z**2/4) * D_{-3/2}(z)``.

    Args:
        z: complex scalar or array, ``|z| < 1e4``.
        regime: ``"auto"``, ``"series"``, ``"asymptotic"`` or ``"quadrature"``.

    Raises:
        AccuracyError: the selected regime cannot deliver ~1e-12 relative accuracy.
    """
    z = np.asarray(z, dtype=np.complex128)
    if not np.all(np.isfinite(z)):
        raise ValueError("z must be finite")
    if np.any(np.abs(z) >= 1e4):
        raise ValueError("|z| must be below 1e4")
    if regime == "series":
        out = _pcf_series(z)
    elif regime == "asymptotic":
        out = _pcf_asymptotic(z)
    elif regime == "quadrature":
        out = _pcf_quadrature(z)
    elif regime == "auto":
        r = np.abs(z)
        th = np.abs(np.angle(z))
        ser = r <= R_SERIES
        asy = (r >= R_ASYMPTOTIC) & (th <= _ASYM_MAX_ARG)
        quad = ~(ser | asy)
        out = np.empty_like(z)
        if ser.any():
            out[ser] = _pcf_series(z[ser])
        if asy.any():
            out[asy] = _pcf_asymptotic(z[asy])
        if quad.any():
            out[quad] = _pcf_quadrature(z[quad])
    else:
        raise ValueError(f"unknown regime {regime!r}")
    if not np.all(np.isfinite(out)):
        raise AccuracyError("non-finite parabolic cylinder value")
    return out[()] if out.ndim == 0 else out


def pcf_d_m32(z, regime="auto"):
    """Parabolic cylinder function ``D_{-3/2}(z)``.

    ``D_{-3/2}(0) = 2**(-3/4) sqrt(pi) / Gamma(5/4) > 0``; the sign is the one
    given by direct quadrature of the integral representation.
    """
    z = np.asarray(z, dtype=np.complex128)
    out = np.exp(-0.25 * z * z) * pcf_scaled_m32(z, regime)
    return out[()] if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# incomplete gamma

SERIES_SAFE_RADIUS = 30.0


def lower_incomplete_gamma_scaled(A, z, *, max_terms=500, radius=SERIES_SAFE_RADIUS):
    """Return ``z**(-A) * gamma(A, z) = sum_n (-z)**n / (n! (A + n))``.

    The scaled form has no branch cut in ``z``.

    Raises:
        ValueError: ``Re A <= 0``.
        NonConvergenceError: ``|z| > radius`` or more than ``max_terms`` terms needed.
    """
    A = complex(A)
    z = complex(z)
    if A.real <= 0.0:
        raise ValueError("series requires Re A > 0")
    r = abs(z)
    if r > radius:
        raise NonConvergenceError(f"|z|={r:.3g} exceeds series-safe radius {radius}")
    u = 1.0 + 0j
    total = u / A
    for n in range(max_terms):
        u *= -z / (n + 1)
        total += u / (A + n + 1)
        q = r / (n + 2)
        if q < 1.0:
            tail = abs(u) * q / (A.real + n + 2) / (1.0 - q)
            if tail <= 1e-13 * abs(total):
                return total
    raise NonConvergenceError(f"incomplete gamma series did not converge in {max_terms} terms")


def lower_incomplete_gamma(A, z, **kwargs):
    """Lower incomplete gamma ``gamma(A, z)`` for complex ``A`` with ``Re A > 0``."""
    z = complex(z)
    if z == 0:
        if complex(A).real <= 0.0:
            raise ValueError("series requires Re A > 0")
        return 0j
    return z ** complex(A) * lower_incomplete_gamma_scaled(A, z, **kwargs)

"""Oscillatory integrals along deformed contours.

Three integrators live here:

``integrate_contour``
    adaptive Gauss-Kronrod (7/15) panels along a :class:`ContourPath` made of
    straight segments plus an optional terminal ray, truncated by a damping
    threshold.
``integrate_real_axis``
    slow composite Gauss-Legendre reference on ``[0, p_max]`` with panel
    doubling.  Only runs with ``slow=True``.
``integrate_damped_quartic``
    the same composite rule for integrands carrying ``exp(-c p**4)``, with the
    cut-off derived from ``c``.

``quadratic_phase_transform`` evaluates many such real-axis integrals at once
(one per position or time) through :func:`toarrival.kernels.chirp_sum`.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NonConvergenceError, OracleQuarantineError, ToleranceNotMet

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

_GL_ORDER = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)

DAMPING_THRESHOLD = 1e-16


@dataclass(frozen=True)
class QuadratureReport:
    value: complex
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.error_estimate >= 0.0:
            raise ValueError("error_estimate must be non-negative")


@dataclass(frozen=True)
class ContourPath:
    """Piecewise-linear path in the complex momentum plane.

    ``segments`` are ``(start, end)`` pairs joined end to start.  When
    ``ray_direction`` is set, the path continues from the last end point along
    that unit direction to infinity; ``orientation = -1`` flips the sign of
    the result (paths that run from infinity inwards); ``ray_scale`` is the decay length used
    for marching and ``ray_peak`` the ray parameter of the largest integrand
    (for example a saddle point).  Pieces starting at ``branch_point`` are
    integrated with a square-root substitution.
    """

    segments: tuple
    ray_direction: complex = None
    ray_scale: float = 1.0
    ray_peak: float = 0.0
    damping_threshold: float = DAMPING_THRESHOLD
    branch_point: complex = 0j
    cut_direction: complex = -1.0 + 0j
    orientation: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        segs = tuple((complex(a), complex(b)) for a, b in self.segments)
        object.__setattr__(self, "segments", segs)
        for (_, b), (a, _) in zip(segs, segs[1:]):
            if abs(a - b) > 1e-12 * max(1.0, abs(a)):
                raise ValueError("contour segments are not connected")
        if self.ray_direction is not None:
            d = complex(self.ray_direction)
            if abs(abs(d) - 1.0) > 1e-12:
                raise ValueError("ray_direction must be a unit complex number")
            object.__setattr__(self, "ray_direction", d)
        for a, b in segs:
            if self._crosses_cut(a, b):
                raise ValueError("contour touches the branch cut")

    @property
    def ray_start(self):
        return self.segments[-1][1] if self.segments else self.branch_point

    def _crosses_cut(self, a, b):
        # cut = branch_point + cut_direction * [0, inf); rotate it onto the negative real axis
        rot = -1.0 / self.cut_direction
        ua, ub = (a - self.branch_point) * rot, (b - self.branch_point) * rot
        for u in (ua, ub):
            if u.real < 0 and abs(u.imag) <= 1e-300:
                return True
        if (ua.imag > 0) != (ub.imag > 0) and ua.imag != ub.imag:
            s = ua.imag / (ua.imag - ub.imag)
            x = ua.real + s * (ub.real - ua.real)
            return x < 0
        return False

    def point(self, r):
        """Point on the terminal ray at parameter ``r``."""
        return self.ray_start + self.ray_direction * r


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod core

def _gk_panels(g, lefts, rights):
    mid = 0.5 * (lefts + rights)
    half = 0.5 * (rights - lefts)
    s = mid[:, None] + half[:, None] * _NODES
    vals = g(s)
    k = (vals @ _KW) * half
    gg = (vals @ _GW) * half
    scale = np.max(np.abs(vals), axis=1) * np.abs(half)
    return k, np.abs(k - gg), scale


def _gk_adaptive(g, edges, target, max_panels=20000):
    """Integrate real-parameter ``g`` over consecutive ``edges``.

    Returns ``(values, errors, lefts, evaluations, peak)`` for the accepted
    panels; error shares are allotted in proportion to panel length.
    """
    edges = np.asarray(edges, dtype=float)
    lefts, rights = edges[:-1], edges[1:]
    length = float(edges[-1] - edges[0])
    acc_l, acc_v, acc_e = [], [], []
    evals = 0
    peak = 0.0
    while lefts.size:
        k, e, scale = _gk_panels(g, lefts, rights)
        evals += 15 * lefts.size
        peak = max(peak, float(scale.max()) if scale.size else 0.0)
        width = rights - lefts
        share = target * width / length
        # panels reduced to rounding level are accepted as they are
        ok = (e <= share) | (e <= 1e-15 * scale) | (width <= 1e-13 * max(1.0, abs(edges[-1])))
        acc_l.append(lefts[ok])
        acc_v.append(k[ok])
        acc_e.append(e[ok])
        bad = ~ok
        if not bad.any():
            break
        m = 0.5 * (lefts[bad] + rights[bad])
        lefts = np.concatenate([lefts[bad], m])
        rights = np.concatenate([m, rights[bad]])
        if sum(a.size for a in acc_l) + lefts.size > max_panels:
            acc_l.append(lefts)
            acc_v.append(_gk_panels(g, lefts, rights)[0])
            acc_e.append(np.full(lefts.size, np.inf))
            break
    return np.concatenate(acc_l), np.concatenate(acc_v), np.concatenate(acc_e), evals, peak


def _ordered_sum(lefts, values):
    order = np.argsort(lefts, kind="stable")
    v = values[order]
    return complex(math.fsum(v.real), math.fsum(v.imag))


def _geometric_edges(n_levels=30):
    # panels graded towards 0 so that any decay scale near the start is resolved
    return np.concatenate([[0.0], 2.0 ** -np.arange(n_levels, -1, -1.0)])


def _piece(f, a, b, target, sqrt_start):
    """Integrate ``f`` along the straight piece a -> b."""
    d = b - a
    if sqrt_start:
        def g(v):
            return f(a + d * v * v) * (2.0 * d * v)
    else:
        def g(s):
            return f(a + d * s) * d
    edges = _geometric_edges() if sqrt_start else np.linspace(0.0, 1.0, 3)
    lefts, vals, errs, evals, _ = _gk_adaptive(g, edges, target)
    return _ordered_sum(lefts, vals), float(np.sum(errs)), evals


def integrate_contour(f, path, tol=1e-10, *, rtol=0.0, max_chunks=400):
    """Integrate analytic ``f`` along ``path``.

    Args:
        f: vectorized callable on complex arrays.
        path: :class:`ContourPath`.
        tol: absolute tolerance on the reported error estimate.
        rtol: relative tolerance; the run succeeds when
            ``error_estimate <= max(tol, rtol * |value|)``.

    Raises:
        ToleranceNotMet: with the best estimate attached.
    """
    if tol <= 0 and rtol <= 0:
        raise ValueError("tol must be positive")

    def run(target):
        pieces, err, evals = [], 0.0, 0
        n_items = len(path.segments) + (1 if path.ray_direction is not None else 0)
        share = target / max(1, n_items)
        for a, b in path.segments:
            if a == b:
                continue
            v, e, n = _piece(f, a, b, share, abs(a - path.branch_point) == 0.0)
            pieces.append(v)
            err += e
            evals += n
        if path.ray_direction is not None:
            running = complex(math.fsum(p.real for p in pieces), math.fsum(p.imag for p in pieces))
            v, e, n = _ray(f, path, share, running, max_chunks)
            pieces.append(v)
            err += e
            evals += n
        value = complex(math.fsum(p.real for p in pieces), math.fsum(p.imag for p in pieces))
        return path.orientation * value, err, evals

    # a rough pass fixes the scale the relative tolerance refers to
    value, err, evals = run(math.inf)
    total = evals
    goal = max(tol, rtol * abs(value))
    target = 0.5 * goal
    for _ in range(3):
        value, err, evals = run(target)
        total += evals
        goal = max(tol, rtol * abs(value))
        if err <= goal:
            return QuadratureReport(value, err, total)
        target = 0.25 * goal
    rep = QuadratureReport(value, err, total)
    raise ToleranceNotMet(f"contour quadrature error {err:.2e} above tolerance {goal:.2e}", rep)


def _ray(f, path, share, running, max_chunks):
    d = path.ray_direction
    p0 = path.ray_start
    L = float(path.ray_scale)
    thr = path.damping_threshold
    at_branch = abs(p0 - path.branch_point) == 0.0
    peak = max(0.0, float(path.ray_peak))
    # half the error budget on each side of the peak
    vals, errs, evals = [], 0.0, 0

    def chunk(r0, r1, sqrt_start=False):
        nonlocal errs, evals
        v, e, n = _piece(f, p0 + d * r0, p0 + d * r1, share / 2 ** 6, sqrt_start)
        vals.append(v)
        errs += e
        evals += n
        return v

    def scale_now():
        return max(abs(running), abs(complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))))

    # backwards from the peak towards r = 0
    r = peak
    count = 0
    while r > 0.0:
        r0 = max(0.0, r - L)
        v = chunk(r0, r, sqrt_start=(r0 == 0.0 and at_branch))
        edge = abs(complex(f(np.array([p0 + d * r0]))[0])) * L
        count += 1
        r = r0
        if max(abs(v), edge) < thr * scale_now() and count > 1:
            break
        if count > max_chunks:
            raise NonConvergenceError("ray marching did not terminate")
    # forwards from the peak
    r = peak
    count = 0
    while True:
        v = chunk(r, r + L, sqrt_start=(r == 0.0 and at_branch))
        r += L
        edge = abs(complex(f(np.array([p0 + d * r]))[0])) * L
        count += 1
        if max(abs(v), edge) < thr * scale_now() and count > 1:
            break
        if count > max_chunks:
            raise NonConvergenceError("ray marching did not terminate")
    total = complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))
    return total, errs, evals


def chirp_phase(p, x, tau):
    """``exp(1j * (x p + tau p**2 / 2))`` for complex ``p``, evaluated stably.

    Far from the origin the phase is rewritten about its stationary point
    ``-x / tau`` so that large cancelling terms are never formed.
    """
    p = np.asarray(p, dtype=np.complex128)
    if tau == 0.0:
        return np.exp(1j * x * p)
    ps = -x / tau
    direct = np.exp(1j * (x + 0.5 * tau * p) * p)
    q = p - ps
    shifted = np.exp(0.5j * tau * q * q) * np.exp(0.5j * x * ps)
    return np.where(np.abs(p) <= np.abs(q), direct, shifted)


# ---------------------------------------------------------------------------
# the eigenstate contour

def build_toa_contour(x, T, m=1.0, *, alpha=1, p_start=0.0):
    """Deformed path for ``int_{p_start}^inf p**0.5 exp(i x p + i p**2 T / 2m) dp``.

    The path climbs (or descends) vertically from ``p_start`` to the
    steepest-descent line ``Im p = Re p + m x / T`` and follows it along
    ``exp(i pi / 4)``.  For ``x < 0`` it passes the saddle ``p = -m x / T``.

    ``alpha = -1`` returns the mirror image used for the negative-momentum
    integral ``int_{-inf}^{-p_start} (-p)**0.5 exp(...) dp``; its branch cut
    lies on the positive real axis.
    """
    T = float(T)
    if T <= 0.0:
        if T == 0.0:
            raise ValueError("contour undefined for T = 0")
        raise ValueError("build_toa_contour expects T > 0; use the conjugation symmetry for T < 0")
    if m <= 0.0:
        raise ValueError("mass must be positive")
    if alpha not in (1, -1):
        raise ValueError("alpha must be +1 or -1")
    xe = x if alpha == 1 else -x
    c = m * xe / T
    p_start = float(p_start)
    corner = complex(p_start, p_start + c)
    # ray parameter: p = corner + exp(i pi/4) * r, saddle at p_R = -c
    peak = max(0.0, math.sqrt(2.0) * (-c - p_start))
    seg = ((complex(p_start), corner),) if corner != p_start else ()
    direction = complex(math.sqrt(0.5), math.sqrt(0.5))
    scale = math.sqrt(2.0 * m / T)
    if alpha == -1:
        seg = tuple((-a, -b) for a, b in seg)
        direction = -direction
        return ContourPath(seg, direction, scale, peak, branch_point=0j, cut_direction=1.0 + 0j,
                           orientation=-1, meta=dict(x=x, T=T, m=m, alpha=-1))
    return ContourPath(seg, direction, scale, peak, meta=dict(x=x, T=T, m=m, alpha=1))


# ---------------------------------------------------------------------------
# real-axis composite rules

def _gl_nodes(edges, sqrt_first):
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * _GL_X
    w = np.broadcast_to(half[:, None] * _GL_W, x.shape).copy()
    if sqrt_first:
        # first panel [e0, e1] mapped through p = e0 + (e1 - e0) v**2, v in [0, 1]
        e0, e1 = edges[0], edges[1]
        v = 0.5 * (_GL_X + 1.0)
        x[0] = e0 + (e1 - e0) * v * v
        w[0] = (e1 - e0) * 2.0 * v * 0.5 * _GL_W
    return x.ravel(), w.ravel()


def composite_nodes(a, b, panels, *, sqrt_start=False, breakpoints=()):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``.

    ``breakpoints`` inside ``(a, b)`` become panel edges; each sub-interval
    receives panels in proportion to its length.
    """
    cuts = [a] + sorted(c for c in breakpoints if a < c < b) + [b]
    xs, ws = [], []
    total = b - a
    for i, (lo, hi) in enumerate(zip(cuts[:-1], cuts[1:])):
        n = max(1, int(math.ceil(panels * (hi - lo) / total)))
        x, w = _gl_nodes(np.linspace(lo, hi, n + 1), sqrt_start and i == 0)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _refine(compute, panels, tol, rtol, max_panels):
    prev = compute(panels)
    evals = panels * _GL_ORDER
    while True:
        panels *= 2
        if panels > max_panels:
            break
        cur = compute(panels)
        evals += panels * _GL_ORDER
        diff = float(np.max(np.abs(np.asarray(cur) - np.asarray(prev))))
        scale = float(np.max(np.abs(cur)))
        if diff <= max(tol, rtol * scale):
            return cur, diff, evals, panels
        prev = cur
    raise NonConvergenceError(f"panel refinement stalled at {panels // 2} panels (change {diff:.2e})")


def integrate_real_axis(f, p_max, tol=1e-10, *, slow=False, rtol=0.0, tail=None, panels=8,
                        max_panels=2 ** 20):
    """Reference quadrature of ``int_0^inf f(p) dp`` on the undeformed real axis.

    Composite Gauss-Legendre on ``[0, p_max]`` (square-root substitution on
    the first panel), doubling the panel count until two successive estimates
    agree.  ``tail``, if given, is the caller's analytic value of
    ``int_{p_max}^inf f``.  This is deliberately slow and only used as an
    oracle; pass ``slow=True`` to acknowledge that.
    """
    if not slow:
        raise OracleQuarantineError("integrate_real_axis is the slow reference path; pass slow=True")
    return _integrate_composite(f, 0.0, float(p_max), tol, rtol, tail, panels, max_panels)


def _integrate_composite(f, a, b, tol, rtol, tail, panels, max_panels):
    def compute(n):
        x, w = composite_nodes(a, b, n, sqrt_start=(a == 0.0))
        v = np.asarray(f(x)) * w
        return complex(math.fsum(v.real), math.fsum(v.imag))

    value, err, evals, _ = _refine(compute, panels, tol, rtol, max_panels)
    if tail is not None:
        value += complex(tail)
    return QuadratureReport(complex(value), float(err), int(evals))


def integrate_interval(f, a, b, tol=1e-12, *, rtol=0.0, sqrt_start=False, breakpoints=(), panels=8,
                       max_panels=2 ** 18):
    """``int_a^b f(p) dp`` by composite Gauss-Legendre with panel doubling.

    ``sqrt_start`` grades the first panel for an integrable square-root
    singularity at ``a``; ``breakpoints`` are forced panel edges.
    """
    def compute(n):
        x, w = composite_nodes(a, b, n, sqrt_start=sqrt_start, breakpoints=breakpoints)
        v = np.asarray(f(x)) * w
        return complex(math.fsum(v.real), math.fsum(v.imag))

    value, err, evals, _ = _refine(compute, panels, tol, rtol, max_panels)
    return QuadratureReport(complex(value), float(err), int(evals))


def quartic_cutoff(c, tol):
    """Momentum beyond which ``exp(-c p**4)`` is below ``tol / 100``."""
    if c <= 0:
        raise ValueError("c must be positive")
    return (math.log(100.0 / min(tol, 1e-3)) / c) ** 0.25


def integrate_damped_quartic(f, c, tol=1e-10, *, rtol=0.0, panels=8, max_panels=2 ** 18):
    """``int_0^inf f(p) dp`` for integrands that contain ``exp(-c p**4)``."""
    p_max = quartic_cutoff(c, tol)
    return _integrate_composite(f, 0.0, p_max, tol, rtol, None, panels, max_panels)


def damped_quartic_transform(f, c, a, b, tol=1e-12):
    """Vector form of :func:`integrate_damped_quartic` with an extra ``exp(i (a p + b p**2))``.

    Returns ``(values, error_estimate)``.
    """
    p_max = quartic_cutoff(c, tol)
    return quadratic_phase_transform(f, a, b, 0.0, p_max, tol=tol)


def oscillatory_tail(P, x, tau, nu=0.5, nterms=10):
    """Asymptotic value of ``int_P^inf p**nu exp(i (x p + tau p**2 / 2)) dp``.

    Repeated integration by parts; requires ``x + tau P`` well away from 0.
    Terms are kept while they decrease.
    """
    # g_k is a sum of c * p**e * (x + tau p)**(-l); start with p**nu
    terms = {(nu, 0): 1.0 + 0j}
    phase = np.exp(1j * (x * P + 0.5 * tau * P * P))
    total = 0j
    last = math.inf
    for _ in range(nterms):
        # boundary contribution i g_k(P) exp(i phi(P)) / phi'(P)
        lin = x + tau * P
        gk = sum(c * P ** e * lin ** (-l) for (e, l), c in terms.items())
        contrib = 1j * gk * phase / lin
        if abs(contrib) > last:
            break
        total += contrib
        last = abs(contrib)
        # g_{k+1} = i d/dp [ g_k / phi' ]
        new = {}
        for (e, l), c in terms.items():
            l1 = l + 1
            if e != 0:
                new[(e - 1, l1)] = new.get((e - 1, l1), 0) + 1j * c * e
            new[(e, l1 + 1)] = new.get((e, l1 + 1), 0) - 1j * c * l1 * tau
        terms = new
    return complex(total)


def quadratic_phase_transform(amp, a, b, p_lo, p_hi, *, tol=1e-12, breakpoints=(), sqrt_start=None,
                              extra_phase_rate=0.0, max_panels=2 ** 17):
    """Evaluate ``F_k = int amp(p) exp(i (a_k p + b_k p**2)) dp`` for many ``k``.

    Targets are grouped into bands whose largest phase rate
    ``|a_k| + 2 |b_k| p`` differs by at most a factor two; each band shares
    one node set.  The panel count of a band starts from its phase swing over
    ``[p_lo, p_hi]`` and is doubled until the band changes by less than
    ``tol * max|F|`` (or below the rounding level of ``int |amp|``).
    ``extra_phase_rate`` accounts for oscillation already
    inside ``amp``.

    Returns ``(values, error_estimate)``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.broadcast_to(np.asarray(b, dtype=float), a.shape)
    if sqrt_start is None:
        sqrt_start = p_lo == 0.0
    out = np.empty(a.shape, dtype=np.complex128)
    if a.size == 0:
        return out, 0.0
    pm = max(abs(p_lo), abs(p_hi))
    rate = np.abs(a) + 2.0 * np.abs(b) * pm + extra_phase_rate
    floor = 8.0 * math.pi / (p_hi - p_lo)
    band = np.floor(np.log2(np.maximum(rate, floor) / floor)).astype(int)
    cache = {}
    err = 0.0
    # cancellation limits any estimate to a few ulps of int |amp|
    x0, w0 = composite_nodes(p_lo, p_hi, 64, sqrt_start=sqrt_start, breakpoints=breakpoints)
    noise = 64 * np.finfo(float).eps * float(np.sum(np.abs(amp(x0)) * w0))
    for k in np.unique(band):
        sel = band == k
        top = float(rate[sel].max())
        panels = min(max(8, int(math.ceil(top * (p_hi - p_lo) / math.pi))), max_panels // 2)
        aa, bb = a[sel], b[sel]

        def compute(n, aa=aa, bb=bb):
            if n not in cache:
                x, w = composite_nodes(p_lo, p_hi, n, sqrt_start=sqrt_start, breakpoints=breakpoints)
                cache[n] = (x, np.asarray(amp(x), dtype=np.complex128) * w)
            x, A = cache[n]
            return kernels.chirp_sum(x, A, aa, bb)

        vals, e, _, _ = _refine(compute, panels, noise, tol, max_panels)
        out[sel] = vals
        err = max(err, e)
    return out, err

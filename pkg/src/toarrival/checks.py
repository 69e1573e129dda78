"""Invariant suites behind ``toarrival check``.

Each suite returns a list of :class:`CheckResult`; a suite passes when all
of its results do.
"""
import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import arrival as ar
from . import eigenstates as es
from . import quasi as q
from .errors import DomainError

SUITES = ("symmetry", "covariance", "variance", "asymptotics", "sharpness", "grt")

# <x|T+> at m = 1 from mpmath (30 digits) on the steepest-descent ray
FROZEN_EIGEN = (
    (0.3, 1.0, complex(0.0246216583056849733, 0.129116579559479495)),
    (0.0, 0.01, complex(1.98465987220734361, 4.79139278018062258)),
    (2.0, 0.5, complex(-0.0259409406178494812, 0.0391440525689463024)),
)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{tag}  {self.suite}.{self.name}: {self.value:.3e} (limit {self.limit:.1e}){extra}"


def _le(suite, name, value, limit, detail=""):
    value = float(value)
    return CheckResult(suite, name, bool(value <= limit), value, float(limit), detail)


def _maxrel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.abs(b)))


# ---------------------------------------------------------------------------

def suite_symmetry(tol=None):
    S = "symmetry"
    out = []
    xs = np.array([-1.5, -0.4, 0.0, 0.1, 0.3])
    worst = 0.0
    for T in (0.01, 0.7):
        spec = es.EigenstateSpec(T)
        worst = max(worst, _maxrel(es.ab_coordinate_amp(xs, spec, "exact"), es.ab_coordinate_amp(xs, spec, "contour")))
    out.append(_le(S, "eigen_exact_vs_contour", worst, 1e-9))
    worst = max(abs(es.ab_coordinate_amp(x, es.EigenstateSpec(T)) - ref) / abs(ref) for x, T, ref in FROZEN_EIGEN)
    out.append(_le(S, "eigen_frozen_values", worst, 1e-12))
    spec = es.EigenstateSpec(0.05, -1)
    out.append(_le(S, "eigen_minus_mirror", _maxrel(es.ab_coordinate_amp(xs, spec, "exact"),
                                                     es.ab_coordinate_amp(xs, spec, "contour")), 1e-9))

    g = ar.gaussian()
    T = np.linspace(0.2, 1.0, 161)
    a = ar.toa_distribution(T, g, norm_tol=1.0)
    b = ar.toa_distribution(-T[::-1], g.conjugate(), norm_tol=1.0)
    out.append(_le(S, "povm_conjugation", np.max(np.abs(a.values - b.values[::-1])), 1e-10))
    out.append(_le(S, "povm_components", np.max(np.abs(a.values - (a.plus + a.minus))), 0.0))
    mono = ar.monomial(2)
    T = np.linspace(0.05, 6.0, 60)
    a = ar.toa_distribution(T, mono, norm_tol=1.0).values
    b = ar.toa_distribution(-T[::-1], mono, norm_tol=1.0).values[::-1]
    out.append(_le(S, "povm_real_state_even", np.max(np.abs(a - b)), 1e-10))

    x = np.linspace(-1.5, 1.5, 13)
    Tq, t = 0.02, 0.01
    lhs = q.quasi_coordinate_amp(-x, q.QuasiSpec(Tq, 0.002, t=2 * Tq - t))
    rhs = np.conjugate(q.quasi_coordinate_amp(x, q.QuasiSpec(Tq, 0.002, t=t)))
    out.append(_le(S, "quasi_inversion", np.max(np.abs(lhs - rhs)), 1e-10))
    return out


def suite_covariance(tol=None):
    S = "covariance"
    out = []
    g = ar.gaussian()
    T = np.linspace(0.2, 1.0, 161)
    base = ar.toa_distribution(T, g, norm_tol=1.0).values
    for t in (0.1, 1.0, 10.0):
        moved = ar.toa_distribution(T - t, g.evolve(t), norm_tol=1.0).values
        out.append(_le(S, f"povm_shift_t={t:g}", np.max(np.abs(base - moved)), 1e-8))
    x = np.linspace(-1, 1, 9)
    a = es.ab_coordinate_amp(x, es.EigenstateSpec(0.0625, 1, 1.0, 0.03125), "contour")
    b = es.ab_coordinate_amp(x, es.EigenstateSpec(0.03125), "contour")
    out.append(_le(S, "eigen_T_minus_t", np.max(np.abs(a - b)), 0.0))
    a = q.quasi_coordinate_amp(x, q.QuasiSpec(0.0625, 0.002, t=0.03125))
    b = q.quasi_coordinate_amp(x, q.QuasiSpec(0.03125, 0.002))
    out.append(_le(S, "quasi_T_minus_t", np.max(np.abs(a - b)), 0.0))
    return out


def suite_variance(tol=None):
    S = "variance"
    tol = 1e-6 if tol is None else tol
    out = []
    mono = ar.monomial(2)
    m1 = ar.arrival_moment(mono, 1, tol)
    out.append(_le(S, "first_moment_zero", abs(m1), 1e-6))
    m2 = ar.arrival_moment(mono, 2, tol)
    out.append(_le(S, "second_moment_2", abs(m2 - 2.0), 2e-3, f"int T^2 Pi = {m2:.7f}"))
    nt = ar.apply_T_operator(mono).norm_squared()
    out.append(_le(S, "operator_norm_2", abs(nt - 2.0), 1e-10))
    out.append(_le(S, "variance_form", abs(m2 - nt), 1e-3 * m2))
    moved = mono.shift(-0.5)
    first = ar.arrival_moment(moved, 1, tol)
    expect = ar.t_operator_expectation(moved)
    out.append(_le(S, "first_moment_identity", abs(first - expect), 1e-4, f"<T> = {expect:.6f}"))
    try:
        ar.apply_T_operator(ar.monomial(1))
        raised = 0.0
    except DomainError:
        raised = 1.0
    out.append(CheckResult(S, "domain_violation_raises", raised == 1.0, raised, 1.0))
    dT = 0.004
    res = q.quasi_eigen_residual(q.QuasiSpec(0.04, dT))
    out.append(_le(S, "quasi_residual", abs(res - dT / math.sqrt(2)), 1e-8))
    return out


def suite_asymptotics(tol=None):
    S = "asymptotics"
    out = []
    for k, window in ((2, (20.0, 200.0)), (1, (20.0, 200.0))):
        state = ar.monomial(k)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fit = ar.fit_tail(state, window)
        law = fit.law
        out.append(_le(S, f"tail_slope_k={k}", abs(fit.slope / -law.exponent - 1), 0.02,
                       f"slope {fit.slope:.4f} vs {-law.exponent:g}"))
        out.append(_le(S, f"tail_prefactor_k={k}", abs(fit.prefactor / law.prefactor - 1), 0.05))
    worst = 0.0
    for T in (0.01, 0.005, 0.001):
        x = np.linspace(-2, 0.2, 200)
        z = np.abs(x) * math.sqrt(1 / T)
        sel = x[z >= es.ASYMPTOTIC_MIN_Z]
        spec = es.EigenstateSpec(T)
        worst = max(worst, _maxrel(es.ab_coordinate_amp(sel, spec, "asymptotic"), es.ab_coordinate_amp(sel, spec)))
    out.append(_le(S, "eigen_asymptotic_forms", worst, 0.01))
    spec = q.QuasiSpec(0.04, 0.002)
    x = np.array([-400.0, 400.0])
    val = np.abs(q.quasi_coordinate_amp(x, spec)) ** 2 * np.abs(x) ** 3
    out.append(_le(S, "quasi_x^-3_tail", _maxrel(val, q.quasi_tail_coefficient(spec)), 0.02))
    return out


def suite_sharpness(tol=None):
    S = "sharpness"
    out = []
    widths = (0.008, 0.004, 0.002)
    dens = [abs(q.quasi_coordinate_amp(0.0, q.QuasiSpec(0.0, w))) ** 2 for w in widths]
    fl = [q.quasi_flux(0.0, q.QuasiSpec(0.0, w)) for w in widths]
    out.append(_le(S, "density_scales_dT^-1/2",
                   max(abs(dens[i + 1] / dens[i] / math.sqrt(2) - 1) for i in range(2)), 5e-3))
    out.append(_le(S, "flux_scales_dT^-1", max(abs(fl[i + 1] / fl[i] / 2 - 1) for i in range(2)), 5e-3))
    spec = q.QuasiSpec(0.04, 0.002, t=0.04)
    out.append(_le(S, "peak_density_closed_form",
                   abs(abs(q.quasi_coordinate_amp(0.0, spec)) ** 2 / q.quasi_peak_density(spec) - 1), 1e-6))
    out.append(_le(S, "peak_flux_closed_form", abs(q.quasi_flux(0.0, spec) / q.quasi_peak_flux(spec) - 1), 1e-6))
    w = [q.half_width(q.QuasiSpec(0.04, 0.002, t=t)) for t in (0.0, 0.02, 0.04)]
    out.append(CheckResult(S, "narrowest_at_arrival", w[2] < w[1] < w[0], w[2], w[1]))
    out.append(_le(S, "half_norm_right", abs(q.half_norm_right(spec) - 0.5), 1e-4))
    return out


def suite_grt(tol=None):
    S = "grt"
    out = []
    T = 0.01
    worst = 0.0
    for x, t, eps in itertools.product(np.linspace(-2, 2, 5), np.linspace(-0.02, 0.02, 5), np.geomspace(1e-3, 1, 5)):
        spec = es.GrtSpec(T, eps)
        bound = 2 ** 1.5 * eps ** 1.5 / (2 * math.pi)
        worst = max(worst, abs(es.grt_inner_part(x, t, spec)) / bound)
    out.append(CheckResult(S, "inner_bound_125_samples", worst < 1.0, worst, 1.0, "max |I1| / bound"))
    x = -0.3
    ab = es.ab_coordinate_amp(x, es.EigenstateSpec(T))
    dev = abs(es.grt_coordinate_amp(x, 0.0, es.GrtSpec(T, 1e-3)) - ab) / abs(ab)
    out.append(_le(S, "limit_eps_1e-3", dev, 1e-2))
    return out


_FUNCS = {
    "symmetry": suite_symmetry,
    "covariance": suite_covariance,
    "variance": suite_variance,
    "asymptotics": suite_asymptotics,
    "sharpness": suite_sharpness,
    "grt": suite_grt,
}


def run_suite(name, tol=None):
    if name not in _FUNCS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return _FUNCS[name](tol)

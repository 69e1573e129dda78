import importlib
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toarrival import arrival as ar
from toarrival.errors import DomainError, GridTooNarrowWarning
from toarrival.units import H

# <T+|psi> for the default Gaussian (p0=10, sigma=1, x0=-5), mpmath.quad at 30 digits
MPMATH_GAUSS = [
    (0.5, complex(2.05380221215880347630359365234, -1.18731341036527632599576166597)),
    (0.3, complex(0.0715191245025158385113897746453, -0.134105585319851965554718674091)),
]
MPMATH_GAUSS_MINUS_T05 = complex(6.45856753410453863131152124131e-14, -1.484413107255395891129376322e-13)

N2 = math.sqrt(2 / math.gamma(2.5))


def mono_pi(T, k=2):
    # monomial preset: <T+|psi> = N Gamma(k/2+3/4) / (2 (mh)^0.5 ((1 + iT)/2)^(k/2+3/4))
    N = math.sqrt(2 / math.gamma(k + 0.5))
    s = k / 2 + 0.75
    return N * N * math.gamma(s) ** 2 / (4 * H) * ((1 + np.asarray(T) ** 2) / 4) ** -s


@pytest.fixture(scope="module")
def gauss():
    return ar.gaussian()


@pytest.fixture(scope="module")
def gauss_grid(gauss):
    return ar.suggest_time_grid(gauss)


# -- states ----------------------------------------------------------------

@pytest.mark.parametrize("state", [ar.gaussian(), ar.gaussian(3, 0.4, 2.0, 2.0), ar.monomial(2), ar.monomial(0.5),
                                   ar.backflow()])
def test_presets_are_normalized(state):
    assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_unnormalized_state_rejected():
    with pytest.raises(ValueError):
        ar.custom(lambda p: np.exp(-p * p), (-8, 8))
    s = ar.custom(lambda p: np.exp(-p * p) + 0j, (-8, 8), normalize=True)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


def test_descriptor():
    s = ar.from_descriptor("gaussian:p0=4,sigma=0.5,x0=-1", mass=2.0)
    assert s.mass == 2.0 and s.x0 == -1.0
    assert ar.from_descriptor("monomial:k=2").law[1][1] == 2.0
    for bad in ("nope", "gaussian:p0", "gaussian:p0=x", "gaussian:q=1"):
        with pytest.raises(ValueError):
            ar.from_descriptor(bad)


@pytest.mark.parametrize("k,flag", [(2, True), (1.6, True), (1.5, False), (1, False), (0, False)])
def test_domain_flag_monomial(k, flag):
    assert ar.monomial(k).domain_flag is flag


def test_domain_flag_by_limit_sampling():
    # no law supplied: exponent estimated from samples near p = 0
    f = lambda p: N2 * np.abs(p) ** 2 * np.exp(-p * p / 2) + 0j
    s = ar.custom(f, (0, 12))
    c, k = s.small_p_law(1)
    assert k == 2 and c == pytest.approx(N2, rel=1e-8)
    assert s.domain_flag
    assert not ar.gaussian().domain_flag
    # support away from p = 0 is always inside the domain
    assert ar.custom(lambda p: np.where((p > 1) & (p < 2), 1.0 + 0j, 0j), (1, 2)).domain_flag


def test_transformations_compose():
    g = ar.gaussian(3.0, 0.7, -2.0)
    p = np.linspace(-5, 12, 31)
    assert np.allclose(g.conjugate()(p), np.conjugate(g(p)), rtol=0, atol=1e-15)
    assert np.allclose(g.reflect()(p), np.conjugate(g(-p)), rtol=0, atol=1e-15)
    assert np.allclose(g.reflect().reflect()(p), g(p), rtol=0, atol=1e-15)
    ev = g.evolve(0.3)
    assert np.allclose(ev(p), np.exp(-1j * p * p * 0.3 / 2) * g(p), rtol=1e-14, atol=1e-15)
    assert np.allclose(g.shift(1.5)(p), np.exp(-1.5j * p) * g(p), rtol=1e-14, atol=1e-15)


def test_sampled_state_matches_analytic():
    g = ar.gaussian(6.0, 1.0, 0.0)
    p = np.linspace(6 - 13, 6 + 13, 2001)
    s = ar.sampled(p, g(p))
    q = np.linspace(-5, 17, 47)
    assert np.allclose(s(q), g(q), atol=1e-8)
    with pytest.raises(ValueError):
        ar.sampled(p, 2 * g(p))
    with pytest.raises(ValueError):
        ar.sampled(p[::-1], g(p))


def test_position_moments():
    g = ar.gaussian(10.0, 1.0, -5.0)
    xm, x2 = g.position_moments()
    assert xm == pytest.approx(-5.0, abs=1e-10)
    assert x2 - xm * xm == pytest.approx(0.25, rel=1e-8)
    xm, _ = g.evolve(0.4).position_moments()
    assert xm == pytest.approx(-1.0, abs=1e-9)


# -- amplitudes --------------------------------------------------------------

@pytest.mark.parametrize("T,ref", MPMATH_GAUSS)
def test_gaussian_amplitude_mpmath(gauss, T, ref):
    assert abs(ar.toa_amplitude(T, 1, gauss) - ref) < 1e-12 * abs(ref)


def test_negative_momentum_component_mpmath(gauss):
    assert abs(ar.toa_amplitude(0.5, -1, gauss) - MPMATH_GAUSS_MINUS_T05) < 1e-15


def test_disjoint_support_gives_zero():
    m = ar.monomial(2)
    assert ar.toa_amplitude(0.3, -1, m) == 0
    assert np.all(ar.toa_amplitude(np.array([0.1, 5.0]), "-", m) == 0)
    with pytest.raises(ValueError):
        ar.toa_amplitude(0.1, 0, m)


@pytest.mark.filterwarnings("ignore::toarrival.errors.GridTooNarrowWarning")
def test_monomial_closed_form():
    # pointwise check; the sparse grid says nothing about the norm
    T = np.array([-40.0, -3.0, -0.5, 0.0, 0.4, 2.0, 10.0, 50.0, 300.0])
    got = ar.toa_distribution(T, ar.monomial(2), norm_tol=1.0).values
    assert np.allclose(got, mono_pi(T), rtol=1e-9, atol=0)


@settings(max_examples=20, deadline=None)
@given(p0=st.floats(-6, 6), sigma=st.floats(0.3, 2.0), x0=st.floats(-4, 4), T=st.floats(-3, 3))
def test_conjugation_symmetry(p0, sigma, x0, T):
    s = ar.gaussian(p0, sigma, x0)
    for a in (1, -1):
        assert abs(ar.toa_amplitude(T, a, s)) == pytest.approx(abs(ar.toa_amplitude(-T, a, s.conjugate())),
                                                               rel=1e-12, abs=1e-15)


# -- distribution ------------------------------------------------------------

def test_components_sum(gauss, gauss_grid):
    r = ar.toa_distribution(gauss_grid, gauss)
    assert np.array_equal(r.values, r.plus + r.minus)
    assert np.all(r.values >= 0)
    assert r.captured_norm <= 1 + 1e-6


def test_captured_norm_grows_to_one():
    m = ar.monomial(2)
    norms = []
    for W in (2.0, 8.0, 32.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GridTooNarrowWarning)
            norms.append(ar.toa_distribution(np.linspace(-W, W, int(200 * W) + 1), m).captured_norm)
    assert norms[0] < norms[1] < norms[2] < 1
    assert 1 - norms[2] < 2e-4


def test_grid_too_narrow_warns():
    with pytest.warns(GridTooNarrowWarning) as rec:
        ar.toa_distribution(np.linspace(-2, 2, 401), ar.monomial(2))
    miss = rec[0].message.missing_norm
    est = ar.missing_norm_estimate(ar.monomial(2), -2, 2)
    assert 0.01 < miss and est == pytest.approx(miss, rel=0.3)


def test_suggested_grid_holds_the_norm(gauss, gauss_grid):
    r = ar.toa_distribution(gauss_grid, gauss)
    assert r.captured_norm >= 0.9999
    assert np.allclose(np.diff(gauss_grid), gauss_grid[1] - gauss_grid[0])
    m = ar.monomial(2)
    grid = ar.suggest_time_grid(m)
    assert ar.toa_distribution(grid, m).captured_norm >= 0.9999


def test_classical_peak(gauss, gauss_grid):
    r = ar.toa_distribution(gauss_grid, gauss)
    assert gauss_grid[np.argmax(r.values)] == pytest.approx(0.5, rel=0.1)


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_covariance(gauss, t):
    T = np.linspace(0.2, 1.0, 81)
    a = ar.toa_distribution(T, gauss, norm_tol=1).values
    b = ar.toa_distribution(T - t, gauss.evolve(t), norm_tol=1).values
    assert np.max(np.abs(a - b)) <= 1e-8


def test_covariance_with_sampled_evolution():
    # evolve by multiplying samples, not by the stored phase
    g = ar.gaussian(4.0, 0.5, -2.0)
    t = 0.1
    p = np.linspace(4 - 6.5, 4 + 6.5, 6001)
    s = ar.sampled(p, np.exp(-0.5j * p * p * t) * g(p))
    T = np.linspace(0.2, 0.8, 13)
    a = ar.toa_distribution(T, g, norm_tol=1).values
    b = ar.toa_distribution(T - t, s, norm_tol=1).values
    assert np.max(np.abs(a - b)) <= 1e-7 * np.max(a)


def test_symmetry_pointwise(gauss):
    T = np.linspace(0.25, 0.95, 57)
    a = ar.toa_distribution(T, gauss, norm_tol=1).values
    b = ar.toa_distribution(-T[::-1], gauss.conjugate(), norm_tol=1).values[::-1]
    assert np.max(np.abs(a - b)) <= 1e-10


# -- interval probabilities ---------------------------------------------------

def test_full_line_probability(gauss):
    assert ar.interval_probability(-math.inf, math.inf, gauss) == pytest.approx(1.0, abs=1e-6)
    assert ar.interval_probability(-math.inf, math.inf, ar.monomial(2)) == pytest.approx(1.0, abs=1e-6)


def test_additivity(gauss):
    a = ar.interval_probability(0.3, 0.5, gauss)
    b = ar.interval_probability(0.5, 0.8, gauss)
    c = ar.interval_probability(0.3, 0.8, gauss)
    assert a + b == pytest.approx(c, abs=1e-9)
    assert 0 <= a <= 1 and 0 <= b <= 1


def test_real_state_is_time_symmetric():
    m = ar.monomial(2)
    assert ar.interval_probability(-1.3, 0, m) == pytest.approx(ar.interval_probability(0, 1.3, m), abs=1e-10)


def test_interval_needs_order(gauss):
    with pytest.raises(ValueError):
        ar.interval_probability(1.0, 1.0, gauss)


def test_interval_matches_closed_form():
    from scipy import integrate
    ref = integrate.quad(mono_pi, 0.5, 3.0, epsabs=1e-14)[0]
    assert ar.interval_probability(0.5, 3.0, ar.monomial(2)) == pytest.approx(ref, abs=1e-9)


# -- time-of-arrival operator -------------------------------------------------

def test_operator_on_monomial():
    m = ar.monomial(2)
    img = ar.apply_T_operator(m)
    p = np.linspace(0.01, 8, 50)
    expect = -1j * N2 * (1.5 - p * p) * np.exp(-p * p / 2)
    assert np.allclose(img(p), expect, rtol=1e-13, atol=1e-15)
    assert img.norm_squared() == pytest.approx(2.0, abs=1e-12)
    assert abs(img.overlap()) < 1e-13


def test_operator_with_numerical_derivative():
    f = lambda p: N2 * np.abs(p) ** 2 * np.exp(-p * p / 2) + 0j
    s = ar.custom(f, (0, 12))
    p = np.linspace(0.05, 6, 20)
    expect = -1j * N2 * (1.5 - p * p) * np.exp(-p * p / 2)
    assert np.allclose(ar.apply_T_operator(s)(p), expect, atol=1e-9)


def test_operator_domain_violation():
    with pytest.raises(DomainError):
        ar.apply_T_operator(ar.monomial(1))
    with pytest.raises(DomainError):
        ar.variance_form(ar.gaussian())


def test_moments_of_monomial():
    m = ar.monomial(2)
    assert abs(ar.arrival_moment(m, 1)) < 1e-6
    assert ar.arrival_moment(m, 2) == pytest.approx(2.0, abs=2e-5)
    assert abs(ar.variance_form(m)) < 1e-3 * 2.0
    assert ar.arrival_moment(ar.monomial(1), 2) == math.inf


@pytest.mark.parametrize("dx,t", [(-0.5, 0.0), (0.0, 0.7), (-1.0, -0.3)])
def test_first_moment_identity(dx, t):
    s = ar.monomial(2).shift(dx).evolve(t)
    assert ar.arrival_moment(s, 1) == pytest.approx(ar.t_operator_expectation(s), abs=1e-4)


def test_first_moment_follows_evolution():
    s = ar.monomial(2).shift(-0.5)
    assert ar.t_operator_expectation(s.evolve(0.25)) == pytest.approx(ar.t_operator_expectation(s) - 0.25, abs=1e-10)


# -- tails ---------------------------------------------------------------------

def test_tail_law_prefactor():
    law = ar.tail_law(ar.monomial(2))
    assert law.exponent == 3.5
    assert law.prefactor == pytest.approx(0.572070, rel=1e-5)
    # exact closed form approaches it
    assert mono_pi(1e4) * 1e4 ** 3.5 == pytest.approx(law.prefactor, rel=1e-7)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_tail_fit(k):
    fit = ar.fit_tail(ar.monomial(k), (20.0, 200.0))
    assert fit.slope == pytest.approx(-(k + 1.5), rel=0.01)
    assert fit.u_fit == pytest.approx(k / 2, abs=0.02)
    assert fit.prefactor == pytest.approx(fit.law.prefactor, rel=0.05)
    u, A = ar.tail_exponent(ar.monomial(k), (20.0, 200.0))
    assert (u, A) == (fit.u_fit, fit.prefactor)


def test_tail_fit_warns_in_the_bulk():
    with pytest.warns(RuntimeWarning):
        ar.fit_tail(ar.monomial(2), (0.2, 3.0))
    with pytest.raises(ValueError):
        ar.fit_tail(ar.monomial(2), (-1.0, 3.0))


def test_tail_law_from_both_sides():
    # gaussian straddling p = 0: both sides decay as T^-1.5 with the same coefficient
    g = ar.gaussian(0.0, 1.0, 0.0)
    law = ar.tail_law(g)
    assert law.exponent == 1.5
    fit = ar.fit_tail(g, (200.0, 2000.0))
    assert fit.prefactor == pytest.approx(law.prefactor, rel=0.02)
    down = ar.fit_tail(g, (200.0, 2000.0), side=-1)
    assert down.prefactor == pytest.approx(law.prefactor, rel=0.02)


# -- flux and backflow ----------------------------------------------------------

def gaussian_packet(x, t, p0, s, x0, m=1.0):
    A = 1 / (4 * s * s) + 0.5j * t / m
    B = p0 / (2 * s * s) + 1j * (x - x0)
    return (2 * math.pi * s * s) ** -0.25 / math.sqrt(2 * math.pi) * np.sqrt(math.pi / A) * np.exp(
        B * B / (4 * A) - p0 * p0 / (4 * s * s))


def test_wavefunction_closed_form():
    g = ar.gaussian(3.0, 0.8, -2.0, 1.0)
    x = np.linspace(-6, 6, 25)
    for t in (0.0, 0.5, 2.0):
        assert np.allclose(ar.wavefunction(x, t, g), gaussian_packet(x, t, 3.0, 0.8, -2.0), atol=1e-12)


def test_continuity_equation():
    b = ar.backflow()
    x, t, h = 0.1, 0.05, 3e-4
    dens = lambda x, t: np.abs(ar.wavefunction(x, t, b)) ** 2
    d5 = lambda f: (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h)
    dt = d5(lambda e: dens(x, t + e))
    dx = d5(lambda e: ar.flux(x + e, t, b))
    assert dt == pytest.approx(-dx, rel=1e-8)


def test_single_gaussian_has_no_backflow(gauss):
    t = np.linspace(0.0, 1.5, 301)
    assert np.min(ar.flux(0.0, t, gauss)) >= -1e-10
    assert ar.backflow_scan(gauss, 0.0, t) == []


def test_backflow_preset():
    b = ar.backflow()
    t = np.linspace(-0.5, 0.5, 501)
    runs = ar.backflow_scan(b, 0.0, t)
    assert runs
    J = ar.flux(0.0, t, b)
    assert J.min() < -1e-3
    T = np.linspace(-1, 1, 201)
    assert np.all(ar.toa_distribution(T, b, norm_tol=1).values >= 0)


def test_reflected_backflow_at_mirrored_times():
    b = ar.backflow(x0=-0.4)
    t = np.linspace(-0.6, 0.6, 601)
    runs = ar.backflow_scan(b, 0.0, t)
    mirror = ar.backflow_scan(b.reflect(), 0.0, t)
    assert runs and ar.momentum_sign(b.reflect()) == -1
    assert np.allclose(np.array(sorted((-e, -s) for s, e in runs)), np.array(mirror), rtol=0, atol=1e-12)
    assert np.allclose(ar.flux(0.0, -t, b.reflect()), -ar.flux(0.0, t, b), rtol=0, atol=1e-12)


def test_scan_needs_one_signed_state():
    with pytest.raises(ValueError):
        ar.backflow_scan(ar.gaussian(0.0, 1.0, 0.0), 0.0, np.linspace(0, 1, 11))
    with pytest.raises(ValueError):
        ar.backflow_scan(ar.backflow(), 0.0, np.array([0.0, 0.0]))


def test_scan_ties_do_not_open_runs(monkeypatch):
    bf = importlib.import_module("toarrival.arrival.backflow")
    monkeypatch.setattr(bf, "flux", lambda x, t, s: np.array([1.0, 0.0, -1.0, -1.0, 0.0, 2.0]))
    runs = bf.backflow_scan(ar.backflow(), 0.0, np.arange(6.0))
    assert runs == [(2.0, 3.0)]

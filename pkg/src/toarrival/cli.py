"""Command-line interface: figure data as CSV and the invariant suites.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""
import argparse
import io
import math
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__, checks
from . import arrival as ar
from . import eigenstates as es
from . import quasi as q
from .errors import DomainError, GridTooNarrowWarning, ToArrivalError

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2

FIG1A = dict(T=(0.01, 0.005, 0.001), xmin=-2.0, xmax=0.2, n=221)
FIG1B = dict(T=(0.01, 0.005, 0.001), xmin=-0.2, xmax=0.2, n=201)
FIG2 = dict(T=(0.01,), xmin=-2.0, xmax=0.2, n=4401)
FIG3 = dict(T=(0.04,), dT=0.002, t=(0.0, 0.02, 0.04), xmin=-2.0, xmax=0.5, n=2501)
DIST = dict(state="gaussian:p0=10,sigma=1,x0=-5")
# every PROBE_STRIDE-th eigenstate point is recomputed on the contour path
PROBE_STRIDE = 10


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    T: tuple = ()
    dT: float = None
    t: tuple = (0.0,)
    eps: float = None
    mass: float = 1.0
    xmin: float = None
    xmax: float = None
    n: int = None
    Tmin: float = None
    Tmax: float = None
    nT: int = None
    state: str = None
    out: str = None
    tol: float = None
    suite: str = None
    figure: str = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ConfigError("--mass must be positive")
        if self.tol is not None and not (0 < self.tol < 1):
            raise ConfigError("--tol must lie in (0, 1)")
        for lo, hi, n, what in ((self.xmin, self.xmax, self.n, "x"), (self.Tmin, self.Tmax, self.nT, "T")):
            if n is not None and n < 2:
                raise ConfigError(f"{what} grid needs at least 2 points")
            if lo is not None and hi is not None and not lo < hi:
                raise ConfigError(f"{what} grid needs min < max")
        if any(not math.isfinite(v) for v in self.T + tuple(self.t)):
            raise ConfigError("times must be finite")
        if self.dT is not None and not self.dT > 0:
            raise ConfigError("--dT must be positive")
        if self.eps is not None and not self.eps > 0:
            raise ConfigError("--eps must be positive")


def _fmt(v):
    return repr(float(v))


class _Csv:
    def __init__(self, command, params, tol):
        self.command = command
        self.params = params
        self.tol = tol
        self.notes = []
        self.rows = []
        self.columns = None

    def note(self, key, value):
        self.notes.append((key, value))

    def text(self):
        buf = io.StringIO()
        buf.write(f"# toarrival {__version__}\n# command: {self.command}\n")
        buf.write("# parameters: " + " ".join(f"{k}={v}" for k, v in self.params.items()) + "\n")
        buf.write(f"# tolerance: {self.tol}\n")
        for k, v in self.notes:
            buf.write(f"# {k}: {v}\n")
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(_fmt(v) for v in r) + "\n")
        return buf.getvalue()


def _xgrid(cfg, default):
    lo = default["xmin"] if cfg.xmin is None else cfg.xmin
    hi = default["xmax"] if cfg.xmax is None else cfg.xmax
    n = default["n"] if cfg.n is None else cfg.n
    if not lo < hi:
        raise ConfigError("x grid needs min < max")
    return np.linspace(lo, hi, n)


def cmd_eigenstate(cfg):
    default = FIG1B if cfg.figure == "1b" else FIG1A
    Ts = cfg.T or default["T"]
    x = _xgrid(cfg, default)
    t = cfg.t[0]
    csv = _Csv("eigenstate", {"T": list(Ts), "t": t, "mass": cfg.mass, "x": f"[{x[0]},{x[-1]}]x{x.size}"}, cfg.tol)
    csv.columns = ("T", "x", "re", "im", "abs2")
    probe = 0.0
    for T in Ts:
        spec = es.EigenstateSpec(T, 1, cfg.mass, t)
        try:
            spec.require_teff()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        amp = es.ab_coordinate_amp(x, spec)
        xp = x[::PROBE_STRIDE]
        check = es.ab_coordinate_amp(xp, spec, "contour")
        probe = max(probe, float(np.max(np.abs(check - amp[::PROBE_STRIDE]) / np.abs(amp[::PROBE_STRIDE]))))
        csv.rows.extend((T, xx, a.real, a.imag, abs(a) ** 2) for xx, a in zip(x, amp))
    limit = 1e-9 if cfg.tol is None else cfg.tol
    csv.note("achieved_error", f"max relative exact-vs-contour difference {probe:.3e} on every {PROBE_STRIDE}th point")
    if probe > limit:
        raise ToArrivalError(f"exact and contour values differ by {probe:.3e} > {limit:.1e}")
    return csv


def cmd_tminus(cfg):
    Ts = cfg.T or FIG2["T"]
    x = _xgrid(cfg, FIG2)
    t = cfg.t[0]
    csv = _Csv("tminus", {"T": list(Ts), "t": t, "mass": cfg.mass, "x": f"[{x[0]},{x[-1]}]x{x.size}"}, cfg.tol)
    csv.columns = ("T", "x", "re", "im", "abs2")
    probe = 0.0
    for T in Ts:
        for te in (T - t, T + t):
            if abs(te) < es.MIN_ABS_TEFF:
                raise ConfigError(f"T -+ t = {te!r} is too close to zero")
        amp = es.tminus_coordinate_amp(x, T, t, cfg.mass)
        xp = x[::PROBE_STRIDE * 10]
        chk = es.tminus_coordinate_amp(xp, T, t, cfg.mass, "contour")
        ref = amp[::PROBE_STRIDE * 10]
        scale = np.maximum(np.abs(ref), 1e-3 * np.max(np.abs(ref)))
        probe = max(probe, float(np.max(np.abs(chk - ref) / scale)))
        if t == 0:
            amp = amp.real + 0j
        csv.rows.extend((T, xx, a.real, a.imag, abs(a) ** 2) for xx, a in zip(x, amp))
    csv.note("achieved_error", f"max scaled exact-vs-contour difference {probe:.3e}")
    return csv


def cmd_quasi(cfg):
    T = (cfg.T or FIG3["T"])[0]
    dT = FIG3["dT"] if cfg.dT is None else cfg.dT
    ts = cfg.t if cfg.extra.get("t_given") else FIG3["t"]
    x = _xgrid(cfg, FIG3)
    tol = q._TOL if cfg.tol is None else cfg.tol
    csv = _Csv("quasi", {"T": T, "dT": dT, "t": list(ts), "mass": cfg.mass,
                         "x": f"[{x[0]},{x[-1]}]x{x.size}"}, cfg.tol)
    csv.columns = ("t", "x", "re", "im", "abs2")
    for t in ts:
        spec = q.QuasiSpec(T, dT, t, cfg.mass)
        amp = q.quasi_coordinate_amp(x, spec, tol)
        dens = np.abs(amp) ** 2
        grid_norm = float(np.trapezoid(dens, x) if hasattr(np, "trapezoid") else np.trapz(dens, x))
        csv.note(f"series t={t!r}", f"centroid_closed_form={q.quasi_centroid(spec)!r} grid_norm={grid_norm!r} "
                                    f"adaptive_norm={q.quasi_position_norm(spec)!r}")
        csv.rows.extend((t, xx, a.real, a.imag, d) for xx, a, d in zip(x, amp, dens))
    csv.note("achieved_error", f"quadrature tolerance {tol:g} relative per band")
    return csv


def cmd_dist(cfg):
    desc = cfg.state or DIST["state"]
    try:
        state = ar.from_descriptor(desc, cfg.mass)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.extra.get("conjugate"):
        state = state.conjugate()
    if cfg.Tmin is None and cfg.Tmax is None and cfg.nT is None:
        grid = ar.suggest_time_grid(state)
    else:
        auto = ar.suggest_time_grid(state)
        lo = auto[0] if cfg.Tmin is None else cfg.Tmin
        hi = auto[-1] if cfg.Tmax is None else cfg.Tmax
        if not lo < hi:
            raise ConfigError("T grid needs min < max")
        grid = np.linspace(lo, hi, auto.size if cfg.nT is None else cfg.nT)
    tol = ar.povm.QUAD_TOL if cfg.tol is None else cfg.tol
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", GridTooNarrowWarning)
        res = ar.toa_distribution(grid, state, tol)
    csv = _Csv("dist", {"state": state.label, "mass": cfg.mass, "T": f"[{grid[0]},{grid[-1]}]x{grid.size}"}, cfg.tol)
    csv.columns = ("T", "Pi", "plus", "minus")
    csv.rows = list(zip(res.T_grid, res.values, res.plus, res.minus))
    csv.note("captured_norm", repr(res.captured_norm))
    csv.note("missing_norm_estimate", repr(res.missing_norm))
    csv.note("achieved_error", f"max amplitude quadrature error {res.error_estimate:.3e}")
    for w in caught:
        csv.note("warning", str(w.message))
    if state.domain_flag:
        csv.note("first_moment", repr(ar.arrival_moment(state, 1)))
        csv.note("T_operator_expectation", repr(ar.t_operator_expectation(state)))
        m2 = ar.arrival_moment(state, 2)
        csv.note("second_moment", repr(m2))
        csv.note("variance_form", repr(m2 - ar.apply_T_operator(state).norm_squared()))
    else:
        csv.note("moments", "state outside the operator domain; distribution only")
    return csv


def cmd_check(cfg, stream):
    names = checks.SUITES if cfg.suite in (None, "all") else (cfg.suite,)
    if any(n not in checks.SUITES for n in names):
        raise ConfigError(f"unknown suite {cfg.suite!r}; choose from all, {', '.join(checks.SUITES)}")
    ok = True
    for name in names:
        results = checks.run_suite(name, cfg.tol)
        for r in results:
            print(r.line(), file=stream)
        passed = all(r.passed for r in results)
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  suite {name}", file=stream)
    return ok


# ---------------------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="toarrival", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"toarrival {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--T", type=float, nargs="+", help="arrival time(s)")
        sp.add_argument("--t", type=float, nargs="+", help="evolution time(s)")
        sp.add_argument("--mass", type=float, default=1.0)
        sp.add_argument("--xmin", type=float)
        sp.add_argument("--xmax", type=float)
        sp.add_argument("--n", type=int)
        sp.add_argument("--out", help="output CSV path (default: stdout)")
        sp.add_argument("--tol", type=float, help="quadrature tolerance override")
        sp.add_argument("--dT", type=float, help="quasi-eigenstate width")
        sp.add_argument("--eps", type=float, help="regularization momentum (unused by the figure commands)")

    e = sub.add_parser("eigenstate", help="<x|T+> on an x grid (presets 1a: wide window, 1b: near the origin)")
    common(e)
    e.add_argument("--figure", choices=("1a", "1b"), default="1a")
    common(sub.add_parser("tminus", help="the T-minus combination <x|T> on an x grid"))
    common(sub.add_parser("quasi", help="normalized quasi-eigenstate densities at several times"))
    d = sub.add_parser("dist", help="arrival-time distribution of a momentum state")
    common(d)
    d.add_argument("--Tmin", type=float)
    d.add_argument("--Tmax", type=float)
    d.add_argument("--nT", type=int)
    d.add_argument("--state", help="preset descriptor, e.g. gaussian:p0=10,sigma=1,x0=-5")
    d.add_argument("--conjugate", action="store_true", help="use the complex-conjugate state")
    c = sub.add_parser("check", help="run invariant suites")
    c.add_argument("--suite", default="all", help=f"all or one of {', '.join(checks.SUITES)}")
    c.add_argument("--tol", type=float)
    c.add_argument("--mass", type=float, default=1.0)
    return p


def _config(ns):
    cfg = RunConfig(ns.command)
    for key in ("dT", "eps", "mass", "xmin", "xmax", "n", "Tmin", "Tmax", "nT", "state", "out", "tol", "suite",
                "figure"):
        if getattr(ns, key, None) is not None:
            setattr(cfg, key, getattr(ns, key))
    if getattr(ns, "T", None):
        cfg.T = tuple(ns.T)
    if getattr(ns, "t", None):
        cfg.t = tuple(ns.t)
        cfg.extra["t_given"] = True
    if getattr(ns, "conjugate", False):
        cfg.extra["conjugate"] = True
    cfg.validate()
    return cfg


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        ns = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(ns)
        if cfg.command == "check":
            return EXIT_OK if cmd_check(cfg, stdout) else EXIT_NUMERICAL
        run = {"eigenstate": cmd_eigenstate, "tminus": cmd_tminus, "quasi": cmd_quasi, "dist": cmd_dist}
        csv = run[cfg.command](cfg)
        if not np.all(np.isfinite(np.asarray(csv.rows, dtype=float))):
            raise ToArrivalError("non-finite values in the output")
        text = csv.text()
    except ConfigError as exc:
        print(f"toarrival: configuration error: {exc}", file=stderr)
        return EXIT_CONFIG
    except (ToArrivalError, ArithmeticError) as exc:
        if isinstance(exc, DomainError):
            print(f"toarrival: configuration error: {exc}", file=stderr)
            return EXIT_CONFIG
        print(f"toarrival: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"toarrival: configuration error: {exc}", file=stderr)
        return EXIT_CONFIG
    if cfg.out:
        try:
            with open(cfg.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"toarrival: cannot write {cfg.out}: {exc}", file=stderr)
            return EXIT_CONFIG
    else:
        stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

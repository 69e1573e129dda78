import io
import subprocess
import sys

import numpy as np
import pytest

from toarrival import cli
from toarrival import eigenstates as es
from toarrival.units import H


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def parse(text):
    lines = text.splitlines()
    meta = [ln[2:] for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    cols = body[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]])
    return meta, cols, data


def note(meta, key):
    for m in meta:
        if m.startswith(key + ":"):
            return m[len(key) + 1:].strip()
    raise KeyError(key)


@pytest.fixture(scope="module")
def wide():
    code, out, _ = run("eigenstate")
    assert code == 0
    return parse(out)


def test_header_layout(wide):
    meta, cols, data = wide
    assert meta[0].startswith("toarrival ")
    assert note(meta, "command") == "eigenstate"
    assert "T=" in note(meta, "parameters")
    note(meta, "tolerance")
    note(meta, "achieved_error")
    assert cols == ["T", "x", "re", "im", "abs2"]
    assert data.shape == (3 * 221, 5)


def test_wide_window_phenomenology(wide):
    _, _, d = wide
    x = np.unique(d[:, 1])
    series = {T: d[d[:, 0] == T] for T in (0.01, 0.005, 0.001)}
    # left of the origin the density approaches m|x| / (h T^2)
    for T, s in series.items():
        far = s[s[:, 1] <= -1.0]
        assert np.allclose(far[:, 4], np.abs(far[:, 1]) / (H * T * T), rtol=0.05)
    # smaller T: steeper, more sharply peaked
    slopes = [np.polyfit(s[s[:, 1] <= -1.0][:, 1], s[s[:, 1] <= -1.0][:, 4], 1)[0] for s in series.values()]
    assert slopes[0] > slopes[1] > slopes[2]
    assert len(x) == 221


def test_origin_window_right_tail():
    code, out, _ = run("eigenstate", "--figure", "1b")
    assert code == 0
    _, _, d = parse(out)
    right = d[d[:, 1] >= 0.1]
    assert np.all(right[:, 4] > 0)
    assert d[:, 1].min() == -0.2


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("eigenstate", "--n", "41", "--out", str(a))[0] == 0
    assert run("eigenstate", "--n", "41", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert run("dist", "--nT", "51", "--out", str(a))[0] == 0
    assert run("dist", "--nT", "51", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_tminus():
    code, out, _ = run("tminus", "--n", "441")
    assert code == 0
    meta, cols, d = parse(out)
    assert np.all(d[:, 3] == 0)
    assert np.allclose(d[:, 2], 2 * es.ab_coordinate_amp(d[:, 1], es.EigenstateSpec(0.01)).real, rtol=1e-12)


def test_tminus_components():
    args = ("--xmin", "-1", "--xmax", "0.1", "--n", "56")
    _, out, _ = run("tminus", "--T", "0.01", "--t", "0.002", *args)
    _, _, tm = parse(out)
    _, out, _ = run("eigenstate", "--T", "0.008", "0.012", *args)
    _, _, e = parse(out)
    lo, hi = e[e[:, 0] == 0.008], e[e[:, 0] == 0.012]
    expect = (lo[:, 2] + 1j * lo[:, 3]) + (hi[:, 2] - 1j * hi[:, 3])
    assert np.allclose(tm[:, 2] + 1j * tm[:, 3], expect, rtol=0, atol=1e-12 * np.max(np.abs(expect)))


def test_quasi_centroids():
    code, out, _ = run("quasi", "--n", "1251")
    assert code == 0
    meta, cols, d = parse(out)
    assert cols[0] == "t"
    for t in (0.0, 0.02, 0.04):
        s = d[d[:, 0] == t]
        x, dens = s[:, 1], s[:, 4]
        info = dict(kv.split("=") for kv in note(meta, f"series t={t!r}").split())
        c = float(info["centroid_closed_form"])
        grid_norm = float(info["grid_norm"])
        assert 0.99 < grid_norm < 1.0
        # far tails fall like |x|^-3, so the truncated centroid sits within a few grid steps
        xmid = np.trapezoid(x * dens, x) / np.trapezoid(dens, x)
        assert xmid == pytest.approx(c, abs=0.01)
        if t == 0.04:
            assert abs(x[np.argmax(dens)]) <= x[1] - x[0]


def test_dist_summary():
    code, out, _ = run("dist", "--state", "monomial:k=2")
    assert code == 0
    meta, cols, d = parse(out)
    assert cols == ["T", "Pi", "plus", "minus"]
    assert float(note(meta, "captured_norm")) > 0.9999
    assert float(note(meta, "second_moment")) == pytest.approx(2.0, abs=1e-3)
    assert abs(float(note(meta, "variance_form"))) < 2e-3
    assert np.all(d[:, 3] == 0)


def test_dist_conjugate_mirrors():
    _, a, _ = run("dist", "--Tmin", "0.2", "--Tmax", "0.9", "--nT", "36")
    _, b, _ = run("dist", "--Tmin", "-0.9", "--Tmax", "-0.2", "--nT", "36", "--conjugate")
    _, _, da = parse(a)
    _, _, db = parse(b)
    assert np.allclose(da[:, 0], -db[::-1, 0])
    assert np.allclose(da[:, 1], db[::-1, 1], rtol=0, atol=1e-10)


def test_dist_outside_domain_notes_it():
    code, out, _ = run("dist", "--nT", "101")
    assert code == 0
    assert "outside the operator domain" in note(parse(out)[0], "moments")


def test_narrow_grid_warning_is_recorded():
    code, out, _ = run("dist", "--state", "monomial:k=2", "--Tmin", "-2", "--Tmax", "2", "--nT", "401")
    assert code == 0
    assert "misses" in note(parse(out)[0], "warning")


def test_check_one_suite():
    code, out, _ = run("check", "--suite", "covariance")
    assert code == 0
    assert out.strip().splitlines()[-1] == "PASS  suite covariance"


@pytest.mark.parametrize("argv", [
    ("eigenstate", "--n", "1"),
    ("eigenstate", "--xmin", "1", "--xmax", "0"),
    ("eigenstate", "--mass", "-1"),
    ("eigenstate", "--T", "0"),
    ("dist", "--state", "nosuch:k=1"),
    ("dist", "--state", "gaussian:sigma=-1"),
    ("dist", "--Tmin", "1", "--Tmax", "0"),
    ("quasi", "--dT", "0"),
    ("check", "--suite", "nosuch"),
    ("eigenstate", "--bogus"),
    ("tminus", "--t", "nan"),
])
def test_config_errors_exit_2(argv):
    code, out, err = run(*argv)
    assert code == 2
    assert out == ""


def test_numerical_failure_exits_1(monkeypatch):
    monkeypatch.setattr(es, "ab_coordinate_amp", lambda x, spec, method="exact": np.full(np.shape(x), np.nan))
    code, out, err = run("eigenstate", "--n", "21")
    assert code == 1
    assert "numerical failure" in err and out == ""


def test_probe_mismatch_exits_1(monkeypatch):
    real = es.ab_coordinate_amp

    def skewed(x, spec, method="exact"):
        v = real(x, spec, method)
        return v * (1 + 1e-6) if method == "contour" else v

    monkeypatch.setattr(es, "ab_coordinate_amp", skewed)
    assert run("eigenstate", "--n", "21")[0] == 1


def test_wrong_branch_is_caught(monkeypatch):
    # flip the branch phase: the frozen-value comparison must notice
    monkeypatch.setattr(es, "BRANCH_PHASE", 1j)
    code, out, _ = run("check", "--suite", "symmetry")
    assert code == 1
    assert "FAIL  symmetry.eigen_frozen_values" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "toarrival", "eigenstate", "--n", "5", "--T", "0.01"],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 0
    assert r.stdout.startswith("# toarrival")
    r = subprocess.run([sys.executable, "-m", "toarrival", "eigenstate", "--n", "0"],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 2

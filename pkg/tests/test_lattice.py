import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvlab import _fallback, kernels
from nvlab.lattice import (
    Cubic, Disc, Hyperbola, Square, branch_condition, classify_cubic, constant_sampler,
    count_cubic, count_hyperbola, fit_exponent, fit_slope, hyperbola_sampler, k_form_report,
    sigma1_brute, sigma1_count, sigma3_count,
)

SQ21 = Square((0, 0), 21)


@pytest.mark.parametrize("abc, pts", [((1, 0, 1), {(1, 0), (-1, 0)}),
                                      ((0, 1, 2), {(1, 1), (-1, -1)}),
                                      ((1, 0, -1), {(0, 1), (0, -1)})])
def test_hyperbola_examples(abc, pts):
    rep = count_hyperbola(Hyperbola(*abc), SQ21)
    assert rep.count == 2 and set(map(tuple, rep.witnesses)) == pts


def test_hyperbola_rejects_degenerate():
    with pytest.raises(ValueError):
        Hyperbola(1, 0, 0)
    with pytest.raises(ValueError):
        Hyperbola(0, 0, 3)


def test_window_semantics():
    assert Square((0, 0), 21).bounds() == (-10, 10, -10, 10)
    assert Square((0, 0), 2).bounds() == (-1, 1, -1, 1)
    assert Square((Fraction(1, 2), 0), 2).bounds() == (0, 1, -1, 1)
    with pytest.raises(ValueError):
        Square((0, 0), 0)
    with pytest.raises(ValueError):
        Disc((0.25, 0), 3)
    with pytest.raises(ValueError):
        Disc((0, 0), 0.5)


windows = st.one_of(
    st.builds(lambda x, y, n: Square((x, y), n), st.integers(-60, 60), st.integers(-60, 60),
              st.integers(1, 120)),
    st.builds(lambda x, y, r: Disc((Fraction(x, 2), Fraction(y, 2)), r), st.integers(-120, 120),
              st.integers(-120, 120), st.integers(1, 60)),
)
small = st.integers(-40, 40)


@settings(max_examples=150, deadline=None)
@given(small, small, small.filter(bool), windows)
def test_hyperbola_matches_brute(a, b, c, w):
    if a == 0 and b == 0:
        return
    h = Hyperbola(a, b, c)
    assert count_hyperbola(h, w).count == count_hyperbola(h, w, brute=True).count


@settings(max_examples=150, deadline=None)
@given(small, small, windows, st.booleans())
def test_cubic_matches_brute(a, b, w, excl):
    cu = Cubic(a, b)
    assert count_cubic(cu, w, excl).count == count_cubic(cu, w, excl, brute=True).count


def test_cubic_line_examples():
    rep = count_cubic(Cubic(0, 0), SQ21)
    assert rep.count == 21 and rep.degenerate and rep.degeneracy_kind == "line_in_family"
    assert count_cubic(Cubic(0, 0), SQ21, exclude_line=True).count == 0
    assert count_cubic(Cubic(2, 0), SQ21).count == count_cubic(Cubic(2, 0), SQ21, brute=True).count


def test_classify_cubic():
    c0 = classify_cubic(Cubic(0, 0))
    assert c0["has_line_family"] and c0["slope_check_passed"] and not c0["rational_slope_branch"]
    c2 = classify_cubic(Cubic(2, 0))
    assert not c2["has_line_family"] and c2["slope_check_passed"]
    for a, b in [(2, 4), (-6, 3), (10, -7)]:
        iso = classify_cubic(Cubic(a, b))["isolated_point"]
        assert iso["on_curve"] and iso["residual"] == "0"
        # the closed form stated with a = 2 xi1, b = 2 eta1
        xi1, eta1 = Fraction(a, 2), Fraction(b, 2)
        assert Fraction(iso["x"]) == -Fraction(2, 3) * xi1
        assert Fraction(iso["y"]) == -Fraction(2, 9) * xi1**2 / eta1
    for a, b in [(1, 1), (-17, 40), (300, -2)]:
        br = [f for f in classify_cubic(Cubic(a, b))["families"] if f["kind"] == "branches"][0]
        assert br["max_slope_deviation"] < 1e-6


@pytest.mark.parametrize("zeta_tau, radius, count", [((2, 0, 8), 10, 2), ((0, 0, 0), 2, 13),
                                                     ((1, 0, 5), 100, 0)])
def test_sigma1_examples(zeta_tau, radius, count):
    d = Disc((0, 0), radius)
    assert sigma1_count(*zeta_tau, d).count == count == sigma1_brute(*zeta_tau, d)


@settings(max_examples=60, deadline=None)
@given(st.integers(-30, 30), st.integers(-30, 30), st.integers(-3000, 3000), st.integers(1, 25))
def test_sigma1_matches_brute_and_is_symmetric(xi, eta, tau, r):
    d = Disc((Fraction(xi, 2), Fraction(eta, 2)), r)
    rep = sigma1_count(xi, eta, tau, d)
    assert rep.count == sigma1_brute(xi, eta, tau, d)
    pts = {tuple(p) for p in rep.witnesses}
    if rep.count <= 100:
        assert pts == {(xi - x, eta - y) for x, y in pts}


def test_branch_condition_reports_both_readings():
    bc = branch_condition(4, 2, 0)
    assert Fraction(bc["displayed_7_4"]) == -Fraction(64, 4) + Fraction(7, 4) * 16
    assert Fraction(bc["derived_3_4"]) == -Fraction(64, 4) + Fraction(3, 4) * 16


def test_sigma3_examples():
    assert sigma3_count(0, 0, SQ21).count == 0
    for xi1, eta1, sq in [(1, 0, Square((0, 0), 41)), (3, -2, Square((5, 1), 61))]:
        assert sigma3_count(xi1, eta1, sq).count == sigma3_count(xi1, eta1, sq, brute=True).count
    assert sigma3_count(2, 1, Square((10**5, 10**5), 1)).count == 0


def test_counts_monotone_under_inclusion():
    h = Hyperbola(3, -1, 35)
    counts = [count_hyperbola(h, Square((0, 0), n)).count for n in range(1, 400, 13)]
    assert counts == sorted(counts)


def test_overflow_guard():
    with pytest.raises(OverflowError):
        count_hyperbola(Hyperbola(10**12, 1, 1), Square((0, 0), 10**6))


def test_fit_exponent_constant_family():
    rep = fit_exponent(constant_sampler, [64, 128, 256], 3, seed=0)
    assert rep["maxima"] == [2, 2, 2] and abs(rep["fitted_slope"]) < 1e-12


def test_fit_exponent_precondition_and_determinism():
    with pytest.raises(ValueError):
        fit_exponent(hyperbola_sampler, [64], 10)
    a = fit_exponent(hyperbola_sampler, [32, 64, 128], 40, seed=7, threads=1)
    b = fit_exponent(hyperbola_sampler, [32, 64, 128], 40, seed=7, threads=4)
    assert a == b


def test_fit_slope():
    assert fit_slope([1, 2, 4, 8], [3, 6, 12, 24]) == pytest.approx(1.0)


def test_k_form_report():
    rep = k_form_report()
    assert rep["xi_eta2_coefficient"] == "3/4"
    assert rep["quadratic_form_negated"] and not rep["all_terms_agree"]
    assert "3/4" in rep["statement"]


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
@settings(max_examples=80, deadline=None)
@given(small, small, small, st.integers(-50, 50), st.integers(1, 80), st.booleans())
def test_backend_parity_counts(a, b, c, x0, n, excl):
    from nvlab import _speedups
    win = (x0, x0 + n, -n // 2, n // 2, 100)
    if c != 0 and (a, b) != (0, 0):
        r1 = _speedups.hyperbola_count(a, b, c, *win)
        r2 = _fallback.hyperbola_count(a, b, c, *win)
        assert r1[0] == r2[0] and np.array_equal(np.asarray(r1[1]), np.asarray(r2[1]))
    r1 = _speedups.cubic_count(a, b, *win[:4], excl, 100)
    r2 = _fallback.cubic_count(a, b, *win[:4], excl, 100)
    assert r1[0] == r2[0]
    r1 = _speedups.disc_phase_count(a, b, c * 50, 2 * x0, 0, float(n), 100)
    r2 = _fallback.disc_phase_count(a, b, c * 50, 2 * x0, 0, float(n), 100)
    assert r1[0] == r2[0]


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
def test_backend_parity_convolution(rng):
    from nvlab import _speedups
    n = 12
    f = np.fft.fftfreq(n, 1 / n).astype(np.int64)
    f[n // 2] = n // 2
    u = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    v = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    u[0, 0] = v[0, 0] = 0
    for kind in (kernels.WEIGHT_PLAIN, kernels.WEIGHT_Q, kernels.WEIGHT_M):
        for wrap in (True, False):
            a = np.asarray(_speedups.conv_weighted(u, v, f, f, kind, wrap))
            b = np.asarray(_fallback.conv_weighted(u, v, f, f, kind, wrap))
            assert np.abs(a - b).max() < 1e-12 * np.abs(b).max()


def test_pure_python_fallback_selected_by_env():
    code = ("from nvlab import kernels; from nvlab.lattice import *; "
            "print(kernels.BACKEND, count_hyperbola(Hyperbola(1, 0, 1), Square((0, 0), 21)).count)")
    env = {**os.environ, "NVLAB_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out == ["python", "2"]

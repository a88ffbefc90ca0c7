import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvlab.torus import (
    PhaseParams, SpectralField, TorusGrid, apply_multiplier, frequency_of, free_evolve,
    from_physical, index_of, multiplier_d_inv_dbar, multiplier_dbar_inv_d, phase, phase_array,
    phase_modified, read_nvf, to_physical, write_nvf,
)

from conftest import random_field


@pytest.mark.parametrize("zeta, value", [((0, 7), 0), ((1, 1), -2), ((2, 3), -46)])
def test_phase_examples(zeta, value):
    assert phase(zeta) == value


def test_phase_exact_at_large_frequencies():
    assert phase((10**6, 10**6)) == -2 * 10**18
    with pytest.raises(OverflowError):
        phase((10**7, 10**7))


def test_phase_is_odd_on_grid():
    g = TorusGrid(32, 32)
    x, y = g.xi, g.eta
    assert np.array_equal(phase_array(-x, -y), -phase_array(x, y))


@pytest.mark.parametrize("zeta, phi0, value", [((1, 0), 0, 1), ((1, 0), 1, 4), ((1, 1), 2, -8)])
def test_phase_modified(zeta, phi0, value):
    assert phase_modified(zeta, PhaseParams(phi0)) == pytest.approx(value)


def test_phase_modified_origin_is_domain_error():
    with pytest.raises((ValueError, ZeroDivisionError)):
        phase_modified((0, 0), PhaseParams(1.0))


@pytest.mark.parametrize("zeta, value", [((1, 0), 1), ((0, 1), -1), ((1, 1), -1j), ((0, 0), 0)])
def test_multiplier_examples(zeta, value):
    assert multiplier_dbar_inv_d(zeta) == pytest.approx(value)
    assert multiplier_d_inv_dbar(zeta) == pytest.approx(complex(value).conjugate())


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_multipliers_unimodular_and_inverse(x, y):
    if (x, y) == (0, 0):
        return
    a, b = multiplier_dbar_inv_d((x, y)), multiplier_d_inv_dbar((x, y))
    assert abs(abs(a) - 1) < 1e-15
    assert abs(a * b - 1) < 1e-15


def test_apply_multiplier_examples(grid16, rng):
    u = SpectralField.from_modes(grid16, {(0, 1): 2})
    assert apply_multiplier(u, multiplier_dbar_inv_d)[(0, 1)] == pytest.approx(-2)
    v = random_field(grid16, rng)
    assert np.array_equal(apply_multiplier(v, lambda z: 1).coeff, v.coeff)
    w = apply_multiplier(v, multiplier_dbar_inv_d)
    assert w.l2_norm() == pytest.approx(v.l2_norm(), rel=1e-14)


def test_free_evolve_examples(grid16, rng):
    u = SpectralField.from_modes(grid16, {(1, 0): 1})
    assert free_evolve(u, math.pi)[(1, 0)] == pytest.approx(-1)
    v = random_field(grid16, rng)
    assert np.array_equal(free_evolve(v, 0.0).coeff, v.coeff)
    assert free_evolve(v, 0.731).l2_norm() == pytest.approx(v.l2_norm(), rel=1e-14)


def test_free_evolve_group_and_period(grid16, rng):
    v = random_field(grid16, rng)
    a = free_evolve(free_evolve(v, 0.3), 0.45).coeff
    assert np.abs(a - free_evolve(v, 0.75).coeff).max() < 1e-12
    assert np.abs(free_evolve(v, 2 * math.pi).coeff - v.coeff).max() < 1e-12


def test_free_evolve_modified_phase_keeps_mean(grid16):
    c = np.zeros(grid16.shape, complex)
    c[0, 0], c[index_of(grid16, (1, 0))] = 3.0, 1.0
    u = SpectralField(grid16, c, False)
    out = free_evolve(u, 0.5, PhaseParams(1.0))
    assert out[(0, 0)] == 3.0
    assert out[(1, 0)] == pytest.approx(cmath.exp(-0.5j * 4))


def test_single_mode_samples(grid16):
    u = SpectralField.from_modes(grid16, {(1, 0): 1})
    x = 2 * np.pi * np.arange(16) / 16
    expect = np.exp(1j * x)[:, None] * np.ones(16)[None, :]
    assert np.abs(to_physical(u) - expect).max() < 1e-14


def test_round_trip_and_parseval(grid16, rng):
    u = random_field(grid16, rng)
    s = to_physical(u)
    back = from_physical(grid16, s, mean_zero=True)
    assert np.abs(back.coeff - u.coeff).max() / np.abs(u.coeff).max() < 1e-13
    quad = (2 * np.pi) ** 2 * np.mean(np.abs(s) ** 2)
    assert quad == pytest.approx(u.l2_norm() ** 2, rel=1e-13)
    z = SpectralField.zeros(grid16)
    assert not from_physical(grid16, to_physical(z)).coeff.any()


def test_shape_mismatch(grid16):
    with pytest.raises(ValueError):
        from_physical(grid16, np.zeros((8, 8)))


@given(st.integers(-7, 8), st.integers(-7, 8))
def test_index_round_trip(x, y):
    g = TorusGrid(16, 16)
    assert tuple(frequency_of(g, index_of(g, (x, y)))) == (x, y)


def test_index_out_of_grid(grid16):
    with pytest.raises((ValueError, IndexError)):
        index_of(grid16, (9, 0))


def test_grid_validation():
    for bad in [(7, 8), (8, 6), (0, 8)]:
        with pytest.raises(ValueError):
            TorusGrid(*bad)


def test_mean_zero_invariant(grid16):
    c = np.zeros(grid16.shape, complex)
    c[0, 0] = 1
    with pytest.raises(ValueError):
        SpectralField(grid16, c, True)


def test_real_field_symmetry(grid16, rng):
    u = random_field(grid16, rng, real=True)
    assert u.realness_defect() == 0
    assert np.abs(to_physical(u).imag).max() < 1e-13


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_nvf_round_trip(tmp_path_factory, seed, real):
    g = TorusGrid(8, 12)
    u = random_field(g, np.random.default_rng(seed), real=real)
    p = tmp_path_factory.mktemp("nvf") / "u.nvf"
    write_nvf(p, u)
    v = read_nvf(p)
    assert v.grid == g and v.mean_zero == u.mean_zero and v.real_valued == u.real_valued
    assert np.array_equal(v.coeff, u.coeff)
    raw = p.read_bytes()
    assert raw[:4] == b"NVF1" and len(raw) == 4 + 9 + 16 * 96


def test_nvf_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.nvf"
    p.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(ValueError):
        read_nvf(p)

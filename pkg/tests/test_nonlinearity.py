from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvlab.nonlinearity import (
    apply_Q, apply_Q_split, bilinear_B, bilinear_B_convolution, bound_7_constant, dealias,
    nonlinearity_N, nonlinearity_N_direct, plain_product, resonance_r, resonance_via_phase,
    symbol_m, verify_bound_7, verify_dual_path, verify_m_r_identity,
    verify_resonance_exhaustive,
)
from nvlab.torus import SpectralField, TorusGrid

from conftest import random_field

nonzero = st.tuples(st.integers(-300, 300), st.integers(-300, 300)).filter(lambda z: z != (0, 0))


@pytest.mark.parametrize("z1, z2, m", [((1, 0), (1, 0), 4), ((1, 0), (0, 1), 0),
                                       ((0, 3), (0, -5), 0)])
def test_symbol_m_examples(z1, z2, m):
    assert symbol_m(z1, z2) == m


def test_symbol_m_zero_factor():
    with pytest.raises(ZeroDivisionError):
        symbol_m((0, 0), (1, 2))


@pytest.mark.parametrize("z1, z2, r", [((1, 0), (1, 0), 6), ((1, 0), (0, 1), -3),
                                       ((4, -7), (-4, 7), 0)])
def test_resonance_examples(z1, z2, r):
    assert resonance_r(z1, z2) == r == resonance_via_phase(z1, z2)


@given(nonzero, nonzero)
def test_m_r_symmetric_and_identity(z1, z2):
    assert symbol_m(z1, z2) == symbol_m(z2, z1)
    assert resonance_r(z1, z2) == resonance_r(z2, z1)
    k1, k2 = z1[0] ** 2 + z1[1] ** 2, z2[0] ** 2 + z2[1] ** 2
    dot = z1[0] * z2[0] + z1[1] * z2[1]
    assert symbol_m(z1, z2) == Fraction(2 * dot, 3 * k1 * k2) * resonance_r(z1, z2)


@given(st.integers(-100, 100), st.integers(1, 100))
def test_m_vanishes_when_orthogonal(a, b):
    assert symbol_m((a, b), (-b * 3, a * 3)) == 0


def test_resonance_overflow_detected():
    with pytest.raises(OverflowError):
        resonance_r((10**7, 10**7), (10**7, -10**7))


def test_verify_m_r_identity_report():
    rep = verify_m_r_identity(10_000, 1000, seed=3)
    assert rep.passed and rep.max_deviation < 1e-12
    d = rep.to_dict()
    assert {"samples", "max_deviation", "worst_witness", "pass"} <= set(d)


def test_resonance_exhaustive_small():
    rep = verify_resonance_exhaustive(12)
    assert rep.passed and rep.samples == 25**4


def test_resonance_bound_with_constant_passes():
    rep = verify_bound_7(0.5, 20_000, 1000)
    assert rep.passed
    assert rep.details["smallest_working_constant"] == pytest.approx(bound_7_constant(0.5))
    assert rep.details["ingredient_constant"] <= 3 * (1 + 1e-12)


def test_resonance_bound_constant_free_fails_at_unit_pair():
    rep = verify_bound_7(0.5, 1000, 50, constant=1.0)
    assert not rep.passed
    assert rep.worst_witness == {"zeta1": [1, 0], "zeta2": [1, 0]}


def test_resonance_bound_theta_domain():
    with pytest.raises(ValueError):
        verify_bound_7(1.0, 10, 10)


def test_B_single_modes(grid16):
    ex = SpectralField.from_modes(grid16, {(1, 0): 1})
    ey = SpectralField.from_modes(grid16, {(0, 1): 1})
    b = bilinear_B(ex, ex)
    assert b[(2, 0)] == pytest.approx(4j, abs=1e-13)
    assert np.abs(b.coeff).sum() == pytest.approx(4, abs=1e-12)
    assert abs(bilinear_B(ex, ey)[(1, 1)]) < 1e-14


def test_B_symmetric_and_mean_free(grid16, rng):
    u, v = random_field(grid16, rng), random_field(grid16, rng)
    assert np.array_equal(bilinear_B(u, v).coeff, bilinear_B(v, u).coeff)
    assert bilinear_B(u, u).coeff[0, 0] == 0


def test_convolution_reproduces_symbol_table(grid16):
    for z1 in [(1, 0), (2, -1), (-3, 2)]:
        for z2 in [(0, 1), (1, 1), (2, 3)]:
            u = SpectralField.from_modes(grid16, {z1: 1})
            v = SpectralField.from_modes(grid16, {z2: 1})
            z = (z1[0] + z2[0], z1[1] + z2[1])
            assert bilinear_B_convolution(u, v)[z] == pytest.approx(1j * float(symbol_m(z1, z2)))


def test_dual_path_small():
    rep = verify_dual_path(n_fields=10, n=16, seed=5)
    assert rep.passed and rep.max_deviation < 1e-12


def test_zero_inputs(grid16):
    z = SpectralField.zeros(grid16)
    assert not bilinear_B_convolution(z, z).coeff.any()
    assert not nonlinearity_N(z).coeff.any()


def test_N_matches_direct_form_and_is_real(grid16, rng):
    u = random_field(grid16, rng, real=True)
    n = nonlinearity_N(u)
    assert np.abs(n.coeff - nonlinearity_N_direct(u).coeff).max() < 1e-12 * np.abs(n.coeff).max()
    assert n.realness_defect() < 1e-12 * np.abs(n.coeff).max()
    assert n.coeff[0, 0] == 0


def test_apply_Q_examples(grid16, rng):
    a = SpectralField.from_modes(grid16, {(0, 1): 1})
    b = SpectralField.from_modes(grid16, {(0, 2): 1})
    c = SpectralField.from_modes(grid16, {(1, 0): 1})
    assert apply_Q(a, b)[(0, 3)] == 0
    assert apply_Q(a, c)[(1, 1)] == pytest.approx(1)
    u = random_field(grid16, rng, band=3).coeff.copy()
    u[0, :] = 0
    u = SpectralField(grid16, u)
    v = random_field(grid16, rng, band=3)
    assert np.abs(apply_Q(u, v).coeff - plain_product(u, v).coeff).max() < 1e-12


def test_apply_Q_split(grid16, rng):
    u, v = random_field(grid16, rng, band=3), random_field(grid16, rng, band=3)
    d = np.abs(apply_Q(u, v).coeff - apply_Q_split(u, v).coeff).max()
    assert d < 1e-12 * max(np.abs(apply_Q(u, v).coeff).max(), 1)


def test_dealias_idempotent(grid16, rng):
    u = random_field(grid16, rng)
    once = dealias(u)
    assert np.array_equal(dealias(once).coeff, once.coeff)


def test_grid_mismatch(grid16):
    other = SpectralField.zeros(TorusGrid(8, 8))
    with pytest.raises(ValueError):
        bilinear_B(SpectralField.zeros(grid16), other)

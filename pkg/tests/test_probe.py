import numpy as np
import pytest

from nvlab.probe import (
    ModeSet, ProbeConfig, bilinear_free_norm, bilinear_free_norm_quadrature, counterexample_line,
    lt2_norm_free, probe, probe_bilinear_estimate, probe_transfer_estimate, product_groups,
    product_norm, random_in_disc, report_json, resonant_concentrated, xsb_norm_free,
)
from nvlab.torus import SpectralField, TorusGrid, phase_array

NORM = (2 * np.pi) ** 1.5


def modes(d):
    return ModeSet.from_modes(d)


def test_single_mode_examples():
    assert bilinear_free_norm(modes({(1, 0): 1}), modes({(0, 1): 1})) == pytest.approx(NORM)
    e = modes({(0, 1): 1})
    assert bilinear_free_norm(e, e) == 0
    assert bilinear_free_norm(e, e, use_Q=False) == pytest.approx(NORM)
    assert bilinear_free_norm(modes({}), e) == 0


def test_groups_sum_within_resonant_sets():
    # (1,0)+(0,1) and (0,1)+(1,0) land on z=(1,1) with the same tau: one group
    u = modes({(1, 0): 1, (0, 1): 1})
    g = product_groups(u, u, use_Q=False)
    i = np.flatnonzero((g.xi == 1) & (g.eta == 1))
    assert len(i) == 1 and g.value[i[0]] == 2
    assert set(g.tau[(g.xi == 1) & (g.eta == 1)]) == {1}


def test_field_and_modeset_agree():
    g = TorusGrid(16, 16)
    u = SpectralField.from_modes(g, {(1, 2): 0.5, (-3, 1): 1j})
    assert bilinear_free_norm(u, u) == bilinear_free_norm(ModeSet.from_field(u),
                                                          ModeSet.from_field(u))


@pytest.mark.parametrize("use_Q", [True, False])
def test_quadrature_oracle_32(rng, use_Q):
    g = TorusGrid(32, 32)
    for _ in range(2):
        c = np.zeros(g.shape, complex)
        for _ in range(10):
            x, y = rng.integers(-5, 6, size=2)
            if (x, y) != (0, 0):
                c[x % 32, y % 32] = rng.normal() + 1j * rng.normal()
        c[0, 1] = 0.7  # keep some xi = 0 modes so Q matters
        c[0, 30] = -0.4j
        u = SpectralField(g, c)
        d = np.roll(c, 1, axis=1) * 0.5 + (c != 0) * 0.1
        d[0, 0] = 0
        v = SpectralField(g, d)
        exact = bilinear_free_norm(u, v, use_Q)
        quad = bilinear_free_norm_quadrature(u, v, use_Q)
        assert abs(exact - quad) <= 1e-10 * exact


def test_quadrature_needs_enough_samples():
    g = TorusGrid(8, 8)
    u = SpectralField.from_modes(g, {(3, 0): 1})
    with pytest.raises(ValueError):
        bilinear_free_norm_quadrature(u, u, time_samples=50)


def test_xsb_norm_free_examples():
    u = modes({(3, 4): 2})
    assert xsb_norm_free(u, 0) == pytest.approx(NORM * 2)
    assert xsb_norm_free(u, 1) == pytest.approx(NORM * 2 * np.sqrt(26))
    w = modes({(1, 0): 1, (5, -2): 3 - 1j})
    assert xsb_norm_free(w, -1) <= xsb_norm_free(w, 0)
    assert lt2_norm_free(w) == xsb_norm_free(w, 0)


def test_product_norm_weights():
    u, v = modes({(1, 0): 1}), modes({(0, 1): 1})
    # z = (1,1), tau = 1 + 0, phi(z) = -2: modulation 3
    assert product_norm(u, v, b=-0.5) == pytest.approx(NORM * 10 ** -0.25)
    assert product_norm(u, v, s=-1) == pytest.approx(NORM / np.sqrt(3))


def test_line_counterexample_ratio_is_exact():
    for R in (3, 10):
        u, v = counterexample_line(R)
        n = 2 * R + 1
        pairs = sum((n - abs(k)) ** 2 for k in range(-(n - 1), n))
        expect = NORM * np.sqrt(pairs) / (u.l2_norm() * v.l2_norm())
        assert bilinear_free_norm(u, v, use_Q=False) / (u.l2_norm() * v.l2_norm()) == \
            pytest.approx(expect, rel=1e-12)


def test_families_are_mean_zero_and_in_disc():
    rng = np.random.default_rng(0)
    u, v = random_in_disc(rng, 10, max_modes=50)
    assert len(u) <= 50 and not np.any((u.xi == 0) & (u.eta == 0))
    u, v = resonant_concentrated(rng, 12)
    tau = phase_array(u.xi, u.eta) + phase_array(v.xi, v.eta)
    assert len(set(tau)) == 1 and len(set(u.xi + v.xi)) == 1
    assert not np.any((u.xi == 0) & (u.eta == 0)) and not np.any((v.xi == 0) & (v.eta == 0))


def test_probe_config_validation():
    with pytest.raises(ValueError):
        ProbeConfig(R_list=(4,))
    with pytest.raises(ValueError):
        ProbeConfig(R_list=(8, 4))
    with pytest.raises(ValueError):
        ProbeConfig(R_list=(1, 4))
    with pytest.raises(ValueError):
        ProbeConfig(data_family="nope")


def test_line_probe_with_and_without_Q():
    off = probe(ProbeConfig(data_family="counterexample_line", use_Q=False))
    assert off["pass"] and 0.45 <= off["fitted_slope"] <= 0.55
    assert off["max_ratios"] == sorted(off["max_ratios"])
    on = probe(ProbeConfig(data_family="counterexample_line"))
    assert on["pass"] and on["max_ratios"] == [0.0] * 6


def test_resonant_probe_and_report_shape():
    rep = probe_bilinear_estimate(ProbeConfig(data_family="resonant_concentrated",
                                              trials_per_R=4))
    assert rep["pass"] and rep["fitted_slope"] <= 0.4
    assert {"estimate_id", "R_list", "max_ratios", "fitted_slope", "witness_seed", "pass"} \
        <= set(rep)
    assert report_json(rep) == report_json(dict(rep))


def test_probe_deterministic_across_threads():
    cfg = ProbeConfig(R_list=(4, 8, 16), trials_per_R=3, seed=11)
    assert probe(cfg, threads=1) == probe(cfg, threads=3)


@pytest.mark.parametrize("est", ["bilin_xsb", "dual_bilin_xsb", "transposed_bilin"])
def test_transfer_estimates(est):
    rep = probe_transfer_estimate(ProbeConfig(R_list=(4, 8, 16, 32), trials_per_R=2,
                                              estimate_id=est, max_modes=256))
    assert rep["pass"]
    single = probe_transfer_estimate(ProbeConfig(R_list=(2, 3), estimate_id=est,
                                                 data_family="counterexample_line"))
    assert single["max_ratios"] == [0.0, 0.0]
    with pytest.raises(ValueError):
        probe_transfer_estimate(ProbeConfig())

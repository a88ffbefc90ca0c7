"""Exact frequency-side probes of the periodic bilinear estimates.

For free solutions U u0 = exp(-i t phi(D)) u0 the product is a trigonometric
polynomial in (x, y, t) whose (z, tau) coefficient is

    G(z, tau) = Σ_{z1 + z2 = z, phi(z1) + phi(z2) = tau} w(z1, z) u0(z1) v0(z2),

with w the Q-factor 1 - δ(xi, 0)δ(xi1, 0) (or 1 without Q).  Since phi is
integer-valued, everything is 2pi-periodic in t and every space-time norm
below is a finite weighted sum of |G|^2; no quadrature is involved.  Norms
are over T^2 x [0, 2pi) with the transform convention of :mod:`nvlab.torus`,
so ||U u0||_{L^2_{xyt}} = (2 pi)^{3/2} (Σ |c|^2)^{1/2}.

Maximising over random trials bounds operator norms from below only.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lattice import fit_slope
from .torus import SpectralField, TorusGrid, phase_array

GAMMA = 3 / 5
SLOPE_SLACK = 0.1
LINE_SLOPE = (0.45, 0.55)
FAMILIES = ("random_in_disc", "resonant_concentrated", "counterexample_line")
ESTIMATES = ("proposition", "bilin_xsb", "dual_bilin_xsb", "transposed_bilin")
MAX_PAIRS = 30_000_000
TIME_NORM = (2 * np.pi) ** 1.5


@dataclass(frozen=True)
class ModeSet:
    """Sparse Fourier data: integer frequencies and their coefficients."""

    xi: np.ndarray
    eta: np.ndarray
    coeff: np.ndarray

    @classmethod
    def from_field(cls, u: SpectralField) -> "ModeSet":
        idx = np.nonzero(u.coeff)
        g = u.grid
        return cls(g.freqs_x[idx[0]].astype(np.int64), g.freqs_y[idx[1]].astype(np.int64),
                   u.coeff[idx].astype(complex))

    @classmethod
    def from_modes(cls, modes: dict) -> "ModeSet":
        if not modes:
            return cls(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, complex))
        keys = list(modes)
        return cls(np.array([k[0] for k in keys], np.int64), np.array([k[1] for k in keys], np.int64),
                   np.array([modes[k] for k in keys], complex))

    def l2_norm(self) -> float:
        return float(2 * np.pi * np.sqrt(np.sum(np.abs(self.coeff) ** 2)))

    def weighted_norm(self, s: float) -> float:
        """(Σ <z>^{2s} |c|^2)^{1/2} with <z> = (1 + |z|^2)^{1/2}."""
        w = (1.0 + self.xi.astype(float) ** 2 + self.eta.astype(float) ** 2) ** s
        return float(np.sqrt(np.sum(w * np.abs(self.coeff) ** 2)))

    def __len__(self):
        return len(self.coeff)


def _as_modes(u) -> ModeSet:
    return u if isinstance(u, ModeSet) else ModeSet.from_field(u)


@dataclass
class Groups:
    xi: np.ndarray
    eta: np.ndarray
    tau: np.ndarray
    value: np.ndarray


def product_groups(u0, v0, use_Q: bool = True) -> Groups:
    """All (z, tau) coefficients of Q(U u0, U v0) (or of the plain product)."""
    u, v = _as_modes(u0), _as_modes(v0)
    if len(u) == 0 or len(v) == 0:
        e = np.zeros(0, np.int64)
        return Groups(e, e, e, np.zeros(0, complex))
    if len(u) * len(v) > MAX_PAIRS:
        raise MemoryError(f"{len(u)} x {len(v)} frequency pairs exceed the {MAX_PAIRS} limit")
    pu = phase_array(u.xi, u.eta)
    pv = phase_array(v.xi, v.eta)
    xi = (u.xi[:, None] + v.xi[None, :]).ravel()
    eta = (u.eta[:, None] + v.eta[None, :]).ravel()
    tau = (pu[:, None] + pv[None, :]).ravel()
    val = (u.coeff[:, None] * v.coeff[None, :]).ravel()
    if use_Q:
        kill = ((u.xi[:, None] == 0) & ((u.xi[:, None] + v.xi[None, :]) == 0)).ravel()
        keep = ~kill
        xi, eta, tau, val = xi[keep], eta[keep], tau[keep], val[keep]
    if len(val) == 0:
        e = np.zeros(0, np.int64)
        return Groups(e, e, e, np.zeros(0, complex))
    order = np.lexsort((tau, eta, xi))
    xi, eta, tau, val = xi[order], eta[order], tau[order], val[order]
    new = np.ones(len(val), bool)
    new[1:] = (xi[1:] != xi[:-1]) | (eta[1:] != eta[:-1]) | (tau[1:] != tau[:-1])
    starts = np.flatnonzero(new)
    sums = np.add.reduceat(val, starts)
    return Groups(xi[starts], eta[starts], tau[starts], sums)


def bilinear_free_norm(u0, v0, use_Q: bool = True) -> float:
    """||Q(U u0, U v0)||_{L^2(T^2 x [0, 2pi))}, exact."""
    g = product_groups(u0, v0, use_Q)
    return float(TIME_NORM * np.sqrt(np.sum(np.abs(g.value) ** 2)))


def xsb_norm_free(u0, s: float, b: float = 0.5) -> float:
    """X_{s,b} norm of the free solution over one time period.

    On a free solution tau = phi(z), so the modulation weight is 1 and b
    drops out: the value is (2 pi)^{3/2} (Σ <z>^{2s} |c|^2)^{1/2}.
    """
    return TIME_NORM * _as_modes(u0).weighted_norm(s)


def lt2_norm_free(u0) -> float:
    """||U u0||_{L^2_{xyt}} = (2 pi)^{1/2} ||u0||_{L^2}."""
    return xsb_norm_free(u0, 0.0)


def product_norm(u0, v0, *, use_Q: bool = True, s: float = 0.0, b: float = 0.0) -> float:
    """(2 pi)^{3/2} (Σ <z>^{2s} <tau - phi(z)>^{2b} |G|^2)^{1/2}."""
    g = product_groups(u0, v0, use_Q)
    if len(g.value) == 0:
        return 0.0
    w = np.ones(len(g.value))
    if s:
        w *= (1.0 + g.xi.astype(float) ** 2 + g.eta.astype(float) ** 2) ** s
    if b:
        mod = (g.tau - phase_array(g.xi, g.eta)).astype(float)
        w *= (1.0 + mod**2) ** b
    return float(TIME_NORM * np.sqrt(np.sum(w * np.abs(g.value) ** 2)))


# -- the quadrature oracle --------------------------------------------------------

def bilinear_free_norm_quadrature(u0: SpectralField, v0: SpectralField, use_Q: bool = True,
                                  time_samples: int | None = None) -> float:
    """Same norm by sampling U u0 * U v0 in space and time (trapezoid rule).

    The product is formed on a grid twice as fine, so it is alias-free, and
    with more than 2 max|tau| = 4 max|phi| time samples the trapezoid rule is
    exact for the resulting trigonometric polynomial.
    """
    g = u0.grid
    big = TorusGrid(2 * g.n_x, 2 * g.n_y)

    def lift(c):
        out = np.zeros(big.shape, complex)
        for i, fx in enumerate(g.freqs_x):
            for j, fy in enumerate(g.freqs_y):
                if c[i, j] != 0:
                    out[fx % big.n_x, fy % big.n_y] = c[i, j]
        return out

    uc, vc = lift(u0.coeff), lift(v0.coeff)
    phi = phase_array(big.xi, big.eta).astype(float)
    support = (uc != 0) | (vc != 0)
    pmax = float(np.abs(phi[support]).max()) if support.any() else 0.0
    T = time_samples or int(4 * pmax) + 8
    if T <= 4 * pmax:
        raise ValueError("need more than 4 max|phi| time samples")
    q0 = big.xi == 0
    scale = big.n_x * big.n_y
    acc = 0.0
    for k in range(T):
        t = 2 * np.pi * k / T
        e = np.exp(-1j * t * phi)
        ut, vt = uc * e, vc * e
        prod = (np.fft.ifft2(ut) * scale) * (np.fft.ifft2(vt) * scale)
        if use_Q:
            prod = prod - (np.fft.ifft2(ut * q0) * scale) * (np.fft.ifft2(vt * q0) * scale)
        acc += float(np.mean(np.abs(prod) ** 2))
    return float(np.sqrt((2 * np.pi) ** 3 * acc / T))


# -- data families ----------------------------------------------------------------

def _disc_points(center, R):
    cx, cy = center
    r = int(math.floor(R))
    x = np.arange(-r, r + 1)
    X, Y = np.meshgrid(x, x, indexing="ij")
    inside = X**2 + Y**2 <= R * R
    return (X[inside] + cx).astype(np.int64), (Y[inside] + cy).astype(np.int64)


def random_in_disc(rng: np.random.Generator, R: float, max_modes: int = 1024) -> tuple[ModeSet, ModeSet]:
    """Complex Gaussian data on B_R (random center) for u0 and on B_R (random center) for v0.

    When the disc holds more than ``max_modes`` points, a uniform random
    subset of that size is used as the support.
    """
    out = []
    for _ in range(2):
        c = tuple(int(v) for v in rng.integers(-2 * int(R), 2 * int(R) + 1, size=2))
        xs, ys = _disc_points(c, R)
        nz = (xs != 0) | (ys != 0)
        xs, ys = xs[nz], ys[nz]
        if len(xs) > max_modes:
            pick = np.sort(rng.choice(len(xs), max_modes, replace=False))
            xs, ys = xs[pick], ys[pick]
        coeff = rng.normal(size=len(xs)) + 1j * rng.normal(size=len(xs))
        out.append(ModeSet(xs, ys, coeff))
    return out[0], out[1]


def resonant_concentrated(rng: np.random.Generator, R: float) -> tuple[ModeSet, ModeSet]:
    """u0 on the largest resonance set {z1 in B_R: phi(z1) + phi(z - z1) = tau}, v0 on its partner.

    z is drawn at random (xi != 0 so the data is not removed by Q), and tau
    is the most popular value of phi(z1) + phi(z - z1) over the disc.
    """
    while True:
        z = rng.integers(-int(R), int(R) + 1, size=2)
        if z[0] != 0:
            break
    xs, ys = _disc_points((0, 0), R)
    nz = ((xs != 0) | (ys != 0)) & ((xs != z[0]) | (ys != z[1]))
    xs, ys = xs[nz], ys[nz]
    tau = phase_array(xs, ys) + phase_array(z[0] - xs, z[1] - ys)
    vals, counts = np.unique(tau, return_counts=True)
    best = vals[np.argmax(counts)]
    sel = tau == best
    u = ModeSet(xs[sel], ys[sel], np.ones(int(sel.sum()), complex))
    v = ModeSet(z[0] - xs[sel], z[1] - ys[sel], np.ones(int(sel.sum()), complex))
    return u, v


def counterexample_line(R: float) -> tuple[ModeSet, ModeSet]:
    """u0 = v0 with coefficient 1 on xi = 0, |eta| <= R."""
    e = np.arange(-int(R), int(R) + 1, dtype=np.int64)
    m = ModeSet(np.zeros_like(e), e, np.ones(len(e), complex))
    return m, m


# -- probes -------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeConfig:
    R_list: tuple = (4, 8, 16, 32, 64, 128)
    data_family: str = "random_in_disc"
    trials_per_R: int = 8
    seed: int = 0
    use_Q: bool = True
    estimate_id: str = "proposition"
    epsilon: float = 0.01
    b: float = 0.49
    max_modes: int = 1024

    def __post_init__(self):
        R = list(self.R_list)
        if len(R) < 2 or any(r < 2 for r in R) or any(b <= a for a, b in zip(R, R[1:])):
            raise ValueError("R_list must be increasing, with at least two entries all >= 2")
        if self.data_family not in FAMILIES:
            raise ValueError(f"data_family must be one of {FAMILIES}")
        if self.estimate_id not in ESTIMATES:
            raise ValueError(f"estimate_id must be one of {ESTIMATES}")
        if self.trials_per_R < 1:
            raise ValueError("trials_per_R must be positive")


def _ratio(cfg: ProbeConfig, u: ModeSet, v: ModeSet) -> float:
    """Left side over right side of the selected estimate (free solutions)."""
    s = GAMMA / 2 + cfg.epsilon
    if cfg.estimate_id == "proposition":
        den = u.l2_norm() * v.l2_norm()
        num = bilinear_free_norm(u, v, cfg.use_Q)
    elif cfg.estimate_id == "bilin_xsb":
        den = xsb_norm_free(u, s) * xsb_norm_free(v, 0.0)
        num = bilinear_free_norm(u, v, cfg.use_Q)
    elif cfg.estimate_id == "dual_bilin_xsb":
        # ||Q(u, v)||_{X_{0,-b}} against ||u||_{L^2_{xyt}} ||v||_{X_{s,b}}
        den = lt2_norm_free(u) * xsb_norm_free(v, s)
        num = product_norm(u, v, use_Q=cfg.use_Q, b=-cfg.b)
    else:
        # ||Q(u, v)||_{L^2_t H^{-s}} against ||u||_{X_{0,b}} ||v||_{X_{0,b}}
        den = xsb_norm_free(u, 0.0) * xsb_norm_free(v, 0.0)
        num = product_norm(u, v, use_Q=cfg.use_Q, s=-s)
    return num / den if den > 0 else 0.0


def _trial(cfg: ProbeConfig, R, k):
    rng = np.random.default_rng([cfg.seed, int(R), k])
    if cfg.data_family == "random_in_disc":
        u, v = random_in_disc(rng, R, cfg.max_modes)
    elif cfg.data_family == "resonant_concentrated":
        u, v = resonant_concentrated(rng, R)
    else:
        u, v = counterexample_line(R)
    return _ratio(cfg, u, v)


def probe(cfg: ProbeConfig, threads: int = 1) -> dict:
    """Max ratio per R over trials, its log-log slope, and a pass flag.

    Pass rules: random and resonant data need slope <= gamma/2 + 0.1; the
    line datum needs slope in [0.45, 0.55] without Q and ratio exactly 0
    with Q.  Trials are seeded by (seed, R, k), so ``threads`` does not
    change the result.
    """
    trials = 1 if cfg.data_family == "counterexample_line" else cfg.trials_per_R
    jobs = [(R, k) for R in cfg.R_list for k in range(trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            ratios = list(ex.map(lambda j: _trial(cfg, *j), jobs))
    else:
        ratios = [_trial(cfg, *j) for j in jobs]
    max_ratios, witness = [], []
    for R in cfg.R_list:
        rs = [(r, k) for (R_, k), r in zip(jobs, ratios) if R_ == R]
        r, k = max(rs)
        max_ratios.append(r)
        witness.append([cfg.seed, int(R), k])
    zero = all(r == 0 for r in max_ratios)
    slope = None if any(r <= 0 for r in max_ratios) else fit_slope(cfg.R_list, max_ratios)
    if cfg.data_family == "counterexample_line":
        ok = zero if cfg.use_Q else (slope is not None and LINE_SLOPE[0] <= slope <= LINE_SLOPE[1])
        rule = "ratio exactly 0" if cfg.use_Q else f"slope in {list(LINE_SLOPE)}"
    else:
        bound = GAMMA / 2 + SLOPE_SLACK
        ok = slope is not None and slope <= bound
        rule = f"slope <= {bound:g}"
    return {
        "estimate_id": cfg.estimate_id,
        "data_family": cfg.data_family,
        "use_Q": cfg.use_Q,
        "R_list": list(cfg.R_list),
        "max_ratios": max_ratios,
        "fitted_slope": slope,
        "witness_seed": witness,
        "trials_per_R": trials,
        "pass_rule": rule,
        "pass": bool(ok),
        "semantics": "maxima over trials are lower bounds for the operator norm",
    }


def probe_bilinear_estimate(cfg: ProbeConfig, threads: int = 1) -> dict:
    if cfg.estimate_id != "proposition":
        raise ValueError("use probe_transfer_estimate for the X-norm estimates")
    return probe(cfg, threads)


def probe_transfer_estimate(cfg: ProbeConfig, threads: int = 1) -> dict:
    if cfg.estimate_id == "proposition":
        raise ValueError("estimate_id must name an X-norm estimate")
    return probe(cfg, threads)


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)

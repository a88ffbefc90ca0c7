"""The NV nonlinearity: physical-space and convolution forms, its symbol and resonance.

The physical-space evaluation of ``N(u) = dx(u Op1 u) - dy(u Op2 u)`` with
``Op1 = (dx^2 - dy^2)/Δ`` and ``Op2 = 2 dx dy/Δ`` is the ground truth; the
convolution route carries the explicit factor ``i`` from the outer
derivatives and is checked against it.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .torus import (
    INT64_MAX,
    SpectralField,
    TorusGrid,
    _check_same_grid,
    phase,
    real_multipliers,
    symmetrize,
)


def _pair(z):
    return int(z[0]), int(z[1])


def symbol_m(z1, z2) -> Fraction:
    """Complete bilinear multiplier m(z1, z2), exact for integer input."""
    (x1, y1), (x2, y2) = _pair(z1), _pair(z2)
    k1 = x1 * x1 + y1 * y1
    k2 = x2 * x2 + y2 * y2
    if k1 == 0 or k2 == 0:
        raise ZeroDivisionError("symbol m is undefined when a factor frequency is (0, 0)")
    xi, eta = x1 + x2, y1 + y2
    return (xi * (Fraction(x1 * x1 - y1 * y1, k1) + Fraction(x2 * x2 - y2 * y2, k2))
            - eta * (Fraction(2 * x1 * y1, k1) + Fraction(2 * x2 * y2, k2)))


def symbol_m_array(x1, y1, x2, y2) -> np.ndarray:
    """float64 evaluation of m on arrays; entries with a zero factor give nan."""
    x1, y1, x2, y2 = (np.asarray(a, dtype=float) for a in (x1, y1, x2, y2))
    with np.errstate(divide="ignore", invalid="ignore"):
        k1 = x1**2 + y1**2
        k2 = x2**2 + y2**2
        return ((x1 + x2) * ((x1**2 - y1**2) / k1 + (x2**2 - y2**2) / k2)
                - (y1 + y2) * (2 * x1 * y1 / k1 + 2 * x2 * y2 / k2))


def resonance_r(z1, z2) -> int:
    """3(xi(xi1 xi2 - eta1 eta2) - eta(xi1 eta2 + xi2 eta1)), exact."""
    (x1, y1), (x2, y2) = _pair(z1), _pair(z2)
    xi, eta = x1 + x2, y1 + y2
    r = 3 * (xi * (x1 * x2 - y1 * y2) - eta * (x1 * y2 + x2 * y1))
    if abs(r) > INT64_MAX:
        raise OverflowError(f"resonance {r} does not fit in 64 bits")
    return r


def resonance_via_phase(z1, z2) -> int:
    (x1, y1), (x2, y2) = _pair(z1), _pair(z2)
    return phase((x1 + x2, y1 + y2)) - phase((x1, y1)) - phase((x2, y2))


def resonance_array(x1, y1, x2, y2) -> np.ndarray:
    x1, y1, x2, y2 = (np.asarray(a, dtype=np.int64) for a in (x1, y1, x2, y2))
    xi, eta = x1 + x2, y1 + y2
    return 3 * (xi * (x1 * x2 - y1 * y2) - eta * (x1 * y2 + x2 * y1))


# -- verifiers -----------------------------------------------------------------

@dataclass
class VerifyReport:
    name: str
    samples: int
    max_deviation: float
    worst_witness: dict
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _witness(z1, z2) -> dict:
    return {"zeta1": [int(z1[0]), int(z1[1])], "zeta2": [int(z2[0]), int(z2[1])]}


def _draw_pairs(rng, n, max_frequency):
    """Random integer pairs z1, z2 != 0 with coordinates in [-max, max]."""
    pts = rng.integers(-max_frequency, max_frequency + 1, size=(n, 4), dtype=np.int64)
    for cols in ((0, 1), (2, 3)):
        zero = (pts[:, cols[0]] == 0) & (pts[:, cols[1]] == 0)
        while zero.any():
            pts[np.flatnonzero(zero), cols[0]] = rng.integers(
                -max_frequency, max_frequency + 1, size=zero.sum())
            zero = (pts[:, cols[0]] == 0) & (pts[:, cols[1]] == 0)
    return pts.T


def verify_m_r_identity(sample_count: int, max_frequency: int, seed: int = 0,
                        tol: float = 1e-12) -> VerifyReport:
    """Check m = (2/3) (z1·z2)/(|z1|^2 |z2|^2) r on random integer pairs.

    Exactness is checked in integers after clearing the common denominator
    ``|z1|^2 |z2|^2``; the reported deviation is the float64 relative gap
    ``|m - rhs| / (1 + |m|)``.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if max_frequency < 1:
        raise ValueError("max_frequency must be >= 1")
    rng = np.random.default_rng(seed)
    x1, y1, x2, y2 = _draw_pairs(rng, sample_count, max_frequency)
    exact_mismatch = _identity_mismatch(x1, y1, x2, y2, max_frequency)

    m = symbol_m_array(x1, y1, x2, y2)
    r = resonance_array(x1, y1, x2, y2).astype(float)
    k1 = (x1**2 + y1**2).astype(float)
    k2 = (x2**2 + y2**2).astype(float)
    rhs = (2.0 / 3.0) * (x1 * x2 + y1 * y2) / (k1 * k2) * r
    dev = np.abs(m - rhs) / (1 + np.abs(m))
    worst = int(np.argmax(dev))
    n_bad = int(exact_mismatch.sum())
    return VerifyReport(
        name="m_r_identity",
        samples=sample_count,
        max_deviation=float(dev[worst]),
        worst_witness=_witness((x1[worst], y1[worst]), (x2[worst], y2[worst])),
        passed=bool(n_bad == 0 and dev[worst] <= tol),
        details={"exact_mismatches": n_bad, "max_frequency": max_frequency, "seed": seed,
                 "tolerance": tol},
    )


def _identity_mismatch(x1, y1, x2, y2, max_frequency):
    """Boolean array: 3·m·|z1|^2|z2|^2 != 2 (z1·z2) r, in exact integers."""
    if max_frequency > 2000:
        # int64 headroom is exhausted; use Python integers
        x1, y1, x2, y2 = (a.astype(object) for a in (x1, y1, x2, y2))
    xi, eta = x1 + x2, y1 + y2
    k1 = x1 * x1 + y1 * y1
    k2 = x2 * x2 + y2 * y2
    m_num = xi * ((x1 * x1 - y1 * y1) * k2 + (x2 * x2 - y2 * y2) * k1) \
        - eta * (2 * x1 * y1 * k2 + 2 * x2 * y2 * k1)
    r = 3 * (xi * (x1 * x2 - y1 * y2) - eta * (x1 * y2 + x2 * y1))
    return np.asarray(3 * m_num != 2 * (x1 * x2 + y1 * y2) * r, dtype=bool)


def bound_7_constant(theta: float) -> float:
    """Sharp constant in |m| <= C |z|^{1-θ} |z1|^{-θ} |z2|^{-θ} |r|^θ.

    From |m| <= (2/3)|r|/(|z1||z2|) and |r| <= 3|z||z1||z2|.
    """
    return (2.0 / 3.0) * 3.0 ** (1.0 - theta)


def verify_bound_7(theta: float, sample_count: int, max_frequency: int, seed: int = 0,
                   constant: float | None = None, include_unit_pair: bool = True) -> VerifyReport:
    """Probe the interpolated resonance bound and its ingredient |r| <= 3|z||z1||z2|.

    ``constant`` is the multiplicative constant allowed in the bound; the
    default is :func:`bound_7_constant`.  ``constant=1`` is the constant-free
    reading, which fails (e.g. at z1 = z2 = (1, 0)).  The smallest constant
    that works on the sample is always reported.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    C = bound_7_constant(theta) if constant is None else float(constant)
    rng = np.random.default_rng(seed)
    x1, y1, x2, y2 = _draw_pairs(rng, sample_count, max_frequency)
    if include_unit_pair:
        # the pair saturating the bound; keeps the constant check honest
        x1, y1, x2, y2 = (np.concatenate([[v], a]) for v, a in zip((1, 0, 1, 0), (x1, y1, x2, y2)))
    xi, eta = x1 + x2, y1 + y2
    keep = (xi != 0) | (eta != 0)
    x1, y1, x2, y2, xi, eta = (a[keep] for a in (x1, y1, x2, y2, xi, eta))

    m = np.abs(symbol_m_array(x1, y1, x2, y2))
    r_int = resonance_array(x1, y1, x2, y2)
    r = np.abs(r_int).astype(float)
    nz = np.hypot(xi, eta)
    n1 = np.hypot(x1, y1)
    n2 = np.hypot(x2, y2)
    # m is evaluated in floating point; where r = 0 it vanishes only up to roundoff
    m = np.where(m <= 1e-12 * (1.0 + nz * n1 * n2), 0.0, m)
    rhs = nz ** (1 - theta) * n1 ** (-theta) * n2 ** (-theta) * r ** theta
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, m / rhs, np.where(m > 0, np.inf, 0.0))
    ingredient = r / (nz * n1 * n2)

    worst = int(np.argmax(ratio))
    violations = np.flatnonzero(ratio > C * (1 + 1e-12))
    zero_r_bad = np.flatnonzero((r_int == 0) & (m > 0))
    ingredient_bad = np.flatnonzero(ingredient > 3 * (1 + 1e-12))
    first = violations[0] if len(violations) else worst
    return VerifyReport(
        name="bound_7",
        samples=int(len(m)),
        max_deviation=float(max(ratio[worst] - C, 0.0)),
        worst_witness=_witness((x1[first], y1[first]), (x2[first], y2[first])),
        passed=bool(len(violations) == 0 and len(zero_r_bad) == 0 and len(ingredient_bad) == 0),
        details={
            "theta": theta,
            "allowed_constant": C,
            "smallest_working_constant": float(ratio[worst]),
            "ingredient_constant": float(ingredient.max()),
            "violations": int(len(violations)),
            "zero_resonance_violations": int(len(zero_r_bad)),
            "ingredient_violations": int(len(ingredient_bad)),
            "max_frequency": max_frequency,
            "seed": seed,
        },
    )


# -- the bilinear operator --------------------------------------------------------

def dealias(u: SpectralField) -> SpectralField:
    """Two-thirds rule: zero every mode with |xi| > n_x/3 or |eta| > n_y/3."""
    g = u.grid
    c = np.where(dealias_mask(g), u.coeff, 0)
    return SpectralField(g, c, u.mean_zero or c[0, 0] == 0, u.real_valued)


def dealias_mask(grid: TorusGrid) -> np.ndarray:
    return (3 * np.abs(grid.xi) <= grid.n_x) & (3 * np.abs(grid.eta) <= grid.n_y)


def _phys(grid, c):
    return np.fft.ifft2(c) * (grid.n_x * grid.n_y)


def _spec(grid, a):
    return np.fft.fft2(a) / (grid.n_x * grid.n_y)


def bilinear_B_coeff(grid: TorusGrid, uc: np.ndarray, vc: np.ndarray) -> np.ndarray:
    """B(u, v) on raw coefficient arrays (no dealiasing, no flags)."""
    op1, op2 = real_multipliers(grid)
    u = _phys(grid, uc)
    v = _phys(grid, vc)
    u1, u2 = _phys(grid, op1 * uc), _phys(grid, op2 * uc)
    v1, v2 = _phys(grid, op1 * vc), _phys(grid, op2 * vc)
    a = u1 * v + u * v1
    b = u2 * v + u * v2
    return 1j * grid.xi * _spec(grid, a) - 1j * grid.eta * _spec(grid, b)


def _finish(grid, c, real):
    if real:
        c[grid.nyquist_mask] = 0
    c[0, 0] = 0
    return SpectralField(grid, c, True, real)


def bilinear_B(u: SpectralField, v: SpectralField, dealias: bool = False) -> SpectralField:
    """Symmetrised bilinear form with N(u) = B(u, u)/2, evaluated in physical space."""
    _check_same_grid(u, v)
    g = u.grid
    uc, vc = u.coeff, v.coeff
    if uc.tobytes() > vc.tobytes():
        # one evaluation order for both argument orders, so B is symmetric bit for bit
        uc, vc = vc, uc
    if dealias:
        mask = dealias_mask(g)
        uc, vc = uc * mask, vc * mask
    c = bilinear_B_coeff(g, uc, vc)
    if dealias:
        c = c * dealias_mask(g)
    return _finish(g, c, u.real_valued and v.real_valued)


def bilinear_B_convolution(u: SpectralField, v: SpectralField, periodic: bool = True) -> SpectralField:
    """Direct double sum ``i Σ m(z1, z2) u(z1) v(z2)`` (O(n^4); small grids).

    With ``periodic`` the sum ``z1 + z2`` is folded back onto the grid, which
    reproduces the physical-space product exactly; otherwise pairs whose sum
    leaves the grid are dropped.
    """
    _check_same_grid(u, v)
    g = u.grid
    c = kernels.conv_weighted(np.ascontiguousarray(u.coeff), np.ascontiguousarray(v.coeff),
                              g.freqs_x, g.freqs_y, kernels.WEIGHT_M, periodic)
    return _finish(g, np.asarray(c), u.real_valued and v.real_valued)


def nonlinearity_N(u: SpectralField, dealias: bool = False) -> SpectralField:
    """N(u) = B(u, u)/2."""
    return bilinear_B(u, u, dealias=dealias).scale(0.5)


def nonlinearity_N_direct(u: SpectralField) -> SpectralField:
    """Unsymmetrised form dx(u Op1 u) - dy(u Op2 u), evaluated as written."""
    g = u.grid
    op1, op2 = real_multipliers(g)
    w = _phys(g, u.coeff)
    a = w * _phys(g, op1 * u.coeff)
    b = w * _phys(g, op2 * u.coeff)
    c = 1j * g.xi * _spec(g, a) - 1j * g.eta * _spec(g, b)
    return _finish(g, c, u.real_valued)


# -- the projector Q ------------------------------------------------------------

def apply_Q(u: SpectralField, v: SpectralField, periodic: bool = False) -> SpectralField:
    """Convolution with the summand factor 1 - δ(xi, 0) δ(xi1, 0).

    The factor depends on the output xi and the first factor's xi1 only.
    """
    _check_same_grid(u, v)
    g = u.grid
    c = kernels.conv_weighted(np.ascontiguousarray(u.coeff), np.ascontiguousarray(v.coeff),
                              g.freqs_x, g.freqs_y, kernels.WEIGHT_Q, periodic)
    c = np.asarray(c)
    return SpectralField(g, c, c[0, 0] == 0, False)


def plain_product(u: SpectralField, v: SpectralField, periodic: bool = False) -> SpectralField:
    _check_same_grid(u, v)
    g = u.grid
    c = np.asarray(kernels.conv_weighted(np.ascontiguousarray(u.coeff), np.ascontiguousarray(v.coeff),
                                         g.freqs_x, g.freqs_y, kernels.WEIGHT_PLAIN, periodic))
    return SpectralField(g, c, c[0, 0] == 0, False)


def project_xi_zero(u: SpectralField) -> SpectralField:
    """Q0: keep only the modes with xi = 0."""
    c = np.where(u.grid.xi == 0, u.coeff, 0)
    return SpectralField(u.grid, c, c[0, 0] == 0, False)


def apply_Q_split(u: SpectralField, v: SpectralField, periodic: bool = False) -> SpectralField:
    """Q(u, v) as ((I - Q0) u) v + (Q0 u) ((I - Q0) v)."""
    q0u = project_xi_zero(u)
    q0v = project_xi_zero(v)
    return plain_product(u - q0u, v, periodic) + plain_product(q0u, v - q0v, periodic)


# -- whole-suite verifiers ------------------------------------------------------

def verify_resonance_exhaustive(bound: int = 50) -> VerifyReport:
    """r(z1, z2) == phi(z1 + z2) - phi(z1) - phi(z2) for every pair with |coords| <= bound."""
    if bound < 0:
        raise ValueError("bound must be >= 0")
    ax = np.arange(-bound, bound + 1, dtype=np.int64)
    x2, y2 = (a.ravel() for a in np.meshgrid(ax, ax, indexing="ij"))
    bad, first = 0, None
    for x1 in ax:
        X1 = np.full((len(ax), 1), x1)
        Y1 = ax[:, None]
        r = resonance_array(X1, Y1, x2[None, :], y2[None, :])
        p = phase_array_int(X1 + x2[None, :], Y1 + y2[None, :]) - phase_array_int(X1, Y1) \
            - phase_array_int(x2[None, :], y2[None, :])
        miss = r != p
        n = int(miss.sum())
        if n and first is None:
            i, j = np.argwhere(miss)[0]
            first = _witness((x1, Y1[i, 0]), (x2[j], y2[j]))
        bad += n
    total = (2 * bound + 1) ** 4
    return VerifyReport(name="resonance_consistency", samples=total, max_deviation=float(bad > 0),
                        worst_witness=first or {}, passed=bad == 0,
                        details={"bound": bound, "mismatches": bad, "arithmetic": "int64"})


def phase_array_int(xi, eta) -> np.ndarray:
    xi, eta = np.asarray(xi, np.int64), np.asarray(eta, np.int64)
    return xi**3 - 3 * xi * eta**2


def random_field(grid: TorusGrid, rng: np.random.Generator, real_valued: bool = False) -> SpectralField:
    """Complex Gaussian coefficients on the whole grid with the mean removed."""
    c = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    c[0, 0] = 0
    if real_valued:
        c = symmetrize_coeff(grid, c)
    return SpectralField(grid, c, True, real_valued)


def symmetrize_coeff(grid, c):
    c = symmetrize(grid, c)
    c[grid.nyquist_mask] = 0
    return c


def verify_dual_path(n_fields: int = 100, n: int = 16, seed: int = 0,
                     tol: float = 1e-12) -> VerifyReport:
    """Physical-space B(u, v) against the direct convolution on random fields, no dealiasing."""
    g = TorusGrid(n, n)
    rng = np.random.default_rng(seed)
    worst, dev = 0, 0.0
    for k in range(n_fields):
        u, v = random_field(g, rng), random_field(g, rng)
        a = bilinear_B(u, v).coeff
        b = bilinear_B_convolution(u, v).coeff
        d = float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))
        if d > dev:
            worst, dev = k, d
    return VerifyReport(name="dual_path", samples=n_fields, max_deviation=dev,
                        worst_witness={"field_index": worst}, passed=dev < tol,
                        details={"grid": [n, n], "seed": seed, "tolerance": tol,
                                 "backend": kernels.BACKEND})

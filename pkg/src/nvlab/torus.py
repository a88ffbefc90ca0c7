"""Fourier representation of fields on the 2π-periodic square torus.

Storage order
-------------
A :class:`SpectralField` keeps its coefficients in an ``(n_x, n_y)`` complex
array in FFT order.  Array index ``i`` along an axis of length ``n`` holds the
integer frequency ``i`` for ``0 <= i <= n/2`` and ``i - n`` for ``i > n/2``, so
the representable set per axis is ``[-n/2 + 1, n/2]`` and the Nyquist row is
labelled ``+n/2``.  :func:`index_of` and :func:`frequency_of` are the only place
this map is written down; everything else goes through :attr:`TorusGrid.xi`
and :attr:`TorusGrid.eta`.

Transform convention::

    u_hat(xi, eta) = (2π)^-2 ∫ exp(-i(x xi + y eta)) u(x, y) dx dy
    u(x, y)        = Σ u_hat(xi, eta) exp(i(x xi + y eta))

so a single mode with coefficient 1 is the function ``exp(i(x xi + y eta))``.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

INT64_MAX = np.iinfo(np.int64).max
# |xi|, |eta| below this keep xi^3 - 3 xi eta^2 inside int64.
PHASE_SAFE_BOUND = 1_300_000

NVF_MAGIC = b"NVF1"


class FrequencyPair(NamedTuple):
    xi: int
    eta: int

    def __add__(self, other):  # type: ignore[override]
        return FrequencyPair(self.xi + other[0], self.eta + other[1])

    def __neg__(self):
        return FrequencyPair(-self.xi, -self.eta)


@dataclass(frozen=True)
class PhaseParams:
    """Mean parameter of the modified phase; ``phi0 = 0`` is the plain phase."""

    phi0: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.phi0):
            raise ValueError("phi0 must be finite")


@dataclass(frozen=True)
class TorusGrid:
    n_x: int
    n_y: int

    def __post_init__(self):
        for n in (self.n_x, self.n_y):
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"mode counts must be even integers >= 8, got {n}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x, self.n_y)

    @cached_property
    def freqs_x(self) -> np.ndarray:
        return _axis_freqs(self.n_x)

    @cached_property
    def freqs_y(self) -> np.ndarray:
        return _axis_freqs(self.n_y)

    @cached_property
    def xi(self) -> np.ndarray:
        """Integer xi of every stored coefficient, shape ``(n_x, n_y)``."""
        return np.broadcast_to(self.freqs_x[:, None], self.shape)

    @cached_property
    def eta(self) -> np.ndarray:
        return np.broadcast_to(self.freqs_y[None, :], self.shape)

    @cached_property
    def k2(self) -> np.ndarray:
        return (self.xi**2 + self.eta**2).astype(np.int64)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on the rows/columns with no conjugate partner on the grid."""
        return (self.xi == self.n_x // 2) | (self.eta == self.n_y // 2)

    @cached_property
    def neg_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Index arrays mapping each stored zeta to the slot holding -zeta."""
        ix = (-np.arange(self.n_x)) % self.n_x
        iy = (-np.arange(self.n_y)) % self.n_y
        return np.ix_(ix, iy)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical sample coordinates (x, y), each of shape ``(n_x, n_y)``."""
        x = 2 * np.pi * np.arange(self.n_x) / self.n_x
        y = 2 * np.pi * np.arange(self.n_y) / self.n_y
        return np.meshgrid(x, y, indexing="ij")

    def contains(self, zeta) -> bool:
        xi, eta = zeta
        return (-self.n_x // 2 < xi <= self.n_x // 2) and (-self.n_y // 2 < eta <= self.n_y // 2)


def _axis_freqs(n: int) -> np.ndarray:
    i = np.arange(n)
    return np.where(i <= n // 2, i, i - n).astype(np.int64)


def index_of(grid: TorusGrid, zeta) -> tuple[int, int]:
    """Array index of frequency ``zeta``; raises if it is not representable."""
    if not grid.contains(zeta):
        raise IndexError(f"frequency {tuple(zeta)} outside grid {grid.shape}")
    return (zeta[0] % grid.n_x, zeta[1] % grid.n_y)


def frequency_of(grid: TorusGrid, index) -> FrequencyPair:
    i, j = index
    return FrequencyPair(int(grid.freqs_x[i]), int(grid.freqs_y[j]))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable set of Fourier coefficients on a :class:`TorusGrid`."""

    grid: TorusGrid
    coeff: np.ndarray = field(repr=False)
    mean_zero: bool = True
    real_valued: bool = False

    def __post_init__(self):
        c = np.array(self.coeff, dtype=np.complex128, copy=True)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        if self.mean_zero and c[0, 0] != 0:
            raise ValueError("mean_zero field with nonzero (0,0) coefficient")
        c.flags.writeable = False
        object.__setattr__(self, "coeff", c)

    @classmethod
    def zeros(cls, grid: TorusGrid, real_valued: bool = True) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, complex), True, real_valued)

    @classmethod
    def from_modes(cls, grid: TorusGrid, modes: dict, real_valued: bool = False) -> "SpectralField":
        """Build a field from ``{(xi, eta): coefficient}``.

        With ``real_valued`` the conjugate partner of every listed mode is
        filled in (a listed partner must already agree).
        """
        c = np.zeros(grid.shape, complex)
        for zeta, value in modes.items():
            c[index_of(grid, zeta)] += value
        if real_valued:
            c = symmetrize(grid, c)
        return cls(grid, c, mean_zero=c[0, 0] == 0, real_valued=real_valued)

    def with_coeff(self, coeff, *, mean_zero=None, real_valued=None) -> "SpectralField":
        mz = self.mean_zero if mean_zero is None else mean_zero
        if mz:
            coeff = np.array(coeff, copy=True)
            coeff[0, 0] = 0
        return SpectralField(self.grid, coeff, mz, self.real_valued if real_valued is None else real_valued)

    def __getitem__(self, zeta) -> complex:
        return complex(self.coeff[index_of(self.grid, zeta)])

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeff + other.coeff,
                             self.mean_zero and other.mean_zero,
                             self.real_valued and other.real_valued)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeff - other.coeff,
                             self.mean_zero and other.mean_zero,
                             self.real_valued and other.real_valued)

    def scale(self, factor) -> "SpectralField":
        real = self.real_valued and np.isreal(factor)
        return SpectralField(self.grid, self.coeff * factor, self.mean_zero, bool(real))

    def l2_norm(self) -> float:
        """``||u||_{L^2(T^2)} = 2π (Σ|u_hat|^2)^{1/2}``."""
        return float(2 * np.pi * np.sqrt(np.sum(np.abs(self.coeff) ** 2)))

    def h1_proxy(self) -> float:
        return float(2 * np.pi * np.sqrt(np.sum((1 + self.grid.k2) * np.abs(self.coeff) ** 2)))

    def realness_defect(self) -> float:
        """max |c(-zeta) - conj c(zeta)| over zeta with a partner on the grid."""
        c = self.coeff
        d = np.abs(c[self.grid.neg_index] - np.conj(c))
        d[self.grid.nyquist_mask] = 0.0
        return float(d.max())

    def project_mean(self) -> tuple["SpectralField", complex]:
        """Return the mean-zero part and the removed (0,0) coefficient."""
        m = complex(self.coeff[0, 0])
        c = np.array(self.coeff)
        c[0, 0] = 0
        return SpectralField(self.grid, c, True, self.real_valued), m


def _check_same_grid(u: SpectralField, v: SpectralField) -> None:
    if u.grid != v.grid:
        raise ValueError(f"grid mismatch: {u.grid.shape} vs {v.grid.shape}")


def symmetrize(grid: TorusGrid, coeff: np.ndarray) -> np.ndarray:
    """Fill conjugate partners so the field is real-valued; Nyquist rows zeroed."""
    c = np.array(coeff, dtype=complex)
    c[grid.nyquist_mask] = 0
    # Hermitian part; entries whose partner is zero are copied across unscaled
    partner = np.conj(c[grid.neg_index])
    lone = (c == 0) | (partner == 0)
    return np.where(lone, c + partner, 0.5 * (c + partner))


# -- phase ------------------------------------------------------------------

def phase(zeta) -> int:
    """``xi^3 - 3 xi eta^2`` in exact integer arithmetic; int64 overflow raises."""
    xi, eta = int(zeta[0]), int(zeta[1])
    value = xi**3 - 3 * xi * eta**2
    if abs(value) > INT64_MAX:
        raise OverflowError(f"phase{(xi, eta)} = {value} does not fit in 64 bits")
    return value


def phase_array(xi, eta) -> np.ndarray:
    """Vectorised :func:`phase` on int64 arrays (bounded inputs only)."""
    xi = np.asarray(xi, dtype=np.int64)
    eta = np.asarray(eta, dtype=np.int64)
    if xi.size and (np.abs(xi).max() > PHASE_SAFE_BOUND or np.abs(eta).max() > PHASE_SAFE_BOUND):
        raise OverflowError("frequencies too large for int64 phase evaluation")
    return xi**3 - 3 * xi * eta**2


def phase_modified(zeta, p: PhaseParams) -> float:
    xi, eta = int(zeta[0]), int(zeta[1])
    if xi == 0 and eta == 0:
        raise ValueError("modified phase is undefined at zeta = (0, 0)")
    return phase(zeta) * (1.0 + 3.0 * p.phi0 / (xi * xi + eta * eta))


def phase_table(grid: TorusGrid, p: PhaseParams | None = None) -> np.ndarray:
    """Phase of every stored mode (modified if ``p.phi0 != 0``); 0 at the origin."""
    phi = phase_array(grid.xi, grid.eta).astype(float)
    if p is not None and p.phi0 != 0:
        k2 = grid.k2.astype(float)
        k2[0, 0] = 1.0
        phi = phi * (1.0 + 3.0 * p.phi0 / k2)
        phi[0, 0] = 0.0
    return phi


# -- multipliers --------------------------------------------------------------

def multiplier_dbar_inv_d(zeta) -> complex:
    """Symbol of dbar^{-1} d: (xi^2 - eta^2 - 2i xi eta)/(xi^2 + eta^2), 0 at the origin."""
    xi, eta = zeta
    k2 = xi * xi + eta * eta
    if k2 == 0:
        return 0j
    return complex(xi * xi - eta * eta, -2 * xi * eta) / k2


def multiplier_d_inv_dbar(zeta) -> complex:
    return multiplier_dbar_inv_d(zeta).conjugate()


def symbol_array(grid: TorusGrid, symbol: Callable) -> np.ndarray:
    """Evaluate a symbol on the grid.

    ``symbol`` may be vectorised (accepting the ``xi``/``eta`` arrays) or
    scalar (accepting a :class:`FrequencyPair`); both are accepted.
    """
    try:
        out = np.asarray(symbol(FrequencyPair(grid.xi, grid.eta)), dtype=complex)
        if out.shape == grid.shape:
            return out
        if out.ndim == 0:
            return np.full(grid.shape, complex(out))
    except (TypeError, ValueError):
        pass
    out = np.empty(grid.shape, complex)
    for i, xi in enumerate(grid.freqs_x):
        for j, eta in enumerate(grid.freqs_y):
            out[i, j] = symbol(FrequencyPair(int(xi), int(eta)))
    return out


def dbar_inv_d_array(grid: TorusGrid) -> np.ndarray:
    xi, eta = grid.xi.astype(float), grid.eta.astype(float)
    k2 = xi**2 + eta**2
    k2[0, 0] = 1.0
    out = (xi**2 - eta**2 - 2j * xi * eta) / k2
    out[0, 0] = 0
    return out


def d_inv_dbar_array(grid: TorusGrid) -> np.ndarray:
    return np.conj(dbar_inv_d_array(grid))


def real_multipliers(grid: TorusGrid) -> tuple[np.ndarray, np.ndarray]:
    """The two real operators (dx^2 - dy^2)/Δ and 2 dx dy/Δ as symbols."""
    xi, eta = grid.xi.astype(float), grid.eta.astype(float)
    k2 = xi**2 + eta**2
    k2[0, 0] = 1.0
    op1 = (xi**2 - eta**2) / k2
    op2 = 2 * xi * eta / k2
    op1[0, 0] = op2[0, 0] = 0.0
    return op1, op2


def apply_multiplier(u: SpectralField, symbol) -> SpectralField:
    """Diagonal action ``c(zeta) -> symbol(zeta) c(zeta)``.

    ``symbol`` is either a callable (see :func:`symbol_array`) or an array
    already laid out on the grid.
    """
    sym = symbol if isinstance(symbol, np.ndarray) else symbol_array(u.grid, symbol)
    out = sym * u.coeff
    return SpectralField(u.grid, out, mean_zero=u.mean_zero or out[0, 0] == 0,
                         real_valued=False)


def free_evolve(u0: SpectralField, t: float, p: PhaseParams = PhaseParams()) -> SpectralField:
    """``exp(-i t phi(D)) u0``; the (0,0) coefficient is carried unchanged.

    For the plain phase, t is first reduced mod 2 pi: phi is integer-valued,
    so this is exact and keeps the 2 pi periodicity free of roundoff.
    """
    phi = phase_table(u0.grid, p)
    if p.phi0 == 0:
        t = math.fmod(t, 2 * math.pi)
    return SpectralField(u0.grid, np.exp(-1j * t * phi) * u0.coeff, u0.mean_zero, u0.real_valued)


# -- transforms ---------------------------------------------------------------

def to_physical(u: SpectralField) -> np.ndarray:
    n = u.grid.n_x * u.grid.n_y
    return np.fft.ifft2(u.coeff) * n


def from_physical(grid: TorusGrid, samples, *, mean_zero=False, real_valued=None) -> SpectralField:
    samples = np.asarray(samples)
    if samples.shape != grid.shape:
        raise ValueError(f"sample array shape {samples.shape} does not match grid {grid.shape}")
    c = np.fft.fft2(samples) / (grid.n_x * grid.n_y)
    if real_valued is None:
        real_valued = bool(np.isrealobj(samples) or np.all(samples.imag == 0))
    if real_valued:
        c[grid.nyquist_mask] = 0
    if mean_zero:
        c[0, 0] = 0
    return SpectralField(grid, c, mean_zero=mean_zero or c[0, 0] == 0, real_valued=real_valued)


def l2_quadrature(samples: np.ndarray) -> float:
    """Rectangle-rule ``∫_{T^2} |u|^2`` (exact for trigonometric polynomials on the grid)."""
    return float((2 * np.pi) ** 2 * np.mean(np.abs(samples) ** 2))


# -- NVF1 snapshots -------------------------------------------------------------

def write_nvf(path, u: SpectralField) -> None:
    """Write ``u`` in the NVF1 layout (coefficients in the documented storage order)."""
    flag = (1 if u.mean_zero else 0) | (2 if u.real_valued else 0)
    header = NVF_MAGIC + struct.pack("<IIB", u.grid.n_x, u.grid.n_y, flag)
    body = np.ascontiguousarray(u.coeff).astype("<c16").tobytes()
    Path(path).write_bytes(header + body)


def read_nvf(path) -> SpectralField:
    data = Path(path).read_bytes()
    if data[:4] != NVF_MAGIC:
        raise ValueError(f"{path}: not an NVF1 snapshot")
    n_x, n_y, flag = struct.unpack("<IIB", data[4:13])
    grid = TorusGrid(n_x, n_y)
    expected = 13 + 16 * n_x * n_y
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    coeff = np.frombuffer(data[13:], dtype="<c16").reshape(n_x, n_y)
    return SpectralField(grid, coeff, bool(flag & 1), bool(flag & 2))

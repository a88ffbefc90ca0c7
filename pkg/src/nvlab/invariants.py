"""Conserved quantities, the scaling harness and the Miura/mNV cross-check.

Wirtinger derivatives act as multipliers d <-> (i xi + eta)/2 and
dbar <-> (i xi - eta)/2, so d^3 + dbar^3 <-> -i phi / 4.

Time convention shared with the solver: both NV and mNV are run in the
rescaled time s = -t/4 in which the linear group is exp(-i s phi(D)).  With
w = 12 u, the solver equation dw/ds = -i phi w + N(w) is NV; the mNV flow
in the same variable is dv/ds = -4 mnv_rhs(v), and 12 M(v(s)) then solves
the solver equation (with the conserved mean of |v|^2 carried by the
modified phase).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import DiagnosticsSeries, l2_pairing, mean_functional
from .evolution import ORDER, ExpStepper, SimConfig, nv_stepper, simulate
from .nonlinearity import dealias_mask
from .torus import (
    PhaseParams, SpectralField, TorusGrid, d_inv_dbar_array, dbar_inv_d_array, from_physical,
    index_of, phase_array, phase_table,
)

__all__ = [
    "DiagnosticsSeries", "mean_functional", "l2_pairing", "scaling_transform", "hminus1_sum",
    "scaling_symmetry_check", "scaling_overflow", "phase_homogeneity_defect", "miura_map",
    "check_dbar_reality", "mnv_rhs", "miura_consistency_check",
    "admissible_datum", "mean_phase_params", "CheckReport", "d_symbol", "dbar_symbol",
]

NV_SCALE = 12.0  # w = 12 u in the solver variable


@dataclass
class CheckReport:
    check_name: str
    parameters: dict
    error_series: list = field(default_factory=list)
    refinement_orders: list = field(default_factory=list)
    passed: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "parameters": self.parameters,
            "error_series": [[float(t), float(e)] for t, e in self.error_series],
            "refinement_orders": [float(x) for x in self.refinement_orders],
            "pass": bool(self.passed),
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def d_symbol(grid: TorusGrid) -> np.ndarray:
    return 0.5 * (1j * grid.xi + grid.eta)


def dbar_symbol(grid: TorusGrid) -> np.ndarray:
    return 0.5 * (1j * grid.xi - grid.eta)


def mean_phase_params(mean_w: complex) -> PhaseParams:
    """Phase parameters for a solver field whose mean coefficient is ``mean_w``.

    Splitting w = c + w', the term c (dx Op1 - dy Op2) w' has symbol
    i c phi/|z|^2, which turns phi into phi (1 - c/|z|^2), i.e. phi0 = -c/3.
    """
    c = complex(mean_w)
    if abs(c.imag) > 1e-14 * max(1.0, abs(c)):
        raise ValueError("a complex mean does not give a real modified phase")
    return PhaseParams(phi0=-c.real / 3.0)


# -- scaling -----------------------------------------------------------------------

def scaling_transform(u: SpectralField, lam: int, truncate: bool = False) -> SpectralField:
    """u_lam(x, y) = lam^2 u(lam x, lam y): coefficient lam^2 c(z) moves to lam z.

    Modes whose image leaves the grid raise ValueError, or are dropped when
    ``truncate`` is set (see :func:`scaling_overflow`).
    """
    if int(lam) != lam or lam < 1:
        raise ValueError("lambda must be a positive integer")
    lam = int(lam)
    g = u.grid
    c = u.coeff
    out = np.zeros_like(c)
    nz = np.argwhere(c != 0)
    for i, j in nz:
        xi, eta = int(g.freqs_x[i]) * lam, int(g.freqs_y[j]) * lam
        limit_x = g.n_x // 2 - (1 if u.real_valued else 0)
        limit_y = g.n_y // 2 - (1 if u.real_valued else 0)
        if not (-g.n_x // 2 < xi <= limit_x and -g.n_y // 2 < eta <= limit_y):
            if truncate:
                continue
            raise ValueError(f"dilated support leaves the grid: mode {(xi, eta)}")
        out[index_of(g, (xi, eta))] = lam * lam * c[i, j]
    return SpectralField(g, out, u.mean_zero, u.real_valued)


def scaling_overflow(u: SpectralField, lam: int) -> float:
    """L2 norm of the part of u whose dilation by lam leaves the grid."""
    kept = scaling_transform(u, lam, truncate=True).l2_norm() / (lam * lam)
    return float(np.sqrt(max(u.l2_norm() ** 2 - kept**2, 0.0)))


def hminus1_sum(u: SpectralField) -> float:
    """(2 pi)^2 Σ_{z != 0} |z|^-2 |c(z)|^2.

    Under the integer dilation this grows by lam^2: the torus itself is not
    rescaled, so the critical H^-1 quantity is invariant per 2 pi/lam cell.
    """
    k2 = u.grid.k2.astype(float)
    k2[0, 0] = np.inf
    return float((2 * np.pi) ** 2 * np.sum(np.abs(u.coeff) ** 2 / k2))


def scaling_symmetry_check(u0: SpectralField, lam: int, t: float, cfg: SimConfig,
                           refine: bool = True, tol: float = 1e-6) -> CheckReport:
    """Compare v(t) from the dilated datum with the dilation of u(lam^3 t).

    Both runs use cfg.dt.  With ``refine`` the check is repeated at dt/2 and
    the observed order is reported; d must fall below ``tol`` and (when the
    discrepancy is above roundoff) shrink under refinement.
    """
    def one(dt):
        cu = replace(cfg, t_end=lam**3 * t, dt=dt)
        cv = replace(cfg, t_end=t, dt=dt)
        u_end = simulate(u0, cu).final
        v_end = simulate(scaling_transform(u0, lam), cv).final
        lost.append(scaling_overflow(u_end, lam))
        diff = v_end - scaling_transform(u_end, lam, truncate=True)
        nv = v_end.l2_norm()
        return diff.l2_norm() / nv if nv > 0 else diff.l2_norm()

    lost: list = []

    ds = [one(cfg.dt)]
    if refine and lam != 1:
        ds.append(one(cfg.dt / 2))
    orders = []
    floor = 1e-13
    if len(ds) == 2 and ds[1] > 0 and ds[0] > floor:
        orders.append(math.log2(ds[0] / ds[1]))
    shrinks = len(ds) < 2 or ds[0] <= floor or ds[1] <= ds[0]
    return CheckReport(
        check_name="scaling_symmetry",
        parameters={"lambda": lam, "t": t, "dt": cfg.dt, "grid": [cfg.grid.n_x, cfg.grid.n_y],
                    "scheme": cfg.scheme, "linear_only": cfg.linear_only},
        error_series=[(t, d) for d in ds],
        refinement_orders=orders,
        passed=bool(ds[0] < tol and shrinks),
        details={"d": ds[0], "d_refined": ds[1] if len(ds) > 1 else None,
                 "truncated_l2": lost},
    )


def phase_homogeneity_defect(bound: int, lam_max: int = 4) -> int:
    """max |phi(lam z) - lam^3 phi(z)| over |coords| <= bound, 1 <= lam <= lam_max."""
    r = np.arange(-bound, bound + 1, dtype=np.int64)
    X, Y = np.meshgrid(r, r, indexing="ij")
    worst = 0
    for lam in range(1, lam_max + 1):
        d = phase_array(lam * X, lam * Y) - lam**3 * phase_array(X, Y)
        worst = max(worst, int(np.abs(d).max()))
    return worst


# -- Miura map and mNV ---------------------------------------------------------

def _phys(grid, c):
    return np.fft.ifft2(c) * (grid.n_x * grid.n_y)


def _spec(grid, a):
    return np.fft.fft2(a) / (grid.n_x * grid.n_y)


def miura_map(v: SpectralField) -> SpectralField:
    """M(v) = |v|^2 - i dv.  The mean is generally nonzero and is kept."""
    g = v.grid
    vp = _phys(g, v.coeff)
    dv = _phys(g, d_symbol(g) * v.coeff)
    c = _spec(g, np.abs(vp) ** 2 - 1j * dv)
    return SpectralField(g, c, mean_zero=False, real_valued=False)


def check_dbar_reality(v: SpectralField) -> float:
    """max |Im dv| on the grid; the admissibility constraint is dv real."""
    g = v.grid
    return float(np.abs(_phys(g, d_symbol(g) * v.coeff).imag).max())


def admissible_datum(grid: TorusGrid, eps: float, k: int = 1, l: int = 1) -> SpectralField:
    """v = 2 dbar h with h = eps sin(k x) cos(l y) real, so dv = Δh/2 is real.

    k = l = 1 gives eps (cos x cos y - i sin x sin y).
    """
    x = 2 * np.pi * np.arange(grid.n_x) / grid.n_x
    y = 2 * np.pi * np.arange(grid.n_y) / grid.n_y
    X, Y = np.meshgrid(x, y, indexing="ij")
    h = eps * np.sin(k * X) * np.cos(l * Y)
    hc = from_physical(grid, h, real_valued=True).coeff
    c = 2 * dbar_symbol(grid) * hc
    c[0, 0] = 0
    return SpectralField(grid, c, mean_zero=True, real_valued=False)


def _mnv_nonlinear(grid: TorusGrid, form: str):
    """Coefficient map of the bracket [...] multiplying -3 in mNV."""
    if form not in ("corrected", "displayed"):
        raise ValueError("form must be 'corrected' or 'displayed'")
    A = dbar_inv_d_array(grid)   # dbar^{-1} d, zero at the origin
    B = d_inv_dbar_array(grid)   # d^{-1} dbar
    D = d_symbol(grid)
    Db = dbar_symbol(grid)

    def bracket(c):
        v = _phys(grid, c)
        vb = np.conj(v)
        m2 = _spec(grid, np.abs(v) ** 2)   # A and B drop its mean
        t1 = D * _spec(grid, v * _phys(grid, A * m2))
        t2 = Db * _spec(grid, v * _phys(grid, B * m2))
        if form == "corrected":
            dvb = _phys(grid, D * _spec(grid, vb))
            dbvb = _phys(grid, Db * _spec(grid, vb))
            t3 = -_spec(grid, v * _phys(grid, B * _spec(grid, v * dbvb)))
            t4 = -_spec(grid, v * _phys(grid, A * _spec(grid, v * dvb)))
        else:
            dv = _phys(grid, D * c)
            dbv = _phys(grid, Db * c)
            t3 = _spec(grid, v * _phys(grid, B * _spec(grid, vb * dbv)))
            t4 = _spec(grid, v * _phys(grid, A * _spec(grid, vb * dv)))
        return t1 + t2 + t3 + t4

    return bracket


def mnv_rhs(v: SpectralField, form: str = "corrected") -> SpectralField:
    """Right side of dv/dt = -(d^3 + dbar^3) v - 3 [...].

    ``corrected`` uses -v d^{-1}dbar(v dbar vbar) - v dbar^{-1}d(v d vbar) for
    the last two terms, which is the form that M(v) maps onto NV.  The
    ``displayed`` form (+v d^{-1}dbar(vbar dbar v) + v dbar^{-1}d(vbar d v)) is
    kept for the record; it fails the Miura test at cubic order.
    """
    g = v.grid
    lin = -(d_symbol(g) ** 3 + dbar_symbol(g) ** 3) * v.coeff
    c = lin - 3 * _mnv_nonlinear(g, form)(v.coeff)
    return SpectralField(g, c, mean_zero=False, real_valued=False)


def mnv_stepper(grid: TorusGrid, *, form: str = "corrected", use_dealias: bool = True) -> ExpStepper:
    """Stepper for dv/ds = -4 mnv_rhs(v); its linear symbol is -i phi."""
    bracket = _mnv_nonlinear(grid, form)
    mask = dealias_mask(grid) if use_dealias else None

    def F(c):
        if mask is not None:
            c = c * mask
        out = 12.0 * bracket(c)
        if mask is not None:
            out = out * mask
        return out

    return ExpStepper(-1j * phase_table(grid), F)


def _run(stepper, scheme, c, t_end, dt, sample_every):
    n = int(round(t_end / dt))
    if not math.isclose(n * dt, t_end, rel_tol=1e-12):
        raise ValueError("t_end must be an integer multiple of dt")
    out = [(0.0, c)]
    for k in range(1, n + 1):
        c = stepper.step(scheme, c, dt)
        if not np.all(np.isfinite(c)):
            raise FloatingPointError("non-finite state in the Miura check")
        if k % sample_every == 0 or k == n:
            out.append((k * dt, c))
    return out


def miura_consistency_check(v0: SpectralField, t_end: float, cfg: SimConfig, *,
                            levels: int = 3, form: str = "corrected",
                            order_tol: float = 0.6) -> CheckReport:
    """Evolve v under mNV and u under NV from M(v0); compare M(v(t)) with u(t).

    Runs at dt, dt/2, ..., dt/2^(levels-1).  The error at t_end must shrink at
    the scheme's order, within ``order_tol`` on log2 of each ratio.
    """
    g = v0.grid
    admiss = check_dbar_reality(v0)
    m0 = miura_map(v0)
    mean_c = complex(m0.coeff[0, 0])
    w0 = NV_SCALE * m0.coeff
    c_w = NV_SCALE * mean_c
    params = {
        "t_end": t_end, "dt": cfg.dt, "levels": levels, "scheme": cfg.scheme, "form": form,
        "grid": [g.n_x, g.n_y], "time_convention": "s = -t/4, w = 12 u; mNV as dv/ds = -4 mnv_rhs(v)",
    }
    if np.abs(v0.coeff).max() == 0:
        return CheckReport("miura_consistency", params, [(t_end, 0.0)], [], True,
                           {"discarded_mean": 0.0, "dbar_reality_t0": admiss})
    u0c = w0.copy()
    u0c[0, 0] = 0
    if np.abs(u0c).max() == 0:
        return CheckReport("miura_consistency", params, [], [], False,
                           {"reason": "M(v0) is constant; nothing left after mean projection",
                            "discarded_mean": [mean_c.real, mean_c.imag]})
    nv_st = nv_stepper(g, mean_phase_params(c_w), use_dealias=cfg.dealias, real=False)
    mnv_st = mnv_stepper(g, form=form, use_dealias=cfg.dealias)
    errors, series, reality = [], [], []
    for lev in range(levels):
        dt = cfg.dt / 2**lev
        every = max(1, int(round(t_end / dt)) // 10)
        vs = _run(mnv_st, cfg.scheme, v0.coeff, t_end, dt, every)
        us = _run(nv_st, cfg.scheme, u0c, t_end, dt, every)
        ser = []
        for (t, vc), (_, uc) in zip(vs, us):
            mv = NV_SCALE * miura_map(SpectralField(g, vc, False, False)).coeff
            mv[0, 0] -= c_w
            e = np.linalg.norm(mv - uc) / max(np.linalg.norm(uc), np.finfo(float).tiny)
            ser.append((t, float(e)))
        series.append(ser)
        errors.append(ser[-1][1])
        reality.append(check_dbar_reality(SpectralField(g, vs[-1][1], False, False)))
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(levels - 1)
              if errors[i + 1] > 0 and errors[i] > 0]
    p = ORDER[cfg.scheme]
    ok = len(orders) == levels - 1 and all(abs(o - p) <= order_tol for o in orders)
    return CheckReport(
        "miura_consistency", params,
        error_series=series[0],
        refinement_orders=orders,
        passed=bool(ok),
        details={
            "final_errors": errors,
            "expected_order": p,
            "discarded_mean": [mean_c.real, mean_c.imag],
            "dbar_reality_t0": admiss,
            "dbar_reality_t_end": reality,
            "refined_error_series": series[1:],
        },
    )

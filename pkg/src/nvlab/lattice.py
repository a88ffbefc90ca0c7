"""Integer points on the quadratic and cubic curve families, Σ1 and Σ3.

Curves:
  hyperbola  a(x^2 - y^2) + 2bxy = c          (c != 0)
  cubic      (x + a)(x^2 - y^2) = 2(y + b)xy
  K-curve    tau = phi(z1) + phi(z - z1), counted over integer z1

Window semantics: ``Square(center, side)`` is the closed max-norm ball of
radius side/2, so side 21 around the origin is [-10, 10]^2.  ``Disc`` is the
closed Euclidean ball; its center may be a half-integer and is stored doubled.
All counting happens over integer points; the half-integer (x, y) of the
K-substitution is never enumerated.
"""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from . import kernels

WITNESS_CAP = 100
SLOPE = 1 / math.sqrt(3)
_GUARD = 2**62

SWEEP_COLUMNS = ("variant", "a", "b", "c_or_tau", "window_kind", "window_size", "count",
                 "degenerate", "elapsed_ns")


# -- specs and windows ------------------------------------------------------------

@dataclass(frozen=True)
class Square:
    center: tuple = (0, 0)
    side: int = 1

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("square side must be >= 1")

    def bounds(self) -> tuple[int, int, int, int]:
        cx, cy = (Fraction(c) for c in self.center)
        h = Fraction(self.side, 2)
        return (math.ceil(cx - h), math.floor(cx + h), math.ceil(cy - h), math.floor(cy + h))

    kind = "square"

    @property
    def size(self):
        return self.side


@dataclass(frozen=True)
class Disc:
    """Closed disc; ``center`` entries may be halves (e.g. Fraction(3, 2) or 1.5)."""

    center: tuple = (0, 0)
    radius: float = 1.0

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("disc radius must be >= 1")
        for c in self.center:
            if (2 * Fraction(c)).denominator != 1:
                raise ValueError("disc centers must be integers or half-integers")

    @property
    def doubled_center(self) -> tuple[int, int]:
        return tuple(int(2 * Fraction(c)) for c in self.center)

    def bounds(self) -> tuple[int, int, int, int]:
        cx, cy = (Fraction(c) for c in self.center)
        r = Fraction(self.radius)
        return (math.floor(cx - r), math.ceil(cx + r), math.floor(cy - r), math.ceil(cy + r))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        cx2, cy2 = self.doubled_center
        d = (2 * pts[:, 0] - cx2) ** 2 + (2 * pts[:, 1] - cy2) ** 2
        return d.astype(float) <= (2.0 * self.radius) ** 2

    kind = "disc"

    @property
    def size(self):
        return self.radius


Window = Union[Square, Disc]


@dataclass(frozen=True)
class Hyperbola:
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.c == 0:
            raise ValueError("hyperbola family requires c != 0")
        if self.a == 0 and self.b == 0:
            raise ValueError("hyperbola family requires (a, b) != (0, 0)")

    variant = "hyperbola"


@dataclass(frozen=True)
class Cubic:
    a: int
    b: int

    variant = "cubic"


@dataclass(frozen=True)
class KCurve:
    xi: int
    eta: int
    tau: int

    variant = "kcurve"


@dataclass(frozen=True)
class CurveSpec:
    curve: Union[Hyperbola, Cubic, KCurve]
    window: Window


@dataclass
class CountReport:
    spec: CurveSpec
    count: int
    degenerate: bool = False
    degeneracy_kind: str | None = None
    witnesses: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        cv, w = self.spec.curve, self.spec.window
        return {
            "variant": cv.variant,
            "params": {k: int(v) for k, v in vars(cv).items()},
            "window": {"kind": w.kind, "center": [str(Fraction(c)) for c in w.center],
                       "size": w.size},
            "count": int(self.count),
            "degenerate": self.degenerate,
            "degeneracy_kind": self.degeneracy_kind,
            "witnesses": [[int(x), int(y)] for x, y in self.witnesses],
            "details": self.details,
        }


def _guard(*values: int) -> None:
    if max(abs(int(v)) for v in values) >= _GUARD:
        raise OverflowError("intermediate values would not fit in 64-bit integers")


def _witness_list(pts) -> list:
    return [(int(x), int(y)) for x, y in np.asarray(pts)[:WITNESS_CAP]]


def _span(window: Window) -> int:
    x0, x1, y0, y1 = window.bounds()
    return max(abs(x0), abs(x1), abs(y0), abs(y1), 1)


# -- family (i) ------------------------------------------------------------------

def _hyperbola_guard(h: Hyperbola, window: Window) -> None:
    s = _span(window)
    _guard((h.a * h.a + h.b * h.b) * s * s + abs(h.a * h.c), 2 * abs(h.b) * s * s + abs(h.c))


def _count_rect(counter, window: Window, params: tuple, extra: tuple = ()):
    x0, x1, y0, y1 = window.bounds()
    if isinstance(window, Square):
        n, pts = counter(*params, x0, x1, y0, y1, *extra, WITNESS_CAP)
        return int(n), np.asarray(pts)
    # disc: collect every point of the bounding box, then filter
    n, pts = counter(*params, x0, x1, y0, y1, *extra, 2**31 - 1)
    pts = np.asarray(pts).reshape(-1, 2)
    keep = pts[window.contains(pts)] if len(pts) else pts
    return int(len(keep)), keep


def count_hyperbola(spec: Hyperbola, window: Window, *, brute: bool = False) -> CountReport:
    """Exact count of a(x^2 - y^2) + 2bxy = c in the window.

    Sweeps x and solves for y with an exact perfect-square test, O(width);
    ``brute`` switches to the O(width^2) scan used as the oracle.
    """
    if spec.c == 0:
        raise ValueError("c = 0 is excluded from the family")
    _hyperbola_guard(spec, window)
    fn = kernels.hyperbola_count_brute if brute else kernels.hyperbola_count
    n, pts = _count_rect(fn, window, (spec.a, spec.b, spec.c))
    return CountReport(CurveSpec(spec, window), n, False, None, _witness_list(pts),
                       {"algorithm": "brute" if brute else "sweep"})


# -- family (ii) -------------------------------------------------------------------

def _cubic_branches(a: int, b: int, x: float) -> tuple[float, float]:
    """The two roots y_+(x), y_-(x) of (3x + a) y^2 + 2bx y - (x + a) x^2 = 0."""
    A = 3 * x + a
    q = b * b + A * (x + a)
    r = abs(x) * math.sqrt(q)
    return ((-b * x + r) / A, (-b * x - r) / A)


def classify_cubic(spec: Cubic) -> dict:
    """Solution families of (x + a)(x^2 - y^2) = 2(y + b)xy.

    * line x = 0 with arbitrary y: present iff a = 0.
    * isolated point on 3x + a = 0, y = (x + a)x/(2b) = -a^2/(9b) (b != 0); its
      substitution residual is reported exactly.
    * branches y_pm(x), with y_pm/x -> ±1/sqrt(3) checked numerically at large x.
    """
    a, b = spec.a, spec.b
    families = []
    if a == 0:
        families.append({"kind": "line", "x": 0})
    else:
        families.append({"kind": "point", "x": 0, "y": 0})
    iso = None
    if a != 0 and b != 0:
        x = Fraction(-a, 3)
        y = Fraction(-a * a, 9 * b)
        residual = (x + a) * (x * x - y * y) - 2 * (y + b) * x * y
        iso = {"kind": "isolated_point", "x": str(x), "y": str(y),
               "residual": str(residual), "on_curve": residual == 0,
               "integral": x.denominator == 1 and y.denominator == 1}
        families.append(iso)
    xs = 1e6 * max(1, abs(a), abs(b))
    slopes = {}
    for sign in (1, -1):
        yp, ym = _cubic_branches(a, b, sign * xs)
        slopes[sign] = (yp / (sign * xs), ym / (sign * xs))
    dev = max(abs(abs(s) - SLOPE) for pair in slopes.values() for s in pair)
    families.append({"kind": "branches", "asymptotic_slope": [SLOPE, -SLOPE],
                     "sample_x": xs, "max_slope_deviation": dev})
    return {
        "a": a, "b": b,
        "families": families,
        "has_line_family": a == 0,
        "rational_slope_branch": False,
        "slope_check_passed": dev < 1e-6,
        "isolated_point": iso,
    }


def count_cubic(spec: Cubic, window: Window, exclude_line: bool = False, *,
                brute: bool = False) -> CountReport:
    """Exact count on the cubic, optionally dropping the x = 0 line family."""
    s = _span(window)
    a, b = spec.a, spec.b
    _guard((abs(a) + s) * s * s * 3, b * b + (3 * s + abs(a)) * (s + abs(a)),
           (abs(b) + s) * s * s * 2)
    fn = kernels.cubic_count_brute if brute else kernels.cubic_count
    n, pts = _count_rect(fn, window, (a, b), (bool(exclude_line),))
    kind = None
    if a == 0:
        kind = "excluded_by_projector" if exclude_line else "line_in_family"
    return CountReport(CurveSpec(spec, window), n, a == 0, kind, _witness_list(pts),
                       {"algorithm": "brute" if brute else "sweep", "exclude_line": bool(exclude_line)})


# -- Σ1 and Σ3 ---------------------------------------------------------------------

def branch_condition(xi: int, eta: int, tau: int) -> dict:
    """Exact values of tau - xi^3/4 + k xi eta^2 for the displayed k = 7/4 and the derived 3/4."""
    base = Fraction(tau) - Fraction(xi**3, 4)
    displayed = base + Fraction(7, 4) * xi * eta * eta
    derived = base + Fraction(3, 4) * xi * eta * eta
    return {"displayed_7_4": str(displayed), "displayed_nonzero": displayed != 0,
            "derived_3_4": str(derived), "derived_nonzero": derived != 0}


def sigma1_count(xi: int, eta: int, tau: int, disc: Disc) -> CountReport:
    """Count integer z1 in the disc with phi(z1) + phi(z - z1) = tau (direct enumeration)."""
    cx2, cy2 = disc.doubled_center
    s = max(abs(Fraction(c)) for c in disc.center) + Fraction(disc.radius) + abs(xi) + abs(eta) + 2
    _guard(4 * int(s) ** 3 + abs(tau))
    n, pts = kernels.disc_phase_count(xi, eta, tau, cx2, cy2, float(disc.radius), WITNESS_CAP)
    rep = CountReport(CurveSpec(KCurve(xi, eta, tau), disc), int(n), False, None, _witness_list(pts))
    rep.details = {"branch_condition": branch_condition(xi, eta, tau), "algorithm": "disc_enumeration"}
    return rep


def sigma1_brute(xi: int, eta: int, tau: int, disc: Disc) -> int:
    """Pure-Python big-integer oracle for :func:`sigma1_count`."""
    x0, x1, y0, y1 = disc.bounds()
    cx2, cy2 = disc.doubled_center
    r2 = Fraction(2 * Fraction(disc.radius)) ** 2
    n = 0
    for p in range(x0, x1 + 1):
        for q in range(y0, y1 + 1):
            if (2 * p - cx2) ** 2 + (2 * q - cy2) ** 2 > r2:
                continue
            p2, q2 = xi - p, eta - q
            if p**3 - 3 * p * q * q + p2**3 - 3 * p2 * q2 * q2 == tau:
                n += 1
    return n


def sigma3_count(xi1: int, eta1: int, square: Square, *, brute: bool = False) -> CountReport:
    """Σ3 over (xi, eta) in the square, via the cubic with (a, b) = (2 xi1, 2 eta1).

    (x, y) = (xi - 2 xi1, eta - 2 eta1); the Kronecker factor removes xi = 0
    when xi1 = 0, which is exactly the line family x = 0 of the shifted cubic.
    """
    x0, x1, y0, y1 = square.bounds()
    if brute:
        n, pts = kernels.sigma3_brute(xi1, eta1, x0, x1, y0, y1, WITNESS_CAP)
        wit = _witness_list(pts)
    else:
        a, b = 2 * xi1, 2 * eta1
        sx0, sx1, sy0, sy1 = x0 - a, x1 - a, y0 - b, y1 - b
        s = max(abs(sx0), abs(sx1), abs(sy0), abs(sy1), 1)
        _guard((abs(a) + s) * s * s * 3, (abs(b) + s) * s * s * 2)
        n, pts = kernels.cubic_count(a, b, sx0, sx1, sy0, sy1, xi1 == 0, WITNESS_CAP)
        wit = [(x + a, y + b) for x, y in _witness_list(pts)]
    kind = "excluded_by_projector" if xi1 == 0 else None
    rep = CountReport(CurveSpec(Cubic(2 * xi1, 2 * eta1), square), int(n), xi1 == 0, kind, wit)
    rep.details = {"coordinates": "(xi, eta)", "algorithm": "brute" if brute else "sweep"}
    return rep


# -- exponent fitting -------------------------------------------------------------

def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    lx = np.log(np.asarray(xs, float))
    ly = np.log(np.maximum(np.asarray(ys, float), 1e-300))
    return float(np.polyfit(lx, ly, 1)[0])


def hyperbola_sampler(rng: np.random.Generator, N: int) -> tuple[Hyperbola | None, int]:
    """Uniform integer a, b, c in [-N, N]; degenerate draws are redrawn and counted."""
    redraws = 0
    while True:
        a, b, c = (int(v) for v in rng.integers(-N, N + 1, size=3))
        if c != 0 and (a, b) != (0, 0):
            return Hyperbola(a, b, c), redraws
        redraws += 1


def constant_sampler(rng, N):
    return Hyperbola(1, 0, 1), 0


def fit_exponent(family_sampler: Callable, N_list: Sequence[int], samples_per_N: int, *,
                 seed: int = 0, threads: int = 1, family: str = "hyperbola") -> dict:
    """Max count over random curves in Square(0, N) for each N, and the log-log slope.

    Parameters for every N are drawn up front from one seeded generator, so
    the result does not depend on ``threads``.
    """
    N_list = list(N_list)
    if len(N_list) < 2:
        raise ValueError("N_list needs at least two entries")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be increasing")
    rng = np.random.default_rng(seed)
    draws, redraws = [], 0
    for N in N_list:
        for _ in range(samples_per_N):
            spec, r = family_sampler(rng, N)
            redraws += r
            draws.append((N, spec))

    def work(item):
        N, spec = item
        return count_hyperbola(spec, Square((0, 0), N)).count

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            counts = list(ex.map(work, draws))
    else:
        counts = [work(d) for d in draws]
    maxima, worst = [], None
    for N in N_list:
        best = -1
        for (n_, spec), c in zip(draws, counts):
            if n_ == N and c > best:
                best, arg = c, spec
        maxima.append(best)
        if worst is None or best > worst["count"]:
            worst = {"N": N, "a": arg.a, "b": arg.b, "c": arg.c, "count": best}
    return {
        "family": family,
        "N_list": N_list,
        "samples_per_N": samples_per_N,
        "maxima": maxima,
        "fitted_slope": fit_slope(N_list, maxima),
        "worst_witness": worst,
        "redraws": redraws,
        "seed": seed,
        "distribution": "a, b, c uniform integers in [-N, N]; c = 0 or a = b = 0 redrawn",
    }


# -- sweeps ------------------------------------------------------------------------

def _dispatch(spec: CurveSpec, exclude_line: bool) -> CountReport:
    cv = spec.curve
    if isinstance(cv, Hyperbola):
        return count_hyperbola(cv, spec.window)
    if isinstance(cv, Cubic):
        return count_cubic(cv, spec.window, exclude_line)
    if not isinstance(spec.window, Disc):
        raise ValueError("K-curve counts need a disc window")
    return sigma1_count(cv.xi, cv.eta, cv.tau, spec.window)


def run_sweep(specs: Sequence[CurveSpec], *, exclude_line: bool = False, threads: int = 1,
              reproducible: bool = False) -> list[dict]:
    """Count every spec; rows come back in input order whatever ``threads`` is."""
    def work(spec):
        t0 = time.perf_counter_ns()
        rep = _dispatch(spec, exclude_line)
        el = 0 if reproducible else time.perf_counter_ns() - t0
        cv = spec.curve
        a, b, c = (cv.a, cv.b, cv.c) if isinstance(cv, Hyperbola) else \
            (cv.a, cv.b, "") if isinstance(cv, Cubic) else (cv.xi, cv.eta, cv.tau)
        return {"variant": cv.variant, "a": a, "b": b, "c_or_tau": c,
                "window_kind": spec.window.kind, "window_size": spec.window.size,
                "count": rep.count, "degenerate": rep.degenerate, "elapsed_ns": el}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(work, specs))
    return [work(s) for s in specs]


def write_sweep_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow(r)


# -- the K-form ------------------------------------------------------------------

DISPLAYED_K = "tau - xi**3/4 + 7*xi*eta**2/4 + 3*xi*(x**2 - y**2) - 6*eta*x*y"


def k_form_report() -> dict:
    """Expand tau - phi(z1) - phi(z2) under xi1 = x + xi/2, eta1 = y + eta/2.

    The result is compared monomial by monomial with the displayed K.
    """
    import sympy as sp

    x, y, xi, eta, tau = sp.symbols("x y xi eta tau")
    gens = (tau, xi, eta, x, y)

    def phi(p, q):
        return p**3 - 3 * p * q**2

    xi1, eta1 = x + xi / 2, y + eta / 2
    expr = sp.expand(tau - phi(xi1, eta1) - phi(xi - xi1, eta - eta1))
    shown = sp.expand(sp.sympify(DISPLAYED_K, locals=dict(zip(map(str, gens), gens))))

    def terms(e):
        poly = sp.Poly(e, *gens)
        return {m: c for m, c in zip(poly.monoms(), poly.coeffs())}

    d, p = terms(expr), terms(shown)
    table = []
    for m in sorted(set(d) | set(p), reverse=True):
        name = str(sp.Mul(*[g**k for g, k in zip(gens, m)]))
        dv, pv = d.get(m, sp.Integer(0)), p.get(m, sp.Integer(0))
        table.append({"term": name, "derived": str(dv), "displayed": str(pv), "agree": dv == pv})
    coeff = str(d.get((0, 1, 2, 0, 0), 0))
    quad = [r for r in table if r["term"] in ("x**2*xi", "xi*y**2", "eta*x*y")]
    return {
        "substitution": "xi1 = x + xi/2, eta1 = y + eta/2, xi2 = xi - xi1, eta2 = eta - eta1",
        "expansion": str(expr),
        "expansion_latex": sp.latex(expr),
        "displayed": str(shown),
        "terms": table,
        "xi_eta2_coefficient": coeff,
        "statement": f"the expansion yields coefficient {coeff} on xi*eta**2 (displayed form: 7/4)",
        "quadratic_form_sign_agrees": all(r["agree"] for r in quad),
        "quadratic_form_negated": all(r["derived"] == str(-sp.Rational(r["displayed"])) for r in quad),
        "all_terms_agree": all(r["agree"] for r in table),
    }

"""Per-step monitors shared by the solver and the invariants harness."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .torus import SpectralField, dbar_inv_d_array

TWO_PI_SQ = (2 * np.pi) ** 2

CSV_COLUMNS = ("step", "t", "dt", "l2_norm", "h1_proxy", "mean_re", "mean_im",
               "pairing_re", "pairing_im", "realness_defect")


def mean_functional(u: SpectralField) -> complex:
    """Integral of u over the torus, (2 pi)^2 c(0, 0)."""
    return complex(TWO_PI_SQ * u.coeff[0, 0])


def l2_pairing(u: SpectralField) -> complex:
    """Bilinear (not sesquilinear) pairing of u with dbar^{-1} d u.

    (2 pi)^2 Σ c(-z) A(z) c(z).  Indefinite: 2cos x gives +2(2 pi)^2, 2cos y
    gives -2(2 pi)^2.
    """
    g = u.grid
    c = u.coeff
    a = dbar_inv_d_array(g)
    partner = c[g.neg_index]
    # the Nyquist row is its own partner label only up to aliasing, so skip it
    terms = np.where(g.nyquist_mask, 0, partner * a * c)
    return complex(TWO_PI_SQ * terms.sum())


@dataclass
class DiagnosticsSeries:
    step: list = field(default_factory=list)
    t: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    mean: list = field(default_factory=list)
    l2_norm: list = field(default_factory=list)
    pairing: list = field(default_factory=list)
    realness_defect: list = field(default_factory=list)
    h1_proxy: list = field(default_factory=list)

    def record(self, step: int, t: float, dt: float, u: SpectralField) -> None:
        self.step.append(step)
        self.t.append(t)
        self.dt.append(dt)
        self.mean.append(mean_functional(u))
        self.l2_norm.append(u.l2_norm())
        self.pairing.append(l2_pairing(u))
        self.realness_defect.append(u.realness_defect())
        self.h1_proxy.append(u.h1_proxy())

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        for i in range(len(self)):
            m, p = self.mean[i], self.pairing[i]
            yield (self.step[i], self.t[i], self.dt[i], self.l2_norm[i], self.h1_proxy[i],
                   m.real, m.imag, p.real, p.imag, self.realness_defect[i])

    def pairing_drift(self) -> float:
        """max_k |P_k - P_0| / max(|P_0|, tiny)."""
        p = np.asarray(self.pairing)
        if p.size == 0:
            return 0.0
        ref = max(abs(p[0]), np.finfo(float).tiny)
        return float(np.abs(p - p[0]).max() / ref)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for row in self.rows():
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])

"""Time the compiled kernels against the numpy fallback and check they agree.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from nvlab import _fallback

try:
    from nvlab import _speedups
except ImportError:
    _speedups = None


def _field(n, rng):
    c = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    c[0, 0] = 0
    return np.ascontiguousarray(c)


def cases(rng):
    n = 16
    f = np.fft.fftfreq(n, 1 / n).astype(np.int64)
    f[n // 2] = n // 2
    u, v = _field(n, rng), _field(n, rng)
    yield "conv_weighted m 16x16", "conv_weighted", (u, v, f, f, _fallback.WEIGHT_M, True)
    n = 24
    f = np.fft.fftfreq(n, 1 / n).astype(np.int64)
    f[n // 2] = n // 2
    u, v = _field(n, rng), _field(n, rng)
    yield "conv_weighted Q 24x24", "conv_weighted", (u, v, f, f, _fallback.WEIGHT_Q, True)
    yield "hyperbola 3x^2+5xy=-7 side 2000", "hyperbola_count", (3, 5, -7, -1000, 1000, -1000, 1000, 100)
    yield "hyperbola brute side 400", "hyperbola_count_brute", (3, 5, -7, -200, 200, -200, 200, 100)
    yield "cubic (5,-3) side 2000", "cubic_count", (5, -3, -1000, 1000, -1000, 1000, False, 100)
    yield "cubic brute side 400", "cubic_count_brute", (5, -3, -200, 200, -200, 200, False, 100)
    yield "disc phase radius 300", "disc_phase_count", (4, 2, 8, 0, 0, 300.0, 100)
    yield "sigma3 brute side 400", "sigma3_brute", (3, -2, -200, 200, -200, 200, 100)


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    if np.iscomplexobj(a):
        return np.allclose(a, b, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(b).max()))
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write the table here as JSON")
    args = ap.parse_args(argv)
    if _speedups is None:
        print("compiled extension not built; only the fallback can be timed", file=sys.stderr)
    rng = np.random.default_rng(0)
    rows = []
    print(f"{'case':36s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}  agree")
    for label, name, argv_ in cases(rng):
        py = getattr(_fallback, name)
        t_py = min(timeit.repeat(lambda: py(*argv_), number=1, repeat=args.repeat))
        row = {"case": label, "python_s": t_py}
        if _speedups is not None:
            cy = getattr(_speedups, name)
            t_cy = min(timeit.repeat(lambda: cy(*argv_), number=1, repeat=args.repeat))
            row.update(cython_s=t_cy, speedup=t_py / t_cy, agree=bool(_same(py(*argv_), cy(*argv_))))
            print(f"{label:36s} {t_py:10.4f} {t_cy:10.4f} {t_py / t_cy:8.1f}  {row['agree']}")
        else:
            print(f"{label:36s} {t_py:10.4f} {'-':>10s} {'-':>8s}  -")
        rows.append(row)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r.get("agree", True) for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())

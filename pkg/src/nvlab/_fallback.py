"""Pure numpy versions of the hot kernels.

Signatures mirror ``nvlab._speedups`` exactly; :mod:`nvlab.kernels` picks one
at import time.  Window bounds are inclusive and callers guarantee that every
intermediate fits in int64.
"""
import numpy as np

WEIGHT_PLAIN = 0
WEIGHT_Q = 1
WEIGHT_M = 2


def _wrap(f, n):
    # integer frequency -> label in [-n/2+1, n/2]
    r = f % n
    return np.where(r <= n // 2, r, r - n)


def conv_weighted(uc, vc, fx, fy, kind, wrap):
    """out[z] = Σ_{z1+z2=z} w(z1, z2) u[z1] v[z2] over all stored z1, z2.

    kind 0: w = 1; kind 1: w = 1 - δ(xi,0)δ(xi1,0); kind 2: w = i m(z1, z2)
    with the outer (xi, eta) taken as the stored label of z.  Pairs whose sum
    leaves the grid are folded back when ``wrap`` is set and dropped otherwise.
    """
    n_x, n_y = uc.shape
    out = np.zeros((n_x, n_y), complex)
    fxf = fx.astype(float)
    fyf = fy.astype(float)
    k2 = fxf[:, None] ** 2 + fyf[None, :] ** 2
    k2s = np.where(k2 == 0, 1.0, k2)
    op1 = np.where(k2 == 0, 0.0, (fxf[:, None] ** 2 - fyf[None, :] ** 2) / k2s)
    op2 = np.where(k2 == 0, 0.0, 2 * fxf[:, None] * fyf[None, :] / k2s)
    X2, Y2 = np.meshgrid(fx, fy, indexing="ij")
    for i in range(n_x):
        for j in range(n_y):
            a = uc[i, j]
            if a == 0:
                continue
            x1, y1 = int(fx[i]), int(fy[j])
            sx = X2 + x1
            sy = Y2 + y1
            tx = _wrap(sx, n_x)
            ty = _wrap(sy, n_y)
            keep = np.ones((n_x, n_y), bool) if wrap else (tx == sx) & (ty == sy)
            if kind == WEIGHT_PLAIN:
                w = np.ones((n_x, n_y))
            elif kind == WEIGHT_Q:
                w = np.where((tx == 0) & (x1 == 0), 0.0, 1.0)
            else:
                if k2[i, j] == 0:
                    continue
                s1 = op1[i, j] + op1
                s2 = op2[i, j] + op2
                w = 1j * (tx * s1 - ty * s2)
                w = np.where(k2 == 0, 0, w)
            contrib = (w * a * vc)[keep]
            np.add.at(out, (tx[keep] % n_x, ty[keep] % n_y), contrib)
    return out


def _isqrt_exact(q):
    """Return (s, ok) with s = floor(sqrt(q)) and ok where q is a perfect square."""
    q = np.asarray(q, dtype=np.int64)
    ok = q >= 0
    s = np.floor(np.sqrt(np.where(ok, q, 0).astype(float))).astype(np.int64)
    s = np.where(s * s > q, s - 1, s)
    s = np.where((s + 1) * (s + 1) <= q, s + 1, s)
    return s, ok & (s * s == q)


def _collect(xs, ys, cap):
    pts = np.stack([xs, ys], axis=1) if len(xs) else np.zeros((0, 2), np.int64)
    order = np.lexsort((pts[:, 1], pts[:, 0])) if len(pts) else np.zeros(0, int)
    return pts[order][:cap].astype(np.int64)


def _roots_in_window(x, num_p, num_m, den, s, ok, y0, y1, cap):
    # roots (num ± ...)/den already split into num_p, num_m; den > 0 or < 0 arrays
    xs, ys = [], []
    for num, use in ((num_p, ok), (num_m, ok & (s != 0))):
        good = use & (den != 0)
        dd = np.where(good, den, 1)
        r = np.where(good, num % dd, 1)
        y = np.where(good & (r == 0), num // dd, 0)
        hit = good & (r == 0) & (y >= y0) & (y <= y1)
        xs.append(x[hit])
        ys.append(y[hit])
    xs = np.concatenate(xs)
    ys = np.concatenate(ys)
    return len(xs), xs, ys


def hyperbola_count(a, b, c, x0, x1, y0, y1, cap):
    """Integer points of a(x^2-y^2) + 2bxy = c in the window, O(width) sweep."""
    x = np.arange(x0, x1 + 1, dtype=np.int64)
    if a != 0:
        q = (a * a + b * b) * x * x - a * c
        s, ok = _isqrt_exact(q)
        n, xs, ys = _roots_in_window(x, b * x + s, b * x - s, np.full_like(x, a), s, ok, y0, y1, cap)
    else:
        den = 2 * b * x
        good = den != 0
        dd = np.where(good, den, 1)
        hit = good & (c % dd == 0)
        y = np.where(hit, c // dd, 0)
        hit &= (y >= y0) & (y <= y1)
        xs, ys = x[hit], y[hit]
        n = len(xs)
    return n, _collect(xs, ys, cap)


def hyperbola_count_brute(a, b, c, x0, x1, y0, y1, cap):
    x = np.arange(x0, x1 + 1, dtype=np.int64)[:, None]
    y = np.arange(y0, y1 + 1, dtype=np.int64)[None, :]
    hit = a * (x * x - y * y) + 2 * b * x * y == c
    idx = np.argwhere(hit)
    return int(hit.sum()), (idx[:cap] + [x0, y0]).astype(np.int64)


def cubic_count(a, b, x0, x1, y0, y1, exclude_line, cap):
    """Integer points of (x+a)(x^2-y^2) = 2(y+b)xy, sweeping x.

    As a quadratic in y: (3x+a) y^2 + 2bx y - (x+a) x^2 = 0.
    """
    x = np.arange(x0, x1 + 1, dtype=np.int64)
    A = 3 * x + a
    q = b * b + A * (x + a)
    s, ok = _isqrt_exact(q)
    reg = (A != 0) & (x != 0)
    absx = np.abs(x)
    n, xs, ys = _roots_in_window(x, -b * x + absx * s, -b * x - absx * s, A, s, ok & reg, y0, y1, cap)
    xs, ys = [xs], [ys]
    # 3x + a = 0 with x != 0: linear in y
    lin = (A == 0) & (x != 0)
    if lin.any() and b != 0:
        xl = x[lin]
        num = (xl + a) * xl
        den = 2 * b
        hit = num % den == 0
        yl = num // den
        hit &= (yl >= y0) & (yl <= y1)
        xs.append(xl[hit])
        ys.append(yl[hit])
        n += int(hit.sum())
    if x0 <= 0 <= x1:
        if a == 0:
            if not exclude_line:
                yy = np.arange(y0, y1 + 1, dtype=np.int64)
                xs.append(np.zeros_like(yy))
                ys.append(yy)
                n += len(yy)
        elif y0 <= 0 <= y1:
            xs.append(np.zeros(1, np.int64))
            ys.append(np.zeros(1, np.int64))
            n += 1
    return n, _collect(np.concatenate(xs), np.concatenate(ys), cap)


def cubic_count_brute(a, b, x0, x1, y0, y1, exclude_line, cap):
    x = np.arange(x0, x1 + 1, dtype=np.int64)[:, None]
    y = np.arange(y0, y1 + 1, dtype=np.int64)[None, :]
    hit = (x + a) * (x * x - y * y) == 2 * (y + b) * x * y
    if exclude_line and a == 0:
        hit &= x != 0
    idx = np.argwhere(hit)
    return int(hit.sum()), (idx[:cap] + [x0, y0]).astype(np.int64)


def disc_phase_count(xi, eta, tau, cx2, cy2, radius, cap):
    """Integer z1 with |2 z1 - c2| <= 2R and phi(z1) + phi(z - z1) = tau."""
    r2 = (2.0 * radius) ** 2
    lo_x = int(np.floor((cx2 - 2 * radius) / 2)) - 1
    hi_x = int(np.ceil((cx2 + 2 * radius) / 2)) + 1
    lo_y = int(np.floor((cy2 - 2 * radius) / 2)) - 1
    hi_y = int(np.ceil((cy2 + 2 * radius) / 2)) + 1
    p = np.arange(lo_x, hi_x + 1, dtype=np.int64)[:, None]
    q = np.arange(lo_y, hi_y + 1, dtype=np.int64)[None, :]
    inside = ((2 * p - cx2) ** 2 + (2 * q - cy2) ** 2).astype(float) <= r2
    p2 = xi - p
    q2 = eta - q
    val = p**3 - 3 * p * q * q + p2**3 - 3 * p2 * q2 * q2
    hit = inside & (val == tau)
    idx = np.argwhere(hit)
    return int(hit.sum()), (idx[:cap] + [lo_x, lo_y]).astype(np.int64)


def sigma3_brute(xi1, eta1, x0, x1, y0, y1, cap):
    """Σ3 over (xi, eta) in the window, with (x, y) = (xi - 2 xi1, eta - 2 eta1)."""
    xi = np.arange(x0, x1 + 1, dtype=np.int64)[:, None]
    eta = np.arange(y0, y1 + 1, dtype=np.int64)[None, :]
    x = xi - 2 * xi1
    y = eta - 2 * eta1
    hit = (x + 2 * xi1) * (x * x - y * y) == 2 * (y + 2 * eta1) * x * y
    if xi1 == 0:
        hit &= xi != 0
    idx = np.argwhere(hit)
    return int(hit.sum()), (idx[:cap] + [x0, y0]).astype(np.int64)

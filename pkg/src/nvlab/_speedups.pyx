# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (same signatures as nvlab._fallback)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor, ceil

cnp.import_array()

ctypedef long long i64


cdef inline i64 wrap_label(i64 f, i64 n) nogil:
    cdef i64 r = f % n
    if r < 0:
        r += n
    if r > n // 2:
        r -= n
    return r


cdef inline i64 floor_div(i64 a, i64 b) nogil:
    cdef i64 q = a / b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


cdef inline bint isqrt_exact(i64 q, i64* s) nogil:
    cdef i64 r
    if q < 0:
        s[0] = -1
        return False
    r = <i64> sqrt(<double> q)
    while r * r > q:
        r -= 1
    while (r + 1) * (r + 1) <= q:
        r += 1
    s[0] = r
    return r * r == q


def conv_weighted(const double complex[:, ::1] uc, const double complex[:, ::1] vc,
                  const i64[::1] fx, const i64[::1] fy,
                  int kind, bint wrap):
    cdef Py_ssize_t n_x = uc.shape[0], n_y = uc.shape[1]
    cdef Py_ssize_t i, j, k, l, oi, oj
    cdef i64 x1, y1, x2, y2, sx, sy, tx, ty
    cdef double k1, kk2, s1, s2, o11, o12, o21, o22
    cdef double complex a, w, acc
    out_arr = np.zeros((n_x, n_y), dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    with nogil:
        for i in range(n_x):
            x1 = fx[i]
            for j in range(n_y):
                a = uc[i, j]
                if a == 0:
                    continue
                y1 = fy[j]
                k1 = <double> (x1 * x1 + y1 * y1)
                if kind == 2 and k1 == 0:
                    continue
                if k1 != 0:
                    o11 = (x1 * x1 - y1 * y1) / k1
                    o12 = 2.0 * x1 * y1 / k1
                for k in range(n_x):
                    x2 = fx[k]
                    sx = x1 + x2
                    tx = wrap_label(sx, n_x)
                    if not wrap and tx != sx:
                        continue
                    oi = tx % n_x if tx >= 0 else tx + n_x
                    for l in range(n_y):
                        y2 = fy[l]
                        sy = y1 + y2
                        ty = wrap_label(sy, n_y)
                        if not wrap and ty != sy:
                            continue
                        if vc[k, l] == 0:
                            continue
                        oj = ty if ty >= 0 else ty + n_y
                        if kind == 0:
                            w = 1.0
                        elif kind == 1:
                            if tx == 0 and x1 == 0:
                                continue
                            w = 1.0
                        else:
                            kk2 = <double> (x2 * x2 + y2 * y2)
                            if kk2 == 0:
                                continue
                            o21 = (x2 * x2 - y2 * y2) / kk2
                            o22 = 2.0 * x2 * y2 / kk2
                            s1 = o11 + o21
                            s2 = o12 + o22
                            w = 1j * (tx * s1 - ty * s2)
                        out[oi, oj] = out[oi, oj] + w * a * vc[k, l]
    return out_arr


cdef class _Hits:
    cdef public list pts
    cdef public int cap
    def __init__(self, int cap):
        self.pts = []
        self.cap = cap


def _as_array(list pts):
    if not pts:
        return np.zeros((0, 2), dtype=np.int64)
    return np.asarray(pts, dtype=np.int64)


def hyperbola_count(i64 a, i64 b, i64 c, i64 x0, i64 x1, i64 y0, i64 y1, int cap):
    cdef i64 x, q, s, num, den, y, ya = 0, yb = 0, n = 0
    cdef bint h1, h2
    cdef list pts = []
    for x in range(x0, x1 + 1):
        if a != 0:
            q = (a * a + b * b) * x * x - a * c
            if not isqrt_exact(q, &s):
                continue
            num = b * x + s
            h1 = num % a == 0
            if h1:
                ya = num / a
                h1 = y0 <= ya <= y1
            h2 = False
            if s != 0:
                num = b * x - s
                h2 = num % a == 0
                if h2:
                    yb = num / a
                    h2 = y0 <= yb <= y1
            if h1 and h2 and yb < ya:
                ya, yb = yb, ya
            if h1:
                n += 1
                if len(pts) < cap:
                    pts.append((x, ya))
            if h2:
                n += 1
                if len(pts) < cap:
                    pts.append((x, yb))
        else:
            den = 2 * b * x
            if den == 0 or c % den != 0:
                continue
            y = c / den
            if y0 <= y <= y1:
                n += 1
                if len(pts) < cap:
                    pts.append((x, y))
    return n, _as_array(pts)


def hyperbola_count_brute(i64 a, i64 b, i64 c, i64 x0, i64 x1, i64 y0, i64 y1, int cap):
    cdef i64 x, y, n = 0
    cdef list pts = []
    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            if a * (x * x - y * y) + 2 * b * x * y == c:
                n += 1
                if len(pts) < cap:
                    pts.append((x, y))
    return n, _as_array(pts)


def cubic_count(i64 a, i64 b, i64 x0, i64 x1, i64 y0, i64 y1, bint exclude_line, int cap):
    cdef i64 x, A, q, s, num, y, r1, r2, n = 0
    cdef bint h1, h2
    cdef list pts = []
    for x in range(x0, x1 + 1):
        if x == 0:
            if a == 0:
                if not exclude_line:
                    for y in range(y0, y1 + 1):
                        n += 1
                        if len(pts) < cap:
                            pts.append((0, y))
            elif y0 <= 0 <= y1:
                n += 1
                if len(pts) < cap:
                    pts.append((0, 0))
            continue
        A = 3 * x + a
        if A == 0:
            if b != 0:
                num = (x + a) * x
                if num % (2 * b) == 0:
                    y = num / (2 * b)
                    if y0 <= y <= y1:
                        n += 1
                        if len(pts) < cap:
                            pts.append((x, y))
            continue
        q = b * b + A * (x + a)
        if not isqrt_exact(q, &s):
            continue
        if x < 0:
            s = -s
        num = -b * x + x * s
        h1 = num % A == 0
        if h1:
            r1 = num / A
            h1 = y0 <= r1 <= y1
        h2 = False
        if s != 0:
            num = -b * x - x * s
            h2 = num % A == 0
            if h2:
                r2 = num / A
                h2 = y0 <= r2 <= y1
        if h1 and h2 and r2 < r1:
            r1, r2 = r2, r1
        if h1:
            n += 1
            if len(pts) < cap:
                pts.append((x, r1))
        if h2:
            n += 1
            if len(pts) < cap:
                pts.append((x, r2))
    return n, _as_array(pts)


def cubic_count_brute(i64 a, i64 b, i64 x0, i64 x1, i64 y0, i64 y1, bint exclude_line, int cap):
    cdef i64 x, y, n = 0
    cdef list pts = []
    for x in range(x0, x1 + 1):
        if exclude_line and a == 0 and x == 0:
            continue
        for y in range(y0, y1 + 1):
            if (x + a) * (x * x - y * y) == 2 * (y + b) * x * y:
                n += 1
                if len(pts) < cap:
                    pts.append((x, y))
    return n, _as_array(pts)


def disc_phase_count(i64 xi, i64 eta, i64 tau, i64 cx2, i64 cy2, double radius, int cap):
    cdef double r2 = (2.0 * radius) * (2.0 * radius)
    cdef i64 lo_x = <i64> floor((cx2 - 2 * radius) / 2) - 1
    cdef i64 hi_x = <i64> ceil((cx2 + 2 * radius) / 2) + 1
    cdef i64 lo_y = <i64> floor((cy2 - 2 * radius) / 2) - 1
    cdef i64 hi_y = <i64> ceil((cy2 + 2 * radius) / 2) + 1
    cdef i64 p, q, p2, q2, dx, dy, n = 0
    cdef list pts = []
    for p in range(lo_x, hi_x + 1):
        dx = 2 * p - cx2
        for q in range(lo_y, hi_y + 1):
            dy = 2 * q - cy2
            if <double> (dx * dx + dy * dy) > r2:
                continue
            p2 = xi - p
            q2 = eta - q
            if p * p * p - 3 * p * q * q + p2 * p2 * p2 - 3 * p2 * q2 * q2 == tau:
                n += 1
                if len(pts) < cap:
                    pts.append((p, q))
    return n, _as_array(pts)


def sigma3_brute(i64 xi1, i64 eta1, i64 x0, i64 x1, i64 y0, i64 y1, int cap):
    cdef i64 xi, eta, x, y, n = 0
    cdef list pts = []
    for xi in range(x0, x1 + 1):
        if xi == 0 and xi1 == 0:
            continue
        x = xi - 2 * xi1
        for eta in range(y0, y1 + 1):
            y = eta - 2 * eta1
            if (x + 2 * xi1) * (x * x - y * y) == 2 * (y + 2 * eta1) * x * y:
                n += 1
                if len(pts) < cap:
                    pts.append((xi, eta))
    return n, _as_array(pts)

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Native kernels, parallel over rows (or columns) with OpenMP.

Each output element depends only on the inputs of the current pass, so the
results do not depend on the thread count.
"""
import numpy as np

from . import _pykernels

from cython.parallel cimport parallel, prange
from libc.math cimport floor
from libc.stdint cimport int64_t
from libc.stdlib cimport free, malloc

cdef int64_t INF = 0x7FFFFFFFFFFFFFFF


cdef void _row_pass(const unsigned char* b, int64_t* f, Py_ssize_t w) noexcept nogil:
    cdef Py_ssize_t x
    cdef Py_ssize_t last = -1
    cdef int64_t d
    for x in range(w):
        if b[x]:
            last = x
        if last >= 0:
            d = x - last
            f[x] = d * d
        else:
            f[x] = INF
    last = -1
    for x in range(w - 1, -1, -1):
        if b[x]:
            last = x
        if last >= 0:
            d = last - x
            if d * d < f[x]:
                f[x] = d * d


cdef void _envelope(const int64_t* f, Py_ssize_t stride, Py_ssize_t n, int64_t* out,
                    Py_ssize_t* v, double* z) noexcept nogil:
    cdef Py_ssize_t q, k = -1, vk
    cdef int64_t fq, d
    cdef double s = 0.0
    for q in range(n):
        fq = f[q * stride]
        if fq == INF:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -1.0e300
            z[1] = 1.0e300
            continue
        while True:
            vk = v[k]
            s = ((fq + q * q) - (f[vk * stride] + vk * vk)) / (2.0 * (q - vk))
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = 1.0e300
    if k < 0:
        for q in range(n):
            out[q * stride] = INF
        return
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d = q - v[k]
        out[q * stride] = d * d + f[v[k] * stride]


def edt_squared(bits, int threads=1):
    cdef const unsigned char[:, ::1] b = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t h = b.shape[0], w = b.shape[1]
    f_arr = np.empty((h, w), dtype=np.int64)
    out_arr = np.empty((h, w), dtype=np.int64)
    cdef int64_t[:, ::1] f = f_arr
    cdef int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef Py_ssize_t* vbuf
    cdef double* zbuf
    with nogil:
        for y in prange(h, num_threads=threads, schedule="static"):
            _row_pass(&b[y, 0], &f[y, 0], w)
    with nogil, parallel(num_threads=threads):
        vbuf = <Py_ssize_t*> malloc(h * sizeof(Py_ssize_t))
        zbuf = <double*> malloc((h + 1) * sizeof(double))
        for x in prange(w, schedule="static"):
            _envelope(&f[0, 0] + x, w, h, &out[0, 0] + x, vbuf, zbuf)
        free(vbuf)
        free(zbuf)
    return out_arr


cdef inline int _count4(const unsigned char[:, ::1] b, Py_ssize_t y, Py_ssize_t x,
                        Py_ssize_t h, Py_ssize_t w) noexcept nogil:
    cdef int n = 0
    if x > 0 and b[y, x - 1]:
        n += 1
    if x < w - 1 and b[y, x + 1]:
        n += 1
    if y > 0 and b[y - 1, x]:
        n += 1
    if y < h - 1 and b[y + 1, x]:
        n += 1
    return n


def denoise(bits, int nd, int threads=1):
    cdef const unsigned char[:, ::1] b = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t h = b.shape[0], w = b.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    with nogil:
        for y in prange(h, num_threads=threads, schedule="static"):
            for x in range(w):
                if b[y, x] and _count4(b, y, x, h, w) >= nd:
                    out[y, x] = 1
    return out_arr


def fill(bits, int nf, int threads=1):
    cdef const unsigned char[:, ::1] b = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t h = b.shape[0], w = b.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    with nogil:
        for y in prange(h, num_threads=threads, schedule="static"):
            for x in range(w):
                if b[y, x] or _count4(b, y, x, h, w) >= nf:
                    out[y, x] = 1
    return out_arr


def warp_bilinear(img, fx, fy, int threads=1):
    cdef const double[:, ::1] im = np.ascontiguousarray(img, dtype=np.float64)
    cdef Py_ssize_t h = im.shape[0], w = im.shape[1]
    cdef const double[:, ::1] dx = np.ascontiguousarray(np.broadcast_to(fx, (h, w)), dtype=np.float64)
    cdef const double[:, ::1] dy = np.ascontiguousarray(np.broadcast_to(fy, (h, w)), dtype=np.float64)
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, x0, y0, x1, y1
    cdef double cx, cy, fx0, fy0, ax, ay
    with nogil:
        for y in prange(h, num_threads=threads, schedule="static"):
            for x in range(w):
                cx = x + dx[y, x]
                cy = y + dy[y, x]
                cx = min(max(cx, 0.0), w - 1.0)
                cy = min(max(cy, 0.0), h - 1.0)
                fx0 = floor(cx)
                fy0 = floor(cy)
                ax = cx - fx0
                ay = cy - fy0
                x0 = <Py_ssize_t> fx0
                y0 = <Py_ssize_t> fy0
                x1 = min(x0 + 1, w - 1)
                y1 = min(y0 + 1, h - 1)
                out[y, x] = ((1.0 - ay) * ((1.0 - ax) * im[y0, x0] + ax * im[y0, x1])
                             + ay * ((1.0 - ax) * im[y1, x0] + ax * im[y1, x1]))
    return out_arr


cdef void _sweep(const double* ix, const double* iy, const double* it, const double* inv,
                 const double* u, const double* v, double* un, double* vn,
                 Py_ssize_t h, Py_ssize_t w, double lam, int threads) noexcept nogil:
    cdef Py_ssize_t y, x, i, xm, xp, ym, yp
    cdef double au, av, t
    for y in prange(h, num_threads=threads, schedule="static"):
        ym = y - 1 if y > 0 else 0
        yp = y + 1 if y < h - 1 else h - 1
        for x in range(w):
            xm = x - 1 if x > 0 else 0
            xp = x + 1 if x < w - 1 else w - 1
            i = y * w + x
            au = (u[y * w + xm] + u[y * w + xp] + u[ym * w + x] + u[yp * w + x]) * 0.25
            av = (v[y * w + xm] + v[y * w + xp] + v[ym * w + x] + v[yp * w + x]) * 0.25
            t = (ix[i] * au + iy[i] * av + it[i]) * inv[i]
            un[i] = au - ix[i] * t
            vn[i] = av - iy[i] * t


def hs_relax(ix, iy, it, double lam, int iters, u, v, int threads=1):
    cdef const double[:, ::1] gx = np.ascontiguousarray(ix, dtype=np.float64)
    cdef const double[:, ::1] gy = np.ascontiguousarray(iy, dtype=np.float64)
    cdef const double[:, ::1] gt = np.ascontiguousarray(it, dtype=np.float64)
    cdef Py_ssize_t h = gx.shape[0], w = gx.shape[1]
    cdef const double[:, ::1] inv = _pykernels.inverse_denominator(np.asarray(gx), np.asarray(gy), lam)
    a_u = np.array(u, dtype=np.float64, order="C")
    a_v = np.array(v, dtype=np.float64, order="C")
    b_u = np.empty_like(a_u)
    b_v = np.empty_like(a_v)
    cdef double[:, ::1] u0 = a_u, v0 = a_v, u1 = b_u, v1 = b_v
    cdef double* src_u = &u0[0, 0]
    cdef double* src_v = &v0[0, 0]
    cdef double* dst_u = &u1[0, 0]
    cdef double* dst_v = &v1[0, 0]
    cdef double* tmp
    cdef int n
    with nogil:
        for n in range(iters):
            _sweep(&gx[0, 0], &gy[0, 0], &gt[0, 0], &inv[0, 0], src_u, src_v, dst_u, dst_v,
                   h, w, lam, threads)
            tmp = src_u
            src_u = dst_u
            dst_u = tmp
            tmp = src_v
            src_v = dst_v
            dst_v = tmp
    if iters % 2 == 0:
        return a_u, a_v
    return b_u, b_v

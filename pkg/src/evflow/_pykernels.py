"""Numpy implementations of the hot kernels.

Every function here mirrors one in ``_kernels.pyx`` with the same signature and,
for the floating point kernels, the same operation order, so both backends
return identical arrays.  ``threads`` is accepted for signature parity and
ignored.
"""
import numpy as np

INF = np.iinfo(np.int64).max


def _row_pass(bits):
    h, w = bits.shape
    idx = np.broadcast_to(np.arange(w, dtype=np.int64), (h, w))
    on = bits != 0
    big = np.int64(1 << 40)
    last = np.maximum.accumulate(np.where(on, idx, -big), axis=1)
    nxt = np.minimum.accumulate(np.where(on, idx, big)[:, ::-1], axis=1)[:, ::-1]
    d = np.minimum(idx - last, nxt - idx)
    f = d * d
    f[d >= big // 2] = INF
    return f


def edt_squared(bits, threads=1):
    """Squared exact Euclidean distance to the nearest non-zero pixel.

    Separable: a 1-D row scan followed by a per-column lower envelope of
    parabolas, vectorised across columns.  Columns with no finite entry
    (only possible for an empty image) stay at ``INF``.
    """
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    h, w = bits.shape
    f = _row_pass(bits)
    finite = f < INF

    v = np.zeros((h, w), dtype=np.int64)
    z = np.empty((h + 1, w), dtype=np.float64)
    k = np.full(w, -1, dtype=np.int64)
    cols = np.arange(w)

    for q in range(h):
        fq = f[q]
        act = finite[q]
        start = act & (k < 0)
        if start.any():
            c = cols[start]
            k[c] = 0
            v[0, c] = q
            z[0, c] = -np.inf
            z[1, c] = np.inf
        grow = act & ~start
        if not grow.any():
            continue
        s = np.zeros(w, dtype=np.float64)
        pending = grow.copy()
        while True:
            c = cols[pending]
            if c.size == 0:
                break
            kc = k[c]
            vk = v[kc, c]
            sc = ((fq[c] + q * q) - (f[vk, c] + vk * vk)) / (2.0 * (q - vk))
            pop = sc <= z[kc, c]
            k[c[pop]] -= 1
            keep = c[~pop]
            s[keep] = sc[~pop]
            pending[keep] = False
        c = cols[grow]
        k[c] += 1
        v[k[c], c] = q
        z[k[c], c] = s[c]
        z[k[c] + 1, c] = np.inf

    out = np.full((h, w), INF, dtype=np.int64)
    have = k >= 0
    c = cols[have]
    if c.size == 0:
        return out
    kk = np.zeros(c.size, dtype=np.int64)
    for q in range(h):
        while True:
            adv = z[kk + 1, c] < q
            if not adv.any():
                break
            kk[adv] += 1
        vq = v[kk, c]
        d = q - vq
        out[q, c] = d * d + f[vq, c]
    return out


def _neighbour_count(bits):
    b = (bits != 0).astype(np.int64)
    n = np.zeros_like(b)
    n[:, 1:] += b[:, :-1]
    n[:, :-1] += b[:, 1:]
    n[1:, :] += b[:-1, :]
    n[:-1, :] += b[1:, :]
    return n


def denoise(bits, nd, threads=1):
    bits = np.asarray(bits)
    keep = (bits != 0) & (_neighbour_count(bits) >= nd)
    return keep.astype(np.uint8)


def fill(bits, nf, threads=1):
    bits = np.asarray(bits)
    out = (bits != 0) | (_neighbour_count(bits) >= nf)
    return out.astype(np.uint8)


def warp_bilinear(img, fx, fy, threads=1):
    """Sample ``img`` at ``(x + fx, y + fy)`` with border clamping."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    xs = np.arange(w, dtype=np.float64)[None, :]
    ys = np.arange(h, dtype=np.float64)[:, None]
    cx = np.minimum(np.maximum(xs + fx, 0.0), w - 1.0)
    cy = np.minimum(np.maximum(ys + fy, 0.0), h - 1.0)
    fx0 = np.floor(cx)
    fy0 = np.floor(cy)
    ax = cx - fx0
    ay = cy - fy0
    x0 = fx0.astype(np.intp)
    y0 = fy0.astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    i00 = img[y0, x0]
    i01 = img[y0, x1]
    i10 = img[y1, x0]
    i11 = img[y1, x1]
    return (1.0 - ay) * ((1.0 - ax) * i00 + ax * i01) + ay * ((1.0 - ax) * i10 + ax * i11)


def _avg4(a):
    p = np.pad(a, 1, mode="edge")
    return (p[1:-1, :-2] + p[1:-1, 2:] + p[:-2, 1:-1] + p[2:, 1:-1]) * 0.25


def inverse_denominator(ix, iy, lam):
    """``1 / (lam + ix^2 + iy^2)``, or 0 where that is 0; shared by both backends."""
    den = lam + ix * ix + iy * iy
    nz = den != 0.0
    return np.where(nz, 1.0 / np.where(nz, den, 1.0), 0.0)


def hs_relax(ix, iy, it, lam, iters, u, v, threads=1):
    """Jacobi sweeps of the linearised brightness-constancy system.

    Returns new ``(u, v)`` arrays; the inputs are not modified.
    """
    u = np.array(u, dtype=np.float64)
    v = np.array(v, dtype=np.float64)
    inv = inverse_denominator(ix, iy, lam)
    for _ in range(iters):
        au = _avg4(u)
        av = _avg4(v)
        t = (ix * au + iy * av + it) * inv
        u = au - ix * t
        v = av - iy * t
    return u, v

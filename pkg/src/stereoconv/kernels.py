"""Pixel-loop kernels, each in a numba and a pure-numpy flavour.

Both flavours of a kernel perform the same floating-point operations in the
same order, so their outputs are bit-identical; ``tests/test_kernels.py``
holds them to that.  Public modules call the dispatching names at the bottom
of this file.
"""

import math

import numpy as np
from scipy import ndimage

from ._jit import njit, pick

NO_SPLAT = np.float32(-1.0)

# tan(22.5 deg) and tan(67.5 deg) for angle-free gradient direction binning
_TAN_22 = math.sqrt(2.0) - 1.0
_TAN_67 = math.sqrt(2.0) + 1.0


def _round_half_away_np(v):
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


# ---------------------------------------------------------------------------
# forward splatting
# ---------------------------------------------------------------------------


@njit
def splat_numba(pixels, disparity):
    h, w = disparity.shape
    out = np.zeros((h, w, 3), dtype=np.float32)
    zbuf = np.full((h, w), NO_SPLAT, dtype=np.float32)
    src = np.full((h, w), -1, dtype=np.int64)
    for y in range(h):
        for x in range(w):
            d = disparity[y, x]
            v = np.float64(x) - np.float64(d)
            if v >= 0.0:
                t = int(math.floor(v + 0.5))
            else:
                t = -int(math.floor(-v + 0.5))
            if t < 0 or t >= w:
                continue
            # strict '>' keeps the smallest source x on ties
            if d > zbuf[y, t]:
                zbuf[y, t] = d
                src[y, t] = x
                out[y, t, 0] = pixels[y, x, 0]
                out[y, t, 1] = pixels[y, x, 1]
                out[y, t, 2] = pixels[y, x, 2]
    return out, zbuf, src


def splat_numpy(pixels, disparity):
    h, w = disparity.shape
    out = np.zeros((h, w, 3), dtype=np.float32)
    zbuf = np.full((h, w), NO_SPLAT, dtype=np.float32)
    src = np.full((h, w), -1, dtype=np.int64)

    ys, xs = np.mgrid[0:h, 0:w]
    t = _round_half_away_np(xs.astype(np.float64) - disparity.astype(np.float64)).astype(np.int64)
    ok = (t >= 0) & (t < w)
    ys, xs, t, d = ys[ok], xs[ok], t[ok], disparity[ok]
    # winner per (row, target): largest d, then smallest source x
    order = np.lexsort((xs, -d, t, ys))
    ys, xs, t, d = ys[order], xs[order], t[order], d[order]
    key = ys * w + t
    first = np.ones(key.shape, dtype=bool)
    first[1:] = key[1:] != key[:-1]
    ys, xs, t, d = ys[first], xs[first], t[first], d[first]
    zbuf[ys, t] = d
    src[ys, t] = xs
    out[ys, t] = pixels[ys, xs]
    return out, zbuf, src


# ---------------------------------------------------------------------------
# polyline rasterisation
# ---------------------------------------------------------------------------


@njit
def poly_numba(pixels, disparity):
    h, w = disparity.shape
    out = np.zeros((h, w, 3), dtype=np.float32)
    zbuf = np.full((h, w), -np.inf, dtype=np.float64)
    covered = np.zeros((h, w), dtype=np.bool_)
    for y in range(h):
        if w == 1:
            p = -np.float64(disparity[y, 0])
            if p == 0.0:
                covered[y, 0] = True
                out[y, 0, :] = pixels[y, 0, :]
            continue
        for x in range(w - 1):
            d0 = np.float64(disparity[y, x])
            d1 = np.float64(disparity[y, x + 1])
            p0 = np.float64(x) - d0
            p1 = np.float64(x + 1) - d1
            if p1 < p0:
                continue  # fold: the segment runs backwards and is hidden
            lo = int(math.ceil(p0))
            hi = int(math.floor(p1))
            if lo < 0:
                lo = 0
            if hi > w - 1:
                hi = w - 1
            span = p1 - p0
            for t in range(lo, hi + 1):
                if span > 0.0:
                    s = (np.float64(t) - p0) / span
                else:
                    s = 0.0
                dz = (1.0 - s) * d0 + s * d1
                if dz > zbuf[y, t]:
                    zbuf[y, t] = dz
                    covered[y, t] = True
                    for c in range(3):
                        c0 = np.float64(pixels[y, x, c])
                        c1 = np.float64(pixels[y, x + 1, c])
                        out[y, t, c] = np.float32((1.0 - s) * c0 + s * c1)
    return out, covered


def poly_numpy(pixels, disparity):
    h, w = disparity.shape
    out = np.zeros((h, w, 3), dtype=np.float32)
    covered = np.zeros((h, w), dtype=bool)
    if w == 1:
        hit = disparity[:, 0].astype(np.float64) == 0.0
        covered[hit, 0] = True
        out[hit, 0] = pixels[hit, 0]
        return out, covered

    d = disparity.astype(np.float64)
    xs = np.arange(w, dtype=np.float64)
    p = xs[None, :] - d
    p0, p1 = p[:, :-1], p[:, 1:]
    lo = np.clip(np.ceil(p0), 0, None).astype(np.int64)
    hi = np.clip(np.floor(p1), None, w - 1).astype(np.int64)
    counts = np.where(p1 >= p0, np.maximum(hi - lo + 1, 0), 0)

    seg_y, seg_x = np.nonzero(counts > 0)
    counts = counts[seg_y, seg_x]
    total = int(counts.sum())
    if total == 0:
        return out, covered
    seg = np.repeat(np.arange(seg_y.size), counts)
    offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
    ty = seg_y[seg]
    tx0 = seg_x[seg]
    t = lo[ty, tx0] + (np.arange(total) - offsets[seg])

    sp0 = p0[ty, tx0]
    span = p1[ty, tx0] - sp0
    safe = np.where(span > 0.0, span, 1.0)
    s = np.where(span > 0.0, (t.astype(np.float64) - sp0) / safe, 0.0)
    dz = (1.0 - s) * d[ty, tx0] + s * d[ty, tx0 + 1]

    order = np.lexsort((tx0, -dz, t, ty))
    ty, tx0, t, s = ty[order], tx0[order], t[order], s[order]
    key = ty * w + t
    first = np.ones(key.shape, dtype=bool)
    first[1:] = key[1:] != key[:-1]
    ty, tx0, t, s = ty[first], tx0[first], t[first], s[first]

    c0 = pixels[ty, tx0].astype(np.float64)
    c1 = pixels[ty, tx0 + 1].astype(np.float64)
    out[ty, t] = ((1.0 - s)[:, None] * c0 + s[:, None] * c1).astype(np.float32)
    covered[ty, t] = True
    return out, covered


# ---------------------------------------------------------------------------
# disparity expansion
# ---------------------------------------------------------------------------


@njit
def expand_numba(disp, edges, k, lam, mirrored):
    rows, cols = disp.shape
    out = disp.copy()
    for i in range(rows):
        for j in range(cols):
            if not edges[i, j]:
                continue
            if j < k or j >= cols - k or i < k or i >= rows - k:
                continue
            left = disp[i, j - 1]
            right = disp[i, j + 1]
            diff = np.float64(left) - np.float64(right)
            if diff > lam:
                value = left
            elif mirrored and -diff > lam:
                value = right
            else:
                continue
            for a in range(i - k, i + k):
                for b in range(j - k, j + k):
                    out[a, b] = value
    return out


def expand_numpy(disp, edges, k, lam, mirrored):
    rows, cols = disp.shape
    out = disp.copy()
    if cols < 3:
        return out
    fires = np.zeros(disp.shape, dtype=np.int8)
    diff = np.zeros(disp.shape, dtype=np.float64)
    diff[:, 1:-1] = disp[:, :-2].astype(np.float64) - disp[:, 2:].astype(np.float64)
    inside = np.zeros(disp.shape, dtype=bool)
    inside[k : rows - k, k : cols - k] = True
    cand = edges & inside
    fires[cand & (diff > lam)] = 1
    if mirrored:
        fires[cand & ~(diff > lam) & (-diff > lam)] = 2
    # row-major visiting order; later blocks overwrite earlier ones
    for i, j in np.argwhere(fires):
        value = disp[i, j - 1] if fires[i, j] == 1 else disp[i, j + 1]
        out[i - k : i + k, j - k : j + k] = value
    return out


# ---------------------------------------------------------------------------
# Canny helpers
# ---------------------------------------------------------------------------


@njit
def nms_numba(mag, gx, gy):
    h, w = mag.shape
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            m = mag[y, x]
            if m <= 0.0:
                continue
            ax = abs(gx[y, x])
            ay = abs(gy[y, x])
            if ay <= _TAN_22 * ax:
                dy1, dx1 = 0, 1
            elif ay > _TAN_67 * ax:
                dy1, dx1 = 1, 0
            elif gx[y, x] * gy[y, x] > 0.0:
                dy1, dx1 = 1, 1
            else:
                dy1, dx1 = 1, -1
            n1 = 0.0
            n2 = 0.0
            ya, xa = y + dy1, x + dx1
            yb, xb = y - dy1, x - dx1
            if 0 <= ya < h and 0 <= xa < w:
                n1 = mag[ya, xa]
            if 0 <= yb < h and 0 <= xb < w:
                n2 = mag[yb, xb]
            if m >= n1 and m >= n2:
                out[y, x] = m
    return out


def nms_numpy(mag, gx, gy):
    h, w = mag.shape
    ax, ay = np.abs(gx), np.abs(gy)
    horiz = ay <= _TAN_22 * ax
    vert = ~horiz & (ay > _TAN_67 * ax)
    diag = ~horiz & ~vert & (gx * gy > 0.0)
    anti = ~horiz & ~vert & ~diag

    padded = np.pad(mag, 1)

    def shifted(dy, dx):
        return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    keep = np.zeros((h, w), dtype=bool)
    for sel, (dy, dx) in ((horiz, (0, 1)), (vert, (1, 0)), (diag, (1, 1)), (anti, (1, -1))):
        ok = (mag >= shifted(dy, dx)) & (mag >= shifted(-dy, -dx))
        keep |= sel & ok
    keep &= mag > 0.0
    return np.where(keep, mag, 0.0)


@njit
def hysteresis_numba(nms, low, high):
    h, w = nms.shape
    edges = np.zeros((h, w), dtype=np.bool_)
    stack = np.empty((h * w, 2), dtype=np.int64)
    top = 0
    for y in range(h):
        for x in range(w):
            if nms[y, x] >= high and not edges[y, x]:
                edges[y, x] = True
                stack[top, 0] = y
                stack[top, 1] = x
                top += 1
                while top > 0:
                    top -= 1
                    cy = stack[top, 0]
                    cx = stack[top, 1]
                    for dy in range(-1, 2):
                        for dx in range(-1, 2):
                            ny = cy + dy
                            nx = cx + dx
                            if ny < 0 or ny >= h or nx < 0 or nx >= w:
                                continue
                            if edges[ny, nx] or nms[ny, nx] < low:
                                continue
                            edges[ny, nx] = True
                            stack[top, 0] = ny
                            stack[top, 1] = nx
                            top += 1
    return edges


def hysteresis_numpy(nms, low, high):
    weak = nms >= low
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return np.zeros(nms.shape, dtype=bool)
    strong_labels = np.unique(labels[(nms >= high) & weak])
    keep = np.zeros(n + 1, dtype=bool)
    keep[strong_labels] = True
    keep[0] = False
    return keep[labels]


# ---------------------------------------------------------------------------
# hole filling
# ---------------------------------------------------------------------------


@njit
def propagate_right_numba(pixels, holes):
    h, w = holes.shape
    out = pixels.copy()
    for y in range(h):
        nxt = -1
        for x in range(w - 1, -1, -1):
            if not holes[y, x]:
                nxt = x
            elif nxt >= 0:
                out[y, x, :] = pixels[y, nxt, :]
        # trailing holes have nothing known to their right
        last = -1
        for x in range(w):
            if not holes[y, x]:
                last = x
        if last >= 0:
            for x in range(last + 1, w):
                out[y, x, :] = pixels[y, last, :]
    return out


def propagate_right_numpy(pixels, holes):
    h, w = holes.shape
    out = pixels.copy()
    idx = np.broadcast_to(np.arange(w), (h, w))
    right = np.where(holes, w, idx)
    right = np.minimum.accumulate(right[:, ::-1], axis=1)[:, ::-1]
    left = np.where(holes, -1, idx)
    left = np.maximum.accumulate(left, axis=1)
    src = np.where(right < w, right, left)
    ys, xs = np.nonzero(holes & (src >= 0))
    out[ys, xs] = pixels[ys, src[ys, xs]]
    return out


@njit
def jacobi_numba(img, holes, tol, max_iter):
    h, w, ch = img.shape
    cur = img.copy()
    nxt = img.copy()
    it = 0
    while it < max_iter:
        it += 1
        change = 0.0
        for y in range(h):
            for x in range(w):
                if not holes[y, x]:
                    continue
                for c in range(ch):
                    acc = 0.0
                    n = 0
                    if y > 0:
                        acc += cur[y - 1, x, c]
                        n += 1
                    if y < h - 1:
                        acc += cur[y + 1, x, c]
                        n += 1
                    if x > 0:
                        acc += cur[y, x - 1, c]
                        n += 1
                    if x < w - 1:
                        acc += cur[y, x + 1, c]
                        n += 1
                    v = acc / n if n > 0 else cur[y, x, c]
                    delta = abs(v - cur[y, x, c])
                    if delta > change:
                        change = delta
                    nxt[y, x, c] = v
        tmp = cur
        cur = nxt
        nxt = tmp
        if change < tol:
            break
    return cur, it


def jacobi_numpy(img, holes, tol, max_iter):
    h, w, _ = img.shape
    cur = img.copy()
    hole3 = holes[:, :, None]
    count = np.zeros((h, w), dtype=np.int64)
    count[1:, :] += 1
    count[:-1, :] += 1
    count[:, 1:] += 1
    count[:, :-1] += 1
    denom = np.maximum(count, 1)[:, :, None].astype(np.float64)
    it = 0
    while it < max_iter:
        it += 1
        acc = np.zeros_like(cur)
        acc[1:, :] += cur[:-1, :]
        acc[:-1, :] += cur[1:, :]
        acc[:, 1:] += cur[:, :-1]
        acc[:, :-1] += cur[:, 1:]
        new = np.where(count[:, :, None] > 0, acc / denom, cur)
        new = np.where(hole3, new, cur)
        change = float(np.max(np.abs(new - cur))) if holes.any() else 0.0
        cur = new
        if change < tol:
            break
    return cur, it


splat = pick(splat_numba, splat_numpy)
poly_raster = pick(poly_numba, poly_numpy)
expand = pick(expand_numba, expand_numpy)
nms = pick(nms_numba, nms_numpy)
hysteresis = pick(hysteresis_numba, hysteresis_numpy)
propagate_right = pick(propagate_right_numba, propagate_right_numpy)
jacobi = pick(jacobi_numba, jacobi_numpy)

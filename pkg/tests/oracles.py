"""Independent naive re-implementations used as test oracles.

Everything here is written from the behavioural description with plain
Python loops and shares no code with the package.
"""

import math

import numpy as np


def round_half_away(v):
    return int(math.floor(v + 0.5)) if v >= 0 else -int(math.floor(-v + 0.5))


def splat_oracle(pixels, disparity):
    """Enumerate every landing per target, pick largest d then smallest x."""
    h, w = disparity.shape
    warped = np.zeros((h, w, 3), dtype=np.float32)
    mask = np.ones((h, w), dtype=bool)
    for y in range(h):
        landings = {}
        for x in range(w):
            t = round_half_away(float(x) - float(disparity[y, x]))
            if 0 <= t < w:
                landings.setdefault(t, []).append((float(disparity[y, x]), x))
        for t, cands in landings.items():
            best_d = max(d for d, _ in cands)
            best_x = min(x for d, x in cands if d == best_d)
            warped[y, t] = pixels[y, best_x]
            mask[y, t] = False
    return warped, mask


def alg1_oracle(I, E, k, lam):
    """Straight transcription of the expansion pseudocode with Python lists."""
    rows, cols = len(I), len(I[0])
    out = [list(r) for r in I]
    for i in range(rows):
        for j in range(cols):
            if not E[i][j]:
                continue
            if k <= j < cols - k:
                if float(I[i][j - 1]) - float(I[i][j + 1]) > lam and k <= i < rows - k:
                    for a in range(i - k, i + k):
                        for b in range(j - k, j + k):
                            out[a][b] = I[i][j - 1]
    return np.array(out, dtype=np.asarray(I).dtype)


def poly_row_oracle(colors, disp):
    """Rasterise one row's polyline by testing each target against every segment."""
    w = len(disp)
    out = [None] * w
    best = [-math.inf] * w
    for t in range(w):
        for x in range(w - 1):
            p0 = x - float(disp[x])
            p1 = x + 1 - float(disp[x + 1])
            if p1 < p0 or not (p0 <= t <= p1):
                continue
            s = (t - p0) / (p1 - p0) if p1 > p0 else 0.0
            dz = (1 - s) * float(disp[x]) + s * float(disp[x + 1])
            if dz > best[t]:
                best[t] = dz
                out[t] = [
                    np.float32((1 - s) * float(colors[x][c]) + s * float(colors[x + 1][c])) for c in range(3)
                ]
    covered = [o is not None for o in out]
    if not any(covered):
        return np.asarray(colors, dtype=np.float32)
    res = []
    for t in range(w):
        if covered[t]:
            res.append(out[t])
            continue
        dl = next((t - u for u in range(t, -1, -1) if covered[u]), None)
        dr = next((u - t for u in range(t, w) if covered[u]), None)
        if dr is not None and (dl is None or dr <= dl):
            res.append(out[t + dr])
        else:
            res.append(out[t - dl])
    return np.array(res, dtype=np.float32)


def propagate_oracle(pixels, holes):
    h, w = holes.shape
    out = pixels.copy()
    for y in range(h):
        for x in range(w):
            if not holes[y, x]:
                continue
            src = next((u for u in range(x + 1, w) if not holes[y, u]), None)
            if src is None:
                src = next((u for u in range(x - 1, -1, -1) if not holes[y, u]), None)
            if src is not None:
                out[y, x] = pixels[y, src]
    return out


def conv_oracle(x, kernel, bias, stride=1):
    """Direct nested-loop 'same' convolution on one ``(C, H, W)`` image."""
    c, h, w = x.shape
    o, _, kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    ho, wo = (h - 1) // stride + 1, (w - 1) // stride + 1
    out = np.zeros((o, ho, wo))
    for oc in range(o):
        for i in range(ho):
            for j in range(wo):
                acc = bias[oc]
                for ic in range(c):
                    for dy in range(kh):
                        for dx in range(kw):
                            y = i * stride + dy - ph
                            xx = j * stride + dx - pw
                            if 0 <= y < h and 0 <= xx < w:
                                acc += kernel[oc, ic, dy, dx] * x[ic, y, xx]
                out[oc, i, j] = acc
    return out


def fuu_oracle(f_m, f_coarse, z, q, r):
    """Gated update with explicit per-element formulas."""
    _, h, w = f_m.shape
    up = np.zeros((f_coarse.shape[0], h, w))
    for y in range(h):
        for x in range(w):
            up[:, y, x] = f_coarse[:, y // 2, x // 2]
    cat = np.concatenate([f_m, up])
    zz = conv_oracle(cat, *z)
    qq = conv_oracle(cat, *q)
    rr = conv_oracle(cat, *r)
    out = np.empty_like(zz)
    for idx in np.ndindex(zz.shape):
        g = 1.0 / (1.0 + math.exp(-zz[idx]))
        out[idx] = math.tanh(qq[idx]) * g + (1.0 - g) * math.tanh(rr[idx])
    return out


def ssim_oracle(a, b, c1=0.01**2, c2=0.03**2):
    """Windowed SSIM by direct summation over each 11x11 window of luma."""
    wts = [0.299, 0.587, 0.114]
    la = sum(wts[c] * a[..., c].astype(np.float64) for c in range(3))
    lb = sum(wts[c] * b[..., c].astype(np.float64) for c in range(3))
    g = [math.exp(-((i - 5) ** 2) / (2 * 1.5**2)) for i in range(11)]
    s = sum(g)
    g = [v / s for v in g]
    h, w = la.shape
    vals = []
    for y in range(h - 10):
        for x in range(w - 10):
            mx = my = sxx = syy = sxy = 0.0
            for dy in range(11):
                for dx in range(11):
                    wt = g[dy] * g[dx]
                    u, v = la[y + dy, x + dx], lb[y + dy, x + dx]
                    mx += wt * u
                    my += wt * v
                    sxx += wt * u * u
                    syy += wt * v * v
                    sxy += wt * u * v
            sxx -= mx * mx
            syy -= my * my
            sxy -= mx * my
            vals.append(((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2)))
    return sum(vals) / len(vals)


def canny_oracle(img, sigma, low, high, relative=True):
    """Textbook Canny with clamped borders and arctan2 direction bins."""
    h, w = img.shape
    radius = int(math.ceil(3 * sigma))
    taps = [math.exp(-(i * i) / (2 * sigma * sigma)) for i in range(-radius, radius + 1)]
    tot = sum(taps)
    taps = [t / tot for t in taps]

    def clamp(v, n):
        return min(max(v, 0), n - 1)

    tmp = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            tmp[y, x] = sum(taps[i] * img[clamp(y + i - radius, h), x] for i in range(len(taps)))
    blur = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            blur[y, x] = sum(taps[i] * tmp[y, clamp(x + i - radius, w)] for i in range(len(taps)))

    def px(y, x):
        return blur[clamp(y, h), clamp(x, w)]

    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            gx[y, x] = (
                (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1))
                - (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1))
            )
            gy[y, x] = (
                (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1))
                - (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1))
            )
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0:
        return np.zeros((h, w), dtype=bool)
    if relative:
        low, high = low * peak, high * peak

    def m(y, x):
        return mag[y, x] if 0 <= y < h and 0 <= x < w else 0.0

    thin = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            if mag[y, x] <= 0:
                continue
            ang = math.degrees(math.atan2(gy[y, x], gx[y, x])) % 180.0
            if ang < 22.5 or ang >= 157.5:
                dy, dx = 0, 1
            elif ang < 67.5:
                dy, dx = 1, 1
            elif ang < 112.5:
                dy, dx = 1, 0
            else:
                dy, dx = 1, -1
            if mag[y, x] >= m(y + dy, x + dx) and mag[y, x] >= m(y - dy, x - dx):
                thin[y, x] = mag[y, x]

    edges = np.zeros((h, w), dtype=bool)
    queue = [(y, x) for y in range(h) for x in range(w) if thin[y, x] >= high]
    for y, x in queue:
        edges[y, x] = True
    while queue:
        y, x = queue.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and not edges[ny, nx] and thin[ny, nx] >= low:
                    edges[ny, nx] = True
                    queue.append((ny, nx))
    return edges

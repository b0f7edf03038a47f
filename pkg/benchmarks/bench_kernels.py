"""Time each numba kernel against its numpy twin.

    python3 benchmarks/bench_kernels.py [--size 256] [--repeat 5]

Both twins are timed in one process regardless of STEREOCONV_DISABLE_NUMBA;
the first numba call (compilation) is excluded.
"""

import argparse
import time

import numpy as np

from stereoconv import kernels
from stereoconv._jit import HAVE_NUMBA
from stereoconv.disparity import gaussian_blur, sobel
from stereoconv.synthetic import bar_scene


def _inputs(size: int):
    rng = np.random.default_rng(0)
    scene = bar_scene(size, size, (size // 4, 3 * size // 4, size // 3, 2 * size // 3), max(2, size // 8), "blocks")
    pixels = scene.left.pixels
    disp = scene.disparity.values + (rng.random((size, size)) * 2).astype(np.float32)
    _, zbuf, _ = kernels.splat_numpy(pixels, disp)
    holes = zbuf == kernels.NO_SPLAT
    gx, gy = sobel(gaussian_blur(disp.astype(np.float64), 1.4))
    mag = np.hypot(gx, gy)
    thin = kernels.nms_numpy(mag, gx, gy)
    edges = rng.random((size, size)) < 0.1
    img = pixels.astype(np.float64)
    img[holes] = img[~holes].mean(axis=0)
    peak = float(mag.max())
    return {
        "splat": (pixels, disp),
        "poly": (pixels, disp),
        "expand": (disp, edges, 3, 1.0, False),
        "nms": (mag, gx, gy),
        "hysteresis": (thin, 0.1 * peak, 0.3 * peak),
        "propagate_right": (pixels.copy(), holes),
        "jacobi": (img, holes, 1e-4, 2000),
    }


def _best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    inputs = _inputs(args.size)
    print(f"{'kernel':<16} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, call_args in inputs.items():
        fast = getattr(kernels, f"{name}_numba")
        slow = getattr(kernels, f"{name}_numpy")
        fast(*call_args)  # compile
        t_fast = _best(fast, call_args, args.repeat)
        t_slow = _best(slow, call_args, args.repeat)
        print(f"{name:<16} {1e3 * t_fast:>10.3f} {1e3 * t_slow:>10.3f} {t_slow / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()

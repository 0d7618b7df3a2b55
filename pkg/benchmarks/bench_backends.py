"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_backends.py [--width 346 --height 260 --windows 40 --threads 1]

Prints per-kernel timings (median of repeats) and full-pipeline throughput for
every available backend, plus the native/python speed-up.
"""
import argparse
import statistics
import time

import numpy as np

from evflow import _backend
from evflow.config import build_config
from evflow.datatypes import SensorGeometry
from evflow.pipeline import run_pipeline
from evflow.synthetic import SyntheticSceneSpec, generate_synthetic_scene


def _time(fn, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples) * 1e3


def kernel_cases(h, w, threads, rng):
    bits = (rng.random((h, w)) < 0.05).astype(np.uint8)
    img = rng.random((h, w)) * 255
    fx, fy = rng.normal(0, 2, (2, h, w))
    ix, iy, it = rng.normal(0, 5, (3, h, w))
    z = np.zeros((h, w))
    return {
        "edt_squared": lambda k: k.edt_squared(bits, threads),
        "denoise": lambda k: k.denoise(bits, 1, threads),
        "fill": lambda k: k.fill(bits, 4, threads),
        "warp_bilinear": lambda k: k.warp_bilinear(img, fx, fy, threads),
        "hs_relax x50": lambda k: k.hs_relax(ix, iy, it, 50.0, 50, z, z, threads),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=346)
    ap.add_argument("--height", type=int, default=260)
    ap.add_argument("--windows", type=int, default=40)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    backends = _backend.available()
    original = _backend.name()
    rng = np.random.default_rng(0)
    cases = kernel_cases(args.height, args.width, args.threads, rng)

    print(f"kernels at {args.width}x{args.height}, threads={args.threads} (median ms)")
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in backends) + f"{'speed-up':>12}")
    for name, fn in cases.items():
        ms = {}
        for b in backends:
            _backend.use(b)
            fn(_backend.kernels())
            ms[b] = _time(lambda: fn(_backend.kernels()), args.repeats)
        ratio = ms["python"] / ms["native"] if "native" in ms else float("nan")
        print(f"{name:<16}" + "".join(f"{ms[b]:>12.2f}" for b in backends) + f"{ratio:>11.1f}x")

    geometry = SensorGeometry(args.width, args.height)
    size = min(args.width, args.height) // 4
    spec = SyntheticSceneSpec(geometry, "checkerboard", size, (2, 1), args.windows, 2,
                              args.width * args.height // 500, 0)
    events, _ = generate_synthetic_scene(spec)
    cfg = build_config({"width": args.width, "height": args.height, "dt_us": spec.window_us,
                        "threads": args.threads})
    print(f"\nfull pipeline, {args.windows} windows")
    rates = {}
    for b in backends:
        _backend.use(b)
        summary = run_pipeline(cfg, events)
        rates[b] = summary.throughput
        print(f"[{b}] {summary.throughput:.1f} windows/s")
        print(summary.timings.table(b), end="")
    if "native" in rates:
        print(f"\nnative/python throughput: {rates['native'] / rates['python']:.1f}x")
    _backend.use(original)


if __name__ == "__main__":
    main()

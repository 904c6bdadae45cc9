"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each row reports the best-of-N wall time for both backends, the speedup and
the largest absolute difference between their results.
"""

import argparse
import timeit

import numpy as np

from abspin import _kernels_py

try:
    from abspin import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    durations = rng.uniform(0.1, 1.0, size=6)
    rates = rng.normal(size=(6, 3))
    xy = rng.normal(scale=2.0, size=(64, 2))
    centers = rng.normal(size=(3, 2))
    amps = rng.normal(size=3)
    widths = rng.uniform(0.5, 1.5, size=3)
    return [
        ("magnus_product 1e3 steps", "magnus_product", (durations, rates, 1000)),
        ("magnus_product 1e5 steps", "magnus_product", (durations, rates, 100_000)),
        ("angle_sum 64 vertices", "angle_sum", (xy, 0.1, 0.2)),
        ("min_distance 64 vertices", "min_distance", (xy, 0.1, 0.2)),
        ("gauge_line_integral 63x1e4", "gauge_line_integral", (xy, centers, amps, widths, 10_000)),
        ("solenoid_line_integral 63x1e4", "solenoid_line_integral", (xy, 0.1, 0.2, 1.0, 10_000)),
    ]


def best_time(fn, args, repeat):
    fn(*args)  # warm-up
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05 and number < 10_000:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if _ckernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':32s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s} {'max diff':>10s}")
    for label, name, fargs in cases(rng):
        py, cy = getattr(_kernels_py, name), getattr(_ckernels, name)
        t_py = best_time(py, fargs, args.repeat)
        t_cy = best_time(cy, fargs, args.repeat)
        diff = float(np.max(np.abs(np.asarray(py(*fargs)) - np.asarray(cy(*fargs)))))
        print(f"{label:32s} {t_py:12.3e} {t_cy:12.3e} {t_py / t_cy:9.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()

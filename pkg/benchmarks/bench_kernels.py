"""Compare the compiled and NumPy kernel backends.

    python benchmarks/bench_kernels.py [--photons 1000000] [--points 262144]
"""
import argparse
import timeit

import numpy as np

from pathmark import kernels
from pathmark.harness import sample_photons
from pathmark.optics import ExperimentConfig, simulate


def best_of(fn, repeat=5):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--photons", type=int, default=1_000_000)
    ap.add_argument("--points", type=int, default=2 ** 18)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    names = sorted(kernels.BACKENDS)
    if "cython" not in names:
        print("compiled backend not built; only the NumPy fallback is available")
    rng = np.random.default_rng(0)
    e_h = rng.normal(size=args.points) + 1j * rng.normal(size=args.points)
    e_v = rng.normal(size=args.points) + 1j * rng.normal(size=args.points)
    cdf = np.cumsum([0.25, 0.25, 0.0, 0.25, 0.0, 0.25])
    summary = simulate(ExperimentConfig(markers=True, analyzer="L")).summary

    cases = {
        f"uniforms ({args.photons:,})": lambda k: k.uniforms(7, 0, args.photons),
        f"categorical ({args.photons:,})": lambda k: k.categorical(7, 0, args.photons, cdf),
        f"projected_intensity ({args.points:,})": lambda k: k.projected_intensity(e_h, e_v, 0.6 + 0.1j, 0.2 - 0.7j),
        f"sample_photons ({args.photons:,})": lambda k: sample_photons(summary, args.photons, 7, backend=k.NAME),
    }
    print(f"{'kernel':<34}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for label, fn in cases.items():
        times = {n: best_of(lambda: fn(kernels.BACKENDS[n]), args.repeat) for n in names}
        row = f"{label:<34}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in names)
        if len(names) == 2:
            row += f"{times['python'] / times['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()

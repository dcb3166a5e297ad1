"""Compiled loops vs numpy twins for the pairwise kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Run with DBAR_DIRAC_DISABLE_NUMBA=1 to confirm the package imports and runs
without numba (only the numpy column is printed then).
"""

import argparse
import time

import numpy as np

from dbar_dirac import _kernels
from dbar_dirac._accel import HAVE_NUMBA


def cases(rng):
    pts = rng.standard_normal(900) + 1j * rng.standard_normal(900)
    tg = 1.5 * np.exp(2j * np.pi * np.arange(256) / 256)
    w = rng.standard_normal(900) + 1j * rng.standard_normal(900)
    ks = 3 * np.exp(2j * np.pi * np.arange(128) / 128)
    dens = rng.standard_normal((900, 128)) + 0j
    return {
        "cauchy_sum 256x900": lambda b: _kernels.cauchy_sum(tg, pts, w, backend=b),
        "cauchy_matrix 900^2": lambda b: _kernels.cauchy_matrix(pts, backend=b),
        "phase_sum 128x128x900": lambda b: _kernels.phase_sum(ks, ks, pts, dens, backend=b),
    }


def best_of(fn, repeat):
    fn()  # warm-up (includes compilation for the loop backend)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in backends)
          + ("   max |diff|" if HAVE_NUMBA else ""))
    for name, run in cases(rng).items():
        row = [best_of(lambda: run(b), args.repeat) for b in backends]
        line = f"{name:<24}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row)
        if HAVE_NUMBA:
            ref = run("numpy")
            line += f"   {np.abs(run('numba') - ref).max() / np.abs(ref).max():.1e}"
        print(line)


if __name__ == "__main__":
    main()

"""Compiled vs NumPy kernels: rho root-finding, lattice ball averages, Peetre sup.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from parabolic_lp import _backend
from parabolic_lp.dilation import validate_matrix
from parabolic_lp.grid import GridFunction, PeriodicGrid
from parabolic_lp.maximal import ball_averages, geometric_grid, peetre_max


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases(group, rng):
    pts = rng.standard_normal((100_000, 2)) * 3
    small = PeriodicGrid(2, L=4.0, N=64)
    f = GridFunction(small, rng.standard_normal(small.shape))
    radii = geometric_grid(small.spacing, 1.0, 0.5, 2)
    return {
        "rho (100k points)": lambda: group.rho(pts),
        "ball averages (64^2, 9 radii)": lambda: ball_averages(f, group, radii, method="direct")[0],
        "peetre (64^2, N=1, R=1)": lambda: peetre_max(f, group, 1.0, 1.0).samples,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    group = validate_matrix([[1.0, 0.0], [0.0, 2.0]])
    names = [n for n in ("compiled", "python") if n in _backend.BACKENDS]
    results = {}
    for name in names:
        prev = _backend.use(name)
        try:
            for label, fn in cases(group, np.random.default_rng(0)).items():
                results[(label, name)] = best_of(fn, args.repeat)
        finally:
            _backend.use(prev)
    print(f"{'kernel':32s}" + "".join(f"{n:>12s}" for n in names) + "   speedup   max|diff|")
    for label in cases(group, np.random.default_rng(0)):
        row = [results[(label, n)][0] for n in names]
        line = f"{label:32s}" + "".join(f"{t:11.3f}s" for t in row)
        if len(names) == 2:
            diff = np.max(np.abs(results[(label, names[0])][1] - results[(label, names[1])][1]))
            line += f"{row[1] / row[0]:9.1f}x   {diff:.2e}"
        print(line)


if __name__ == "__main__":
    main()

"""Compare the numba and pure-numpy kernel backends.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Each kernel is
warmed up once per backend (JIT compilation excluded), then timed as the best
of N repeats. Results from both backends are checked for agreement.
"""

import argparse
import time

import numpy as np

from unified_qsl import _accel, fock, kernels


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    t = np.linspace(0.0, 1.0, 2001)
    rho = fock.coherent_state(1.5, 20).density().entries
    xs = np.linspace(-4, 4, 101)
    yield "gml_min_sq p=2, 2001 times", lambda: kernels.gml_min_sq(2.0, t)[0]
    yield "gml_min_sq p=0.1, 2001 times", lambda: kernels.gml_min_sq(0.1, t)[0]
    yield "gml_min_sq p=10, 2001 times", lambda: kernels.gml_min_sq(10.0, t)[0]
    yield "wigner 101x101, cutoff 20", lambda: kernels.wigner_grid(rho, xs, xs)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    print(f"{'kernel':34s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup  max|diff|")
    for name, fn in cases():
        results = {}
        for b in backends:
            prev = _accel.set_backend(b)
            try:
                results[b] = best_of(fn, args.repeat)
            finally:
                _accel.set_backend(prev)
        row = f"{name:34s}" + "".join(f"{results[b][0] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            diff = np.max(np.abs(results["numpy"][1] - results["numba"][1]))
            row += f"  {results['numpy'][0] / results['numba'][0]:9.1f}x  {diff:9.2e}"
        print(row)


if __name__ == "__main__":
    main()

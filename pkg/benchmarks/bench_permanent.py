"""Time the compiled and numpy permanent kernels side by side.

    python benchmarks/bench_permanent.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from bosonwalk.permanent import BandedMatrix, available_backends, permanent_banded, permanent_dense


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        val = fn()
        times.append(time.perf_counter() - t0)
    return min(times), val


def random_banded(n, lower, upper, cyclic, rng):
    w = rng.standard_normal((n, lower + upper + 1)) + 1j * rng.standard_normal((n, lower + upper + 1))
    return BandedMatrix(n, lower, upper, cyclic, w)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = available_backends()
    names = sorted(backends)
    print(f"{'case':<28}" + "".join(f"{n + ' [s]':>14}" for n in names) + f"{'speedup':>10}")

    cases = []
    for n in (8, 12, 16, 20):
        a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2 * n)
        cases.append((f"dense n={n}", lambda b, a=a: permanent_dense(a, backend=b)))
    for n, lo, up, cyc in ((64, 2, 2, False), (64, 4, 4, False), (40, 2, 2, True), (40, 3, 3, True)):
        bm = random_banded(n, lo, up, cyc, rng)
        label = f"{'cyclic' if cyc else 'banded'} n={n} B={lo + up}"
        cases.append((label, lambda b, bm=bm: permanent_banded(bm, backend=b)))

    for label, fn in cases:
        row, vals = [], []
        for n in names:
            t, res = best_of(lambda: fn(backends[n]), args.repeat)
            row.append(t)
            vals.append(res.value)
        if len(vals) > 1:
            rel = abs(vals[0] - vals[1]) / max(abs(vals[0]), 1e-300)
            assert rel < 1e-9, f"{label}: backends disagree ({rel:.2e})"
        speed = row[names.index("python")] / row[names.index("cython")] if "cython" in names else float("nan")
        print(f"{label:<28}" + "".join(f"{t:>14.4f}" for t in row) + f"{speed:>10.1f}")


if __name__ == "__main__":
    main()

"""Time the compiled kernels against the NumPy fallback.

Run from the repository root after building the extension:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --n 20000 --d 32 --k 200 --repeat 5
"""

import argparse
import timeit
from contextlib import contextmanager

import numpy as np

from divfrontier import _backend, _kernels_py
from divfrontier.quantization import kmeans_fit

try:
    from divfrontier import _kernels as compiled
except ImportError:
    compiled = None


@contextmanager
def use_kernels(module):
    saved = {name: getattr(_backend, name) for name in ("assign_labels", "update_centers", "knn_indices")}
    try:
        for name in saved:
            setattr(_backend, name, getattr(module, name))
        yield
    finally:
        for name, fn in saved.items():
            setattr(_backend, name, fn)


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000, help="points for assign_labels and kmeans")
    ap.add_argument("--knn-n", type=int, default=4_000, help="points for the k-NN search")
    ap.add_argument("--d", type=int, default=16)
    ap.add_argument("--k", type=int, default=100, help="number of centers")
    ap.add_argument("--neighbors", type=int, default=13)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")

    rng = np.random.default_rng(0)
    X = rng.normal(size=(args.n, args.d))
    C = np.ascontiguousarray(X[rng.choice(args.n, args.k, replace=False)])
    Z = rng.normal(size=(args.knn_n, args.d))

    cases = {
        f"assign_labels n={args.n} k={args.k} d={args.d}": lambda m: (lambda: m.assign_labels(X, C)),
        f"knn_indices n={args.knn_n} k={args.neighbors} d={args.d}": lambda m: (lambda: m.knn_indices(Z, args.neighbors)),
    }
    print(f"{'case':<44} {'numpy s':>10} {'compiled s':>11} {'speedup':>8}")
    for label, make in cases.items():
        slow = best_of(make(_kernels_py), args.repeat)
        fast = best_of(make(compiled), args.repeat)
        print(f"{label:<44} {slow:>10.4f} {fast:>11.4f} {slow / fast:>7.2f}x")

    times = {}
    for name, module in (("numpy", _kernels_py), ("compiled", compiled)):
        with use_kernels(module):
            times[name] = best_of(lambda: kmeans_fit(X, args.k, seed=0), args.repeat)
    label = f"kmeans_fit end to end n={args.n} k={args.k}"
    print(f"{label:<44} {times['numpy']:>10.4f} {times['compiled']:>11.4f} "
          f"{times['numpy'] / times['compiled']:>7.2f}x")


if __name__ == "__main__":
    main()

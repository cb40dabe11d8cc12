"""Compare the numba and pure-numpy kernels.

Two measurements:

* kernel level: ``best_split`` and ``predict_forest`` called directly with
  both implementations in one process (numba timings exclude compilation);
* end to end: forest training in a subprocess with ``JUDGEKIT_DISABLE_NUMBA``
  set and unset, which is what users actually toggle.

Usage::

    python3 benchmarks/bench_kernels.py [--rows 4000] [--features 30] [--repeats 5]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from judgekit import _accel, kernels
from judgekit.models import TrainConfig, train_forest


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def problem(rows: int, features: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, features)).round(2)
    y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.5, size=rows) > 0).astype(np.float64)
    return X, y


def kernel_bench(rows: int, features: int, repeats: int) -> list[tuple[str, float, float]]:
    X, y = problem(rows, features)
    idx = np.arange(rows, dtype=np.int64)
    feats = np.arange(features, dtype=np.int64)
    forest = train_forest(X, y.astype(int), TrainConfig(n_trees=50, max_depth=8, seed=0))
    pargs = (X, forest.feature, forest.threshold, forest.left, forest.right, forest.value, forest.roots)

    results = []
    for name, nb, np_ in (
        ("best_split", lambda: kernels.best_split_nb(X, y, idx, feats, 5), lambda: kernels.best_split_np(X, y, idx, feats, 5)),
        ("predict_forest", lambda: kernels.predict_forest_nb(*pargs), lambda: kernels.predict_forest_np(*pargs)),
    ):
        nb()  # compile
        results.append((name, best_of(nb, repeats), best_of(np_, repeats)))
    return results


_TRAIN_SNIPPET = """
import time, numpy as np
from judgekit import _accel
from judgekit.models import TrainConfig, train_forest
rng = np.random.default_rng(0)
X = rng.normal(size=({rows}, {features})).round(2)
y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
cfg = TrainConfig(n_trees=20, max_depth=8, seed=0)
train_forest(X[:200], y[:200], cfg)  # warm up / compile
t0 = time.perf_counter()
train_forest(X, y, cfg)
print(_accel.backend_name(), time.perf_counter() - t0)
"""


def train_bench(rows: int, features: int, disable: bool) -> tuple[str, float]:
    env = dict(os.environ, JUDGEKIT_DISABLE_NUMBA="1" if disable else "0")
    code = _TRAIN_SNIPPET.format(rows=rows, features=features)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, seconds = out.stdout.split()
    return backend, float(seconds)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=4000)
    ap.add_argument("--features", type=int, default=30)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1

    print(f"rows={args.rows} features={args.features} (best of {args.repeats})")
    print(f"{'kernel':<16}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, t_nb, t_np in kernel_bench(args.rows, args.features, args.repeats):
        print(f"{name:<16}{t_nb * 1e3:>12.2f}{t_np * 1e3:>12.2f}{t_np / t_nb:>9.1f}x")

    timings = dict(train_bench(args.rows, args.features, disable) for disable in (False, True))
    print(f"{'train_forest':<16}{timings['numba'] * 1e3:>12.1f}{timings['numpy'] * 1e3:>12.1f}"
          f"{timings['numpy'] / timings['numba']:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

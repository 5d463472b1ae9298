#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback on a
workload shaped like the default profile: 88 training rows x 7 features,
100 trees, and full coalition enumeration against an 88-row background.

Run:  python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from toolwear.kernels import available_backends
from toolwear.signalprep import assemble_dataset, split
from toolwear.synth import default_paper_profile, generate


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    dataset = assemble_dataset(generate(default_paper_profile()))
    parts = split(dataset, 0.6, seed=7)
    X = np.ascontiguousarray(parts.train.X)
    y = np.ascontiguousarray(parts.train.y)
    Xtest = np.ascontiguousarray(parts.test.X)
    masks = np.arange(1 << 7, dtype=np.int64)
    x = np.ascontiguousarray(Xtest[0])

    rows = {}
    for name, impl in sorted(backends.items()):
        build = lambda: impl.build_forest(X, y, 100, -1, 1, 2, True, 7)
        t_build = best_of(build, args.repeats)
        feature, threshold, left, right, c0, c1, roots = build()
        vote = (c1 > c0).astype(np.int8)
        t_predict = best_of(
            lambda: impl.predict_votes(feature, threshold, left, right,
                                       vote, roots, Xtest), args.repeats)
        t_coalition = best_of(
            lambda: impl.coalition_values(feature, threshold, left, right,
                                          vote, roots, x, X, masks),
            args.repeats)
        rows[name] = (t_build, t_predict, t_coalition)

    print(f"{'backend':<10} {'train 100 trees':>16} {'predict 58':>12} "
          f"{'128 coalitions':>15}")
    for name, (tb, tp, tc) in rows.items():
        print(f"{name:<10} {tb * 1e3:>13.2f} ms {tp * 1e6:>9.0f} us "
              f"{tc * 1e3:>12.2f} ms")
    if {"pure", "compiled"} <= rows.keys():
        print("\nspeedup (pure / compiled):")
        for label, i in (("train", 0), ("predict", 1), ("coalitions", 2)):
            ratio = rows["pure"][i] / rows["compiled"][i]
            print(f"  {label:<11} {ratio:6.1f}x")


if __name__ == "__main__":
    main()

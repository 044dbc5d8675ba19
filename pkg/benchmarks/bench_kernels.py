"""Compare the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on the same inputs under both backends; the table shows
the best wall time of ``--repeat`` runs and the speed-up.
"""
import argparse
import sys
import timeit

import numpy as np

from ransomflow._kernels import _fallback
from ransomflow.classifiers.mlp import epoch_order, initial_weights
from ransomflow.classifiers.tree import nlogn_table
from ransomflow.synth import generate_capture, goodware_profile

try:
    from ransomflow._kernels import _ckernels
except ImportError:
    _ckernels = None


def workloads():
    capture, _, _ = generate_capture(goodware_profile(1, conversations=(400, 400), packets=(20, 40)))

    rng = np.random.default_rng(0)
    n = 20_000
    values = np.sort(rng.integers(0, 5000, n).astype(np.float64))
    labels = rng.integers(0, 2, n).astype(np.int64)
    table = nlogn_table(n)

    X = rng.random((300, 9))
    T = np.eye(2)[rng.integers(0, 2, 300)]
    W1, W2 = initial_weights(rng, 9, 5, 2)
    order = epoch_order(rng, 300, 20)

    def scan(mod):
        return lambda: mod.scan_records(capture, 24, False, False, True)

    def threshold(mod):
        return lambda: mod.best_threshold(values, labels, 2, 2, table)

    def mlp(mod):
        return lambda: mod.mlp_train(X, T, W1.copy(), W2.copy(), order, 0.3, 0.2)

    n_packets = len(_fallback.scan_records(capture, 24, False, False, True)[0])
    return [(f"scan_records ({n_packets} packets)", scan),
            (f"best_threshold ({n} values)", threshold),
            (f"mlp_train ({len(order)} updates)", mlp)]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the fallback is available", file=sys.stderr)
    print(f"{'kernel':<36}{'cython (ms)':>14}{'python (ms)':>14}{'speed-up':>10}")
    for name, make in workloads():
        py = min(timeit.repeat(make(_fallback), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:<36}{'-':>14}{py:>14.2f}{'-':>10}")
            continue
        cy = min(timeit.repeat(make(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<36}{cy:>14.2f}{py:>14.2f}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()

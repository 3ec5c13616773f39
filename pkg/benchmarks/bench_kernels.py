"""Compare the compiled and pure-Python chain loops.

Usage::

    python3 benchmarks/bench_kernels.py [--steps N] [--repeats R]

Both backends run the same seeded chain; the script checks that they end in
the same state and reports nanoseconds per MH step and the speed-up.
"""
import argparse
import time

import numpy as np

from shus._backend import available_backends
from shus.adapt import SHUS, SHUSAlpha, WLDeterministic
from shus.chain import Chain
from shus.model import TargetModel

SCHEMES = {
    "shus": SHUS(1.0),
    "wl": WLDeterministic(12.0),
    "shus-alpha": SHUSAlpha(1.0, 0.6),
}


def time_backend(backend, scheme, n_steps, repeats):
    best = float("inf")
    for _ in range(repeats):
        chain = Chain(TargetModel(5.0, 12), scheme, seed=0, backend=backend)
        t0 = time.perf_counter()
        chain.run(n_steps)
        best = min(best, time.perf_counter() - t0)
    return best, chain


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=200_000, help="steps for the compiled loop")
    p.add_argument("--python-steps", type=int, default=20_000, help="steps for the pure-Python loop")
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args(argv)
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the pure-Python loop is available")
    print(f"{'scheme':<12}{'backend':<10}{'steps':>10}{'ns/step':>12}")
    for name, scheme in SCHEMES.items():
        per_step = {}
        for backend in backends:
            n = args.steps if backend == "compiled" else args.python_steps
            t, _ = time_backend(backend, scheme, n, args.repeats)
            per_step[backend] = t / n * 1e9
            print(f"{name:<12}{backend:<10}{n:>10}{per_step[backend]:>12.1f}")
        if len(per_step) == 2:
            n = args.python_steps
            a = Chain(TargetModel(5.0, 12), scheme, seed=0, backend="compiled").run(n)
            b = Chain(TargetModel(5.0, 12), scheme, seed=0, backend="python").run(n)
            same = a.position == b.position and np.array_equal(a.nu, b.nu)
            print(f"{'':<12}speed-up {per_step['python'] / per_step['compiled']:.1f}x, identical states: {same}")


if __name__ == "__main__":
    main()

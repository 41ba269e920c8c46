#!/usr/bin/env python3
"""Compare the jitted and pure-numpy kernel backends on native checks.

Generates one executed history per size and run, times check() under each
backend, and prints a CSV with per-model means and the jit speedup. The
numbers answer one question: how much the numba kernels buy over the
fallback as histories grow.

    python3 benchmarks/compare_backends.py --ops-min 100 --ops-max 600

Writes CSV to stdout; redirect to keep it.
"""

import argparse
import sys

from causalcheck import Engine, GenConfig, check, execute_simulated, generate, kernels


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ops-min", type=int, default=100)
    ap.add_argument("--ops-max", type=int, default=600)
    ap.add_argument("--step", type=int, default=100)
    ap.add_argument("--processes", type=int, default=4)
    ap.add_argument("--variables", type=int, default=5)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument(
        "--models", default="cc,ccv,cm1,cm2", help="comma-separated model names"
    )
    return ap.parse_args(argv)


def mean_times(histories, models, backend):
    kernels.set_backend(backend)
    kernels.warmup()
    sums = dict.fromkeys(models, 0.0)
    for h in histories:
        for m in models:
            sums[m] += check(h, m, Engine.NATIVE).elapsed_ms
    return {m: sums[m] / len(histories) for m in models}


def main(argv=None) -> int:
    args = parse_args(argv)
    if not kernels.HAS_NUMBA:
        print("numba is not importable; nothing to compare", file=sys.stderr)
        return 2
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    original = kernels.get_backend()
    print("ops,model,numba_ms,numpy_ms,speedup")
    try:
        for size in range(args.ops_min, args.ops_max + 1, args.step):
            txns = max(1, size // args.processes)
            histories = []
            for run in range(args.runs):
                seed = args.seed + 6007 * (size + run)
                histories.append(
                    execute_simulated(
                        generate(
                            GenConfig(args.processes, txns, args.variables, seed=seed)
                        ),
                        seed=seed + 1,
                    )
                )
            jit = mean_times(histories, models, "numba")
            plain = mean_times(histories, models, "numpy")
            ops = txns * args.processes
            for m in models:
                speedup = plain[m] / jit[m] if jit[m] > 0 else float("inf")
                print(f"{ops},{m},{jit[m]:.3f},{plain[m]:.3f},{speedup:.2f}")
    finally:
        kernels.set_backend(original)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

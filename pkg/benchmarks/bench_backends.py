"""Micro-benchmark of the kernel lanes (numpy vs numba).

Times the three hot kernels — batched xi evaluation and the two batched
moment estimators — on a 3-qubit state design and a 2-qubit process
design, and prints per-lane timings with the numba speedup.

Run:  python benchmarks/bench_backends.py [--reps 2000]
"""

import argparse
import time

import numpy as np

from tomoci._backend import available_backends, kernels
from tomoci.protocols import mub_protocol, process_protocol
from tomoci.qpt import build_process_design, process_probabilities
from tomoci.qst import build_design, probabilities
from tomoci.sim import model_and_probabilities, sample_counts, subject


def best_of(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def frequency_batch(model, p, reps, seed):
    rows = []
    for r in range(reps):
        rows.append(sample_counts(model, p, seed + r).frequencies)
    return np.ascontiguousarray(np.array(rows))


def bench_case(label, model, p, reps):
    F = frequency_batch(model, p, reps, seed=0)
    p = np.ascontiguousarray(p)
    N = float(model.shots_per_block)
    rows = []
    for backend in available_backends():
        kern = kernels(backend)
        # first call may trigger jit compilation; do it off the clock
        kern.xi_batch(model.pinv, F, p)
        kern.moments_gaussian_batch(model.T, F, model.starts, model.sizes, N)
        kern.moments_paper_batch(model.T, F, model.starts, model.sizes, N)
        rows.append(
            (
                backend,
                best_of(lambda: kern.xi_batch(model.pinv, F, p)),
                best_of(
                    lambda: kern.moments_gaussian_batch(
                        model.T, F, model.starts, model.sizes, N
                    )
                ),
                best_of(
                    lambda: kern.moments_paper_batch(
                        model.T, F, model.starts, model.sizes, N
                    )
                ),
            )
        )
    print(f"\n{label}  ({reps} replications, {model.n_rows} design rows)")
    print(f"  {'lane':<8} {'xi_batch':>12} {'gaussian':>12} {'paper':>12}")
    for backend, t_xi, t_g, t_p in rows:
        print(
            f"  {backend:<8} {t_xi * 1e3:>10.2f}ms {t_g * 1e3:>10.2f}ms "
            f"{t_p * 1e3:>10.2f}ms"
        )
    if len(rows) == 2:
        base = next(r for r in rows if r[0] == "numpy")
        fast = next(r for r in rows if r[0] == "numba")
        print(
            "  numba speedup:"
            f" xi {base[1] / fast[1]:.1f}x,"
            f" gaussian {base[2] / fast[2]:.1f}x,"
            f" paper {base[3] / fast[3]:.1f}x"
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=2000)
    args = parser.parse_args()

    print("available lanes:", ", ".join(available_backends()))

    model = build_design(mub_protocol(3, 10000))
    p = probabilities(subject("ghz3"), model)
    bench_case("3-qubit state (MUB)", model, p, args.reps)

    protocol = process_protocol(2, 10000)
    model = build_process_design(protocol)
    p = process_probabilities(subject("depol2-0.1"), protocol)
    bench_case("2-qubit process (tetrahedron x MUB)", model, p, args.reps // 4)


if __name__ == "__main__":
    main()

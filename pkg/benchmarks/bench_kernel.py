"""Trials per second of the compiled and pure-Python raw-stream kernels.

    python3 benchmarks/bench_kernel.py --reps 2000
"""

import argparse
import time

from geomrec import kernel, parse_distribution
from geomrec.montecarlo import rep_generator

DELTAS = (0.8, 0.6, 0.5, 0.4, 0.2)
KS = (5, 10, 15, 20, 30)


def bench(dist, backend, reps, A, n_records):
    t0 = time.perf_counter()
    draws = 0
    for i in range(reps):
        r = kernel.simulate_stream(dist, A, DELTAS, 5, n_records, KS, 10**8, rep_generator(0, i), backend)
        draws += r.draws
    return time.perf_counter() - t0, draws


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--dists", default="pareto:1,1;pareto:2,1;loglogistic:3")
    ap.add_argument("--A", type=float, default=5.0)
    ap.add_argument("--n-records", type=int, default=10)
    args = ap.parse_args()

    backends = ["python"] + (["compiled"] if kernel.BACKEND == "compiled" else [])
    print(f"{'parent':<16}{'backend':<10}{'trials/s':>12}{'draws/trial':>14}{'speedup':>10}")
    for text in args.dists.split(";"):
        dist = parse_distribution(text)
        base = None
        for b in backends:
            secs, draws = bench(dist, b, args.reps, args.A, args.n_records)
            rate = args.reps / secs
            base = base or rate
            print(f"{dist.label():<16}{b:<10}{rate:>12.0f}{draws / args.reps:>14.1f}{rate / base:>9.1f}x")
    if len(backends) == 1:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()

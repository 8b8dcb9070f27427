"""Compare the compiled eigensolver lane against the numpy lane.

Times the raw Hermitian eigendecomposition across matrix sizes, then a
full feasibility solve, once per available backend.  Run from the repo
root after an editable install:

    python3 benchmarks/bench_backends.py --sizes 4,8,16 --repeats 200
"""

import argparse
import time

import numpy as np

from margex import backend
from margex.feasibility import solve
from margex.linalg import hermitize, partial_trace
from margex.states import density, random_density


def time_eigh(n, repeats, rng):
    mats = [hermitize(rng.standard_normal((n, n))
                      + 1j * rng.standard_normal((n, n)))
            for _ in range(repeats)]
    best = np.inf
    for _ in range(3):
        start = time.perf_counter()
        for m in mats:
            backend.eigh(m)
        best = min(best, (time.perf_counter() - start) / repeats)
    return best


def time_solve(rng):
    rho = random_density(8, rng=rng)
    rho12 = density(partial_trace(rho.mat, (2, 2, 2), [0, 1]), (2, 2))
    rho23 = density(partial_trace(rho.mat, (2, 2, 2), [1, 2]), (2, 2))
    from margex.criteria import check_compatible
    pair = check_compatible(rho12, rho23)
    start = time.perf_counter()
    verdict = solve(pair)
    return time.perf_counter() - start, verdict


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="2,4,8,16,32",
                    help="comma separated matrix sizes")
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    lanes = backend.available()
    print(f"lanes: {', '.join(lanes)}   repeats: {args.repeats}")
    print(f"{'n':>4}  " + "  ".join(f"{lane:>12}" for lane in lanes) + "   ratio")
    for n in sizes:
        timings = []
        for lane in lanes:
            backend.use(lane)
            rng = np.random.default_rng(args.seed)
            timings.append(time_eigh(n, args.repeats, rng))
        ratio = timings[-1] / timings[0] if timings[0] > 0 else float("inf")
        cells = "  ".join(f"{t * 1e6:9.2f} us" for t in timings)
        print(f"{n:>4}  {cells}   {ratio:5.2f}x")

    print()
    for lane in lanes:
        backend.use(lane)
        rng = np.random.default_rng(args.seed + 1)
        elapsed, verdict = time_solve(rng)
        print(f"solve 2x2x2 [{lane:>8}]: {elapsed * 1e3:8.2f} ms  "
              f"({verdict.status.name}, {verdict.iterations} iterations)")
    backend.use("compiled" if "compiled" in lanes else lanes[0])


if __name__ == "__main__":
    main()

"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py --sizes 100 200 400 --repeat 3

Each kernel is run once per backend to warm up (numba compiles on first
call), then timed as the best of ``--repeat`` runs.  Outputs of the two
backends are checked for equality before timing.
"""
import argparse
import timeit

import numpy as np

from mvdlib import kernels
from mvdlib._accel import use_numba
from mvdlib.instances import gen_random_metric_noise, gen_random_ultra_noise
from mvdlib.pivot import mvd_pivot, umvd_pivot


def cases(n, seed):
    xm, _ = gen_random_metric_noise(n, 0.05, seed)
    xu, _ = gen_random_ultra_noise(n, 4, 0.05, seed)
    return {
        "count_violations(metric)": lambda b: kernels.count_violations(xm.array, False, backend=b),
        "count_violations(ultra)": lambda b: kernels.count_violations(xu.array, True, backend=b),
        "path_closure(metric)": lambda b: kernels.path_closure(xm.copy_array(), False, backend=b),
        "mvd_pivot": lambda b: mvd_pivot(xm, seed, backend=b).output.array,
        "umvd_pivot": lambda b: umvd_pivot(xu, seed, backend=b).output.array,
    }


def oracle_case(seed):
    small, _ = gen_random_ultra_noise(7, 3, 0.3, seed)
    return {"smallest_hitting_set": lambda b: kernels.smallest_hitting_set(small.array, True, backend=b)[0]}


def run(name, n, fn, repeat):
    ref, got = fn("numpy"), fn("numba")
    if not np.array_equal(np.asarray(ref), np.asarray(got)):
        raise SystemExit(f"{name}: backends disagree at n={n}")
    t_np = min(timeit.repeat(lambda: fn("numpy"), number=1, repeat=repeat))
    t_nb = min(timeit.repeat(lambda: fn("numba"), number=1, repeat=repeat))
    print(f"{name:<26}{n:>6}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not use_numba():
        raise SystemExit("numba is unavailable or disabled (MVDLIB_DISABLE_NUMBA); nothing to compare")

    print(f"{'kernel':<26}{'n':>6}{'numpy s':>12}{'numba s':>12}{'speedup':>10}")
    for n in args.sizes:
        for name, fn in cases(n, args.seed).items():
            run(name, n, fn, args.repeat)
    for name, fn in oracle_case(args.seed).items():
        run(name, 7, fn, args.repeat)


if __name__ == "__main__":
    main()

"""Compare the numba and numpy modular row reduction backends.

    python benchmarks/bench_rank.py [--sizes 40 80 160] [--repeat 5]

Both backends are called directly on the same matrices; their ranks and
reduced forms must agree before any timing is reported.
"""
import argparse
import time

import numpy as np

from fmtwist import _kernels
from fmtwist.linalg import PRIMES


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[40, 80, 160, 320])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _kernels.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    p = PRIMES[0]
    rng = np.random.default_rng(args.seed)
    # compile once outside the timings
    _kernels.rref_mod_p_numba(np.eye(2, dtype=np.int64), p)
    print(f"{'size':>6} {'rank':>6} {'numpy s':>10} {'numba s':>10} {'speedup':>8}")
    for n in args.sizes:
        # rank-deficient integer matrix: product of thin factors
        a = rng.integers(-9, 10, (n, n // 2 + 1)) @ rng.integers(-9, 10, (n // 2 + 1, n))
        a = a.astype(np.int64)
        t_np, (r_np, k_np, _) = best_of(lambda: _kernels.rref_mod_p_numpy(a, p), args.repeat)
        t_nb, (r_nb, k_nb, _) = best_of(lambda: _kernels.rref_mod_p_numba(a, p), args.repeat)
        assert k_np == k_nb and np.array_equal(r_np, r_nb), "backends disagree"
        print(f"{n:>6} {k_np:>6} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>8.1f}")


if __name__ == "__main__":
    main()

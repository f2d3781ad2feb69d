"""Microbenchmarks for the replay hot kernels.

Times the compiled extension against the numpy fallback on the three
operations that dominate a replay run: the Sherman-Morrison rank-1
update, batched upper-confidence scoring over an action set, and a
small end-to-end select/update loop combining both.

Run from the repository root after an editable install:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --iters 20000 --repeats 7
"""

import argparse
import time

import numpy as np

from carebandit._kernels import _ridge_py

try:
    from carebandit._kernels import _ridge_cy
except ImportError:  # pragma: no cover - extension not built
    _ridge_cy = None

DIMS = (25, 125)
N_ACTIONS = 32


def fresh_state(d, rng, warm=200):
    """Build ridge arrays that have absorbed a few observations already."""
    B = np.eye(d)
    Binv = np.eye(d)
    f = np.zeros(d)
    mu = np.zeros(d)
    for _ in range(warm):
        b = rng.standard_normal(d)
        _ridge_py.sm_update(B, Binv, f, mu, b, float(rng.standard_normal()))
    return B, Binv, f, mu


def bench_sm_update(impl, d, iters, rng):
    B, Binv, f, mu = fresh_state(d, rng)
    bs = rng.standard_normal((iters, d))
    rs = rng.standard_normal(iters)
    start = time.perf_counter()
    for i in range(iters):
        impl.sm_update(B, Binv, f, mu, bs[i], rs[i])
    return time.perf_counter() - start


def bench_ucb_scores(impl, d, iters, rng):
    _, Binv, _, mu = fresh_state(d, rng)
    phi = np.ascontiguousarray(rng.standard_normal((N_ACTIONS, d)))
    out = np.empty(N_ACTIONS)
    start = time.perf_counter()
    for _ in range(iters):
        impl.ucb_scores(Binv, mu, phi, 0.3, out)
    return time.perf_counter() - start


def bench_replay_loop(impl, d, iters, rng):
    """Score an action set, pick the argmax, absorb the observation."""
    B, Binv, f, mu = fresh_state(d, rng)
    phi = np.ascontiguousarray(rng.standard_normal((N_ACTIONS, d)))
    rewards = rng.random(iters)
    out = np.empty(N_ACTIONS)
    start = time.perf_counter()
    for i in range(iters):
        impl.ucb_scores(Binv, mu, phi, 0.3, out)
        chosen = int(np.argmax(out))
        impl.sm_update(B, Binv, f, mu, phi[chosen], rewards[i])
    return time.perf_counter() - start


BENCHES = (
    ("sm_update", bench_sm_update),
    ("ucb_scores", bench_ucb_scores),
    ("replay_loop", bench_replay_loop),
)


def best_of(fn, impl, d, iters, repeats, seed):
    times = []
    for rep in range(repeats):
        rng = np.random.default_rng((seed, rep))
        times.append(fn(impl, d, iters, rng))
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iters", type=int, default=10000,
                        help="operations per timing (default 10000)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timings per cell, best is reported (default 5)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _ridge_cy is None:
        print("compiled backend unavailable; timing the numpy fallback only")
    header = f"{'kernel':<12} {'d':>4} {'numpy us/op':>12}"
    if _ridge_cy is not None:
        header += f" {'cython us/op':>13} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, fn in BENCHES:
        for d in DIMS:
            t_py = best_of(fn, _ridge_py, d, args.iters, args.repeats, args.seed)
            row = f"{name:<12} {d:>4} {1e6 * t_py / args.iters:>12.2f}"
            if _ridge_cy is not None:
                t_cy = best_of(fn, _ridge_cy, d, args.iters, args.repeats, args.seed)
                row += f" {1e6 * t_cy / args.iters:>13.2f} {t_py / t_cy:>7.2f}x"
            print(row)


if __name__ == "__main__":
    main()

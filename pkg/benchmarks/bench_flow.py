"""Compare the compiled and pure-Python flow backends.

    python3 benchmarks/bench_flow.py [--repeat N] [--t-final T]

Both backends integrate the same orbit-tolerance problem; the script reports
wall time per call, steps, the speed-up and the endpoint difference.
"""
import argparse
import time

import numpy as np

from zipkit.equilibrium import solve_steady_state
from zipkit.flow import ORBIT_CONFIG, available_backends, flow


def time_backend(backend, u0, t1, mu, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        sol = flow(u0, t1, mu, cfg=ORBIT_CONFIG, backend=backend)
        best = min(best, time.perf_counter() - t)
    return best, sol


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--t-final", type=float, default=3.0, help="about one orbit period")
    ap.add_argument("--mu", type=float, default=1.0)
    args = ap.parse_args()

    u0 = solve_steady_state(args.mu).u_star + 1e-3
    backends = available_backends()
    results = {b: time_backend(b, u0, args.t_final, args.mu, args.repeat) for b in backends}
    print(f"{'backend':<10} {'seconds':>10} {'steps':>8}")
    for b, (sec, sol) in results.items():
        print(f"{b:<10} {sec:>10.4f} {sol.n_accepted + sol.n_rejected:>8d}")
    if len(results) == 2:
        (tc, sc), (tp, sp) = results["compiled"], results["python"]
        print(f"speed-up  {tp / tc:.1f}x")
        print(f"max endpoint difference {np.max(np.abs(sc.y_end - sp.y_end)):.2e}")
    else:
        print("compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()

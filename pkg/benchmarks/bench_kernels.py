"""Benchmark the hot kernels under numba against the pure-NumPy fallback.

Run `python benchmarks/bench_kernels.py`: it re-executes itself in two
subprocesses (IFNET_NUMBA=1 and IFNET_NUMBA=0, which must be set before the
package is imported) and prints a side-by-side table.  Each probe also prints
a checksum of its numeric results so the two backends can be confirmed to
compute the same numbers, not just comparable speeds.
"""

import argparse
import os
import subprocess
import sys
import time


def _probe() -> None:
    import numpy as np

    import ifnet
    from ifnet import _kernels
    from ifnet._sampling import rng_stream, sample_on_section

    net_c = ifnet.network(3, 1.0, 1.2, 1.0, -1.0,
                          [[0.0, 0.6, 0.6], [-0.6, 0.0, -0.6], [-0.6, -0.6, 0.0]])
    net_9 = ifnet.network(9, 1.0, 1.2, 1.0, -1.0,
                          np.full((9, 9), 0.4) - np.diag(np.full(9, 0.4)))
    tie = net_c.tie_tol()

    def timed(label, fn, checksum):
        fn()  # warm-up (JIT compilation on the numba backend)
        t0 = time.perf_counter()
        out = fn()
        dt = time.perf_counter() - t0
        print(f"RESULT {label} {dt:.6f} {checksum(out):.17g}")

    v0 = np.array([-0.5, 0.4, 0.2])
    timed(
        "orbit_200k_steps",
        lambda: _kernels.run_orbit(v0, net_c.H, 1.2, 1.0, -1.0, 1.0, tie, 200_000),
        lambda out: float(out[0].sum()),
    )

    rng = rng_stream(1, 0)
    V = sample_on_section(rng, 3, -1.0, 0.32, 200_000)
    W = sample_on_section(rng, 3, -1.0, 0.32, 200_000)
    timed(
        "pair_ratios_200k",
        lambda: _kernels.pair_ratios(V, W, net_c.H, 1.2, 1.0, -1.0, 1.0, tie),
        lambda out: float(out[1][out[0]].max()),
    )

    rng = rng_stream(2, 0)
    starts = sample_on_section(rng, 9, 0.0, 1.0, 20_000)
    tie9 = net_9.tie_tol()

    def sync_all():
        total = 0.0
        for row in starts:
            _, t = _kernels.sync_run(row, net_9.H, 1.2, 1.0, -1.0, 1.0, tie9, 3)
            total += t
        return total

    timed("sync_20k_starts", sync_all, float)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--backend-probe", action="store_true")
    args = ap.parse_args()
    if args.backend_probe:
        _probe()
        return

    results = {}
    for backend in ("1", "0"):
        env = dict(os.environ, IFNET_NUMBA=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--backend-probe"],
            capture_output=True, text=True, env=env,
        )
        if proc.returncode != 0:
            sys.stderr.write(proc.stderr)
            raise SystemExit(proc.returncode)
        for line in proc.stdout.splitlines():
            if line.startswith("RESULT "):
                _, label, dt, checksum = line.split()
                results.setdefault(label, {})[backend] = (float(dt), checksum)

    print(f"{'kernel':24s} {'numba':>12s} {'numpy':>12s} {'speedup':>9s}  match")
    for label, r in results.items():
        t1, c1 = r["1"]
        t0, c0 = r["0"]
        print(f"{label:24s} {t1:10.4f} s {t0:10.4f} s {t0 / t1:8.1f}x  {c1 == c0}")


if __name__ == "__main__":
    main()

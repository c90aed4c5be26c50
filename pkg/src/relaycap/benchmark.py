"""Benchmark the compiled kernel against the pure-numpy fallback.

Run with ``python -m relaycap.benchmark [--trials 1e7] [--relays 1]``.
Both backends must produce identical counters; the run aborts if they differ.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ._backend import get_kernels
from .channel import ChannelVariances
from .simulator import SimConfig, protocol_counts


def _time_backend(backend: str, config: SimConfig, trials: int, seed: int,
                  workers: int) -> tuple[float, np.ndarray]:
    start = time.perf_counter()
    counts = protocol_counts(config, trials, seed, workers=workers, backend=backend)
    return time.perf_counter() - start, counts


def run(trials: int, relays: int, seed: int, workers: int) -> int:
    v = ChannelVariances(sigma2_sd=1.0, sigma2_sr=(1.0,) * relays,
                         sigma2_rd=(1.0,) * relays)
    config = SimConfig(variances=v, rate=0.05, snr=1.0, protocol="ir")

    backends = ["python"]
    try:
        get_kernels("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled extension not built; timing the fallback only")

    results = {}
    for name in backends:
        elapsed, counts = _time_backend(name, config, trials, seed, workers)
        results[name] = (elapsed, counts)
        rate = trials / elapsed / 1e6
        print(f"{name:>7}: {elapsed:8.3f} s   {rate:8.2f} M trials/s")

    if len(results) == 2:
        (t_cy, c_cy), (t_py, c_py) = results["cython"], results["python"]
        if not np.array_equal(c_cy, c_py):
            print("BACKEND MISMATCH: counters differ")
            return 1
        print(f"speedup: {t_py / t_cy:.2f}x   (counters identical)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=str, default="1e7")
    parser.add_argument("--relays", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)
    return run(int(float(args.trials)), args.relays, args.seed, args.workers)


if __name__ == "__main__":
    raise SystemExit(main())

"""Time multi-start gradient play on the two-user scenario with each kernel backend.

    python3 benchmarks/bench_backends.py --starts 50 --repeat 3
"""

import argparse
import time

import numpy as np

from ptgame import _accel
from ptgame.dynamics import Constant, GradientPlayConfig, multi_start
from ptgame.game import case1, uniform_price
from ptgame.prospect import ValueFunction

CASES = [
    ("eut p=38", None, 38.0, 0.05),
    ("exponential p=20", ValueFunction.exponential(0.01), 20.0, 0.05),
    ("log-gain p=40", ValueFunction.log_gain(), 40.0, 0.05),
    ("log-gain p=55", ValueFunction.log_gain(), 55.0, 0.2),
]


def time_case(vfs, price, eps, starts, backend, repeat):
    s = case1()
    cfg = GradientPlayConfig(Constant(eps), backend=backend)
    best, res = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = multi_start(uniform_price(price, s.n), vfs, s, starts, cfg)
        best = min(best, time.perf_counter() - t0)
    return best, res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--starts", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = ["numpy"]
    if _accel.HAVE_NUMBA:
        backends.insert(0, "numba")
        t0 = time.perf_counter()
        time_case(None, 40.0, 0.05, 1, "numba", 1)
        print(f"numba warm-up (compile or cache load): {time.perf_counter() - t0:.2f}s")
    else:
        print("numba not installed; timing the numpy backend only")

    print(f"{'case':<18} " + " ".join(f"{b:>10}" for b in backends) + "   speedup  clusters")
    for name, vfs, price, eps in CASES:
        times, clusters = [], []
        for b in backends:
            t, res = time_case(vfs, price, eps, args.starts, b, args.repeat)
            times.append(t)
            clusters.append(len(res))
        speed = f"{times[-1] / times[0]:8.1f}x" if len(times) == 2 else "       -"
        print(f"{name:<18} " + " ".join(f"{t:9.3f}s" for t in times) + f"  {speed}  {clusters}")


if __name__ == "__main__":
    main()

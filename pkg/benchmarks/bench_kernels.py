"""Compiled vs pure-Python time-stepping kernels.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

Runs every scheme on the bare top and on the top coupled to one oscillator,
prints steps per second for both backends, the speed-up and the largest
difference between the two final states.
"""
import argparse
import math
import time

import numpy as np

from lagtop import kernels

SCHEMES = {"implicit-midpoint": kernels.MIDPOINT, "splitting-2nd": kernels.STRANG,
           "splitting-4th": kernels.YOSHIDA4}


def _state(n_osc):
    r, a = 0.05, 3.0
    u = np.array([r, 0.0, math.sqrt(1 - r * r)])
    v = a * u
    return np.concatenate([u, v, np.zeros(2 * n_osc)])


def _time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    compiled = kernels.compiled_run()
    if compiled is None:
        print("compiled extension not built; only the Python backend is available")
    print(f"{'case':34s} {'python steps/s':>15s} {'compiled steps/s':>17s} {'speed-up':>9s} {'max diff':>10s}")
    for n_osc in (0, 1):
        om = np.full(n_osc, 2.255)
        w, ph = np.ones(n_osc), np.zeros(n_osc)
        eps = 1e-3 if n_osc else 0.0
        for name, code in SCHEMES.items():
            args_run = (code, _state(n_osc), 1.0, om, eps, w, ph, 0.01)
            steps_py = max(args.steps // 10, 100)
            tp, outp = _time(lambda: kernels.python_run(*args_run, steps_py, steps_py, 1e-13, 25), 1)
            label = f"{name} ({'coupled' if n_osc else 'bare'})"
            if compiled is None:
                print(f"{label:34s} {steps_py / tp:15.0f}")
                continue
            tc, _ = _time(lambda: compiled(*args_run, args.steps, args.steps, 1e-13, 25), args.repeat)
            _, outc = _time(lambda: compiled(*args_run, steps_py, steps_py, 1e-13, 25), 1)
            diff = float(np.max(np.abs(outp[0][-1] - outc[0][-1])))
            print(f"{label:34s} {steps_py / tp:15.0f} {args.steps / tc:17.0f} "
                  f"{(args.steps / tc) / (steps_py / tp):9.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()

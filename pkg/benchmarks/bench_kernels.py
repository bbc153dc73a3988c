"""Wall-clock comparison of the compiled and pure-Python RK4 kernels.

Usage: ``python benchmarks/bench_kernels.py [--t-end 2] [--repeat 3]``.
Both backends integrate the same problem; the script reports the best time
of ``--repeat`` runs and the largest state difference between backends.
"""

import argparse
import time

import numpy as np

from driven_lindblad import kernels
from driven_lindblad.bath import BathSpec
from driven_lindblad.master import EvolutionConfig, evolve, lamb_table
from driven_lindblad.propagators import propagate_closed
from driven_lindblad.qubit import DriveParams, thermal_state


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=2.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    p = DriveParams.from_ratios(1.0, 10.0)
    b = BathSpec(a=5e-3, wc=2.0, T=4.0)
    rho0 = thermal_state(0.5, p)
    table = lamb_table(p, b, EvolutionConfig().quad)
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    nsteps = int(round(args.t_end / 1e-3))

    print(f"t_end = {args.t_end}, dt = 1e-3, {nsteps} steps, best of {args.repeat}")
    print(f"{'task':<10}{'backend':<10}{'seconds':>12}{'us/step':>12}")
    results = {}
    for task in ("closed", "unitary", "adme", "tdme"):
        for name in backends:
            if task == "closed":
                def run():
                    tr = propagate_closed(p, args.t_end, 1e-3, stride=10, backend=name)
                    return np.stack([tr.alpha, tr.beta])
            else:
                cfg = EvolutionConfig(solver=task, t_end=args.t_end, backend=name)

                def run():
                    return evolve(rho0, p, b, cfg, table).rho
            sec, out = best_of(run, args.repeat)
            results[task, name] = out
            print(f"{task:<10}{name:<10}{sec:>12.4f}{1e6 * sec / nsteps:>12.2f}")
        if len(backends) == 2:
            diff = np.max(np.abs(results[task, "python"] - results[task, "cython"]))
            print(f"{task:<10}{'max |diff|':<10}{diff:>12.2e}")
    if len(backends) == 1:
        print("compiled extension not available; only the Python backend was timed")


if __name__ == "__main__":
    main()

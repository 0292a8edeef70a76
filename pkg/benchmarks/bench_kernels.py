"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Times each kernel on synthetic tags sized like one desk-profile trial, then
a full ``simulate_trial`` under each backend (the fallback run is a
subprocess with HERALDSIM_PURE_PYTHON=1).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from heraldsim import kernels

TRIAL_SNIPPET = """
import timeit
from heraldsim import kernels
from heraldsim.model import desk_config
from heraldsim.montecarlo import simulate_trial
cfg = desk_config()
simulate_trial(cfg, 0)
t = min(timeit.repeat(lambda: simulate_trial(cfg, 1), number=1, repeat={repeat}))
print(kernels.BACKEND, t)
"""


def kernel_inputs(n=20_000, seed=1):
    rng = np.random.default_rng(seed)
    a = np.sort(rng.uniform(0, 0.02, n))
    b = np.sort(np.concatenate([a[rng.random(n) < 0.4] + 1e-6, rng.uniform(0, 0.02, n // 10)]))
    return a, b


def bench_kernels(repeat):
    a, b = kernel_inputs()
    cases = {
        "coincidence_mask": lambda m: m.coincidence_mask(a, b, 1e-6, 15e-9),
        "dead_time_filter": lambda m: m.dead_time_filter(b, 50e-9),
        "merge_gates": lambda m: m.merge_gates(a, 0.6e-6, 1e-6),
    }
    backends = [("python", kernels.python_backend)]
    if kernels.compiled_backend is not None:
        backends.append(("cython", kernels.compiled_backend))
    print(f"{'kernel':<18}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for label, fn in cases.items():
        times = [min(timeit.repeat(lambda: fn(mod), number=1, repeat=repeat)) for _, mod in backends]
        speed = f"{times[0] / times[-1]:>9.1f}x" if len(times) > 1 else ""
        print(f"{label:<18}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times) + speed)


def bench_trial(repeat):
    results = {}
    for pure in (False, True):
        env = dict(os.environ)
        env.pop("HERALDSIM_PURE_PYTHON", None)
        if pure:
            env["HERALDSIM_PURE_PYTHON"] = "1"
        out = subprocess.run([sys.executable, "-c", TRIAL_SNIPPET.format(repeat=repeat)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        results[out[0]] = float(out[1])
    for name, t in results.items():
        print(f"simulate_trial[{name}] {t * 1e3:.2f} ms")
    if len(results) == 2:
        print(f"trial speedup {results['python'] / results['cython']:.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    bench_kernels(args.repeat)
    bench_trial(args.repeat)


if __name__ == "__main__":
    main()

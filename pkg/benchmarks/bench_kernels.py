"""Compare the numba kernels with their pure-Python fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Kernel timings are taken in-process (the ``py_*`` functions are the
uncompiled sources of the jitted ones).  End-to-end timings run one
sinusoid-disturbed walk in a fresh interpreter with and without
``CMPCWALK_DISABLE_NUMBA=1``, so the fallback path is exercised exactly as
users would select it.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from cmpcwalk import _jit, kernels, qp
from cmpcwalk.controller import MpcConfig, contingency_qp, horizon_problem
from cmpcwalk.lip import AxisState, LipParams

SIM_SNIPPET = (
    "import time; from cmpcwalk import config;"
    "from cmpcwalk.sim import run;"
    "cfg = config.build_config({'disturbance': 'sine'});"
    "run(cfg);"  # warm-up, includes compilation when jitted
    "t0 = time.perf_counter(); run(cfg); print(time.perf_counter() - t0)"
)


def _qp_case():
    N = 100
    h = horizon_problem(AxisState(0.01, 0.1), -0.004, 0.004, np.full(N, -0.01), np.full(N, 0.05),
                        MpcConfig(), LipParams())
    p = contingency_qp(h)
    tol = 1e-13 * qp._feasibility_scale(p)
    x0, _ = kernels.py_project_feasible(p.Aeq, p.beq, p.lb, p.ub, np.zeros(p.n), 60, tol)
    w0 = np.zeros(p.n, dtype=np.int64)
    w0[x0 <= p.lb] = -1
    w0[(x0 >= p.ub) & (w0 == 0)] = 1
    return p, tol, x0, qp._independent_working_set(p.Aeq, w0)


def kernel_cases():
    rng = np.random.default_rng(0)
    rk = (0.01, 0.1, 0.02, 37.7, rng.normal(size=21) * 0.1, 0.001)
    p, tol, x0, w0 = _qp_case()
    return {
        "rk4_lip": (kernels.py_rk4_lip, kernels.rk4_lip, lambda f: f(*rk)),
        "project_feasible": (kernels.py_project_feasible, kernels.project_feasible,
                             lambda f: f(p.Aeq, p.beq, p.lb, p.ub, np.zeros(p.n), 60, tol)),
        "active_set": (kernels.py_active_set, kernels.active_set,
                       lambda f: f(p.H, p.f, p.Aeq, p.beq, p.lb, p.ub, x0.copy(), w0.copy(), 2000, 1e-10)),
    }


def best_of(call, repeat):
    number = 1
    while timeit.timeit(call, number=number) < 0.05 and number < 10**6:
        number *= 10
    return min(timeit.repeat(call, number=number, repeat=repeat)) / number


def simulate_seconds(disable):
    env = dict(os.environ)
    env.pop("CMPCWALK_DISABLE_NUMBA", None)
    if disable:
        env["CMPCWALK_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SIM_SNIPPET], env=env, check=True,
                         capture_output=True, text=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _jit.USE_NUMBA:
        print("numba unavailable or disabled; only the fallback can be timed", file=sys.stderr)
        return 1
    print(f"{'kernel':<18}{'python [s]':>14}{'numba [s]':>14}{'speedup':>10}")
    for name, (py, jit, call) in kernel_cases().items():
        call(jit)  # compile
        tp = best_of(lambda: call(py), args.repeat)
        tj = best_of(lambda: call(jit), args.repeat)
        print(f"{name:<18}{tp:>14.3e}{tj:>14.3e}{tp / tj:>9.1f}x")
    tp, tj = simulate_seconds(True), simulate_seconds(False)
    print(f"{'full walk (sine)':<18}{tp:>14.3f}{tj:>14.3f}{tp / tj:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter because the backend is chosen at
import time from STAMKIT_DISABLE_NUMBA. The script also checks that both
backends return the same numbers.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from stamkit import _kernels
from stamkit.dynamics import HamiltonianFamily, RampSpec, ramp_fixed_steps
from stamkit.models import CoupledQubitModel, product_state
from stamkit.robustness import coupled_ramp_family, ou_coefficients

repeat = int(sys.argv[1])
family = coupled_ramp_family(CoupledQubitModel(1.0), 0.05)
ramp = RampSpec(100.0, energy_scale=1.0)
psi0 = product_state("11")
rng = np.random.default_rng(7)
z = rng.normal(size=(2000, 100, 2))
beta0 = rng.normal(size=2000)
coef = ou_coefficients(0.0314, 0.5, 1.0)

def best(fn):
    fn()  # warm-up (includes JIT compilation)
    times = []
    for _ in range(repeat):
        t = time.perf_counter(); fn(); times.append(time.perf_counter() - t)
    return min(times)

out = {"numba": _kernels.HAS_NUMBA}
out["ramp_s"] = best(lambda: ramp_fixed_steps(ramp, family, psi0, 20000))
out["ou_s"] = best(lambda: _kernels.ou_area_increments(z, beta0, *coef))
out["ramp_state"] = [[c.real, c.imag] for c in ramp_fixed_steps(ramp, family, psi0, 20000)]
inc, _ = _kernels.ou_area_increments(z, beta0, *coef)
out["ou_sum"] = float(inc.sum())
print(json.dumps(out))
"""


def run_backend(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, STAMKIT_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(res.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    if not fast["numba"]:
        print("numba unavailable: both runs used the numpy path")
    drift = max(abs(complex(*a) - complex(*b)) for a, b in zip(fast["ramp_state"], slow["ramp_state"]))
    print(f"{'kernel':<28}{'numba [s]':>12}{'numpy [s]':>12}{'speed-up':>10}")
    for key, label in (("ramp_s", "ramp, 20000 slices (4x4)"), ("ou_s", "OU areas, 2000x100")):
        print(f"{label:<28}{fast[key]:>12.4f}{slow[key]:>12.4f}{slow[key] / fast[key]:>10.1f}")
    print(f"max |state difference| = {drift:.2e}; OU sum difference = {abs(fast['ou_sum'] - slow['ou_sum']):.2e}")


if __name__ == "__main__":
    main()

"""Timings for the three hot kernels, compiled extension vs numpy fallback.

Both implementations are imported directly so one process times both; the
module-level backend switch in lylab.kernels is not involved.  Each workload
also cross-checks that the two backends return identical (or bitwise-close)
results before reporting times.

Run:  python3 benchmarks/bench_kernels.py [--nvars 18] [--repeats 5]
"""

import argparse
import time

import numpy as np

from lylab import _kernels_fallback as fallback
from lylab import ddarith as dd
from lylab import polyengine
from lylab.model import ising_ring

try:
    from lylab import _kernels as compiled
except ImportError:
    compiled = None


def _best(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _row(name, impls, call, repeats):
    outs = {label: call(mod) for label, mod in impls}
    ref = outs[impls[0][0]]
    for label, _ in impls[1:]:
        for a, b in zip(ref, outs[label]):
            gap = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            if gap > 1e-13:
                raise AssertionError(f"{name}: backends disagree by {gap:.2e}")
    times = {label: _best(lambda m=mod: call(m), repeats)
             for label, mod in impls}
    line = f"{name:<28}"
    for label, _ in impls:
        line += f"  {label} {times[label] * 1e3:9.2f} ms"
    if len(impls) == 2:
        line += f"  speedup {times[impls[1][0]] / times[impls[0][0]]:6.1f}x"
    print(line)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nvars", type=int, default=18,
                    help="spin count for the enumeration workloads")
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats (best is reported)")
    args = ap.parse_args()
    if args.nvars > polyengine.MAX_VARS:
        ap.error(f"--nvars capped at {polyengine.MAX_VARS}")

    impls = []
    if compiled is not None:
        impls.append(("compiled", compiled))
    impls.append(("fallback", fallback))
    if compiled is None:
        print("extension not built; timing the fallback only")

    ring = ising_ring(args.nvars, J=0.8, beta=1.0)
    pi, pj, pJ = ring.pair_arrays()
    qm, qJ = ring.quad_arrays()
    _row(f"gray energies 2^{args.nvars}", impls,
         lambda m: m.gray_subset_energies(args.nvars, pi, pj, pJ, qm, qJ),
         args.repeats)

    h_hi, h_lo = fallback.gray_subset_energies(args.nvars, pi, pj, pJ, qm, qJ)
    e_hi, e_lo = dd.dd_mul_d(h_hi, h_lo, -1.0)
    _row(f"dd exp 2^{args.nvars}", impls,
         lambda m: m.dd_exp_arrays(e_hi, e_lo), args.repeats)

    poly = polyengine.partition_polynomial(ising_ring(20, J=0.7, beta=1.0))
    c_hi, c_lo = polyengine.uniform_reduction(poly)
    zeros = np.zeros_like(c_hi)
    seeds = np.roots((c_hi + c_lo)[::-1]).astype(complex)
    _row("aberth refine deg 20", impls,
         lambda m: m.aberth_refine(c_hi, c_lo, zeros, zeros.copy(),
                                   seeds.copy()),
         args.repeats)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Time the jit kernel lane against the pure-numpy lane on identical work.

Every hot driver has two implementations selected at import time
(PERCLAB_NO_NUMBA=1 forces the numpy lane).  This script runs both lanes
in one process on the same lowered problems and seeds, reports wall times,
and insists the outputs agree bit for bit -- the lanes are interchangeable
or they are broken.

Usage: python3 benchmarks/bench_kernels.py [--replicas N] [--repeats K]
"""

import argparse
import sys
import time

import numpy as np

from perclab import _kernels as K
from perclab._accel import HAVE_NUMBA
from perclab._kernels import _numpy_lane
from perclab.explore import Caps
from perclab.lattice import ALL, ModelSpec
from perclab.pioneers import _sweep_setup
from perclab.randomness import TAG_PERC

SEED = np.uint64(20260816)
TAG = np.uint64(TAG_PERC)
ZERO = np.uint64(0)


def scenarios(replicas):
    d = 3
    caps = Caps(max_volume=1 << 14)
    lat = ModelSpec(d, "lattice")
    tor = ModelSpec(d, "torus", period=8)
    zt = np.zeros(d, dtype=np.int64)

    lp_tp = K.lower_problem(lat, src=(0,) * d, caps=caps, p=0.2)
    tgt = np.array([3, 0, 0], dtype=np.int64)
    yield ("two_point reach", lambda m: m.batch_reach(
        SEED, TAG, ZERO, replicas, *lp_tp, tgt, tgt, False, -1))

    yield ("intrinsic ball reach", lambda m: m.batch_reach(
        SEED, TAG, ZERO, replicas, *lp_tp, zt, zt, False, 12))

    yield ("cluster sizes", lambda m: m.batch_sizes(
        SEED, TAG, ZERO, replicas, *lp_tp))

    lp_t = K.lower_problem(tor, src=(0,) * d, caps=None, p=0.2)
    yield ("torus grid", lambda m: m.batch_torus_grid(
        SEED, TAG, ZERO, replicas, *lp_t, 8))

    yield ("paired coupling", lambda m: m.batch_coupling(
        SEED, TAG, ZERO, replicas, lp_tp.d, lp_tp.L, lp_tp.r, lp_tp.offsets,
        0.2, 0.25, lp_tp.src, lp_tp.eff_lo, lp_tp.eff_hi,
        lp_tp.user_lo, lp_tp.user_hi, lp_tp.max_volume, lp_tp.max_intrinsic))

    n_max = 8
    lp_s, horizon, n_up = _sweep_setup(lat.with_p(0.25), (0,) * d, n_max,
                                       caps, ALL)
    yield ("crossing sweep", lambda m: m.batch_pioneer(
        SEED, TAG, ZERO, replicas, *lp_s[:-1], n_max, horizon, n_up))


def _flat(out):
    if isinstance(out, tuple):
        for o in out:
            yield from _flat(o)
    else:
        yield np.asarray(out)


def outputs_equal(a, b):
    fa, fb = list(_flat(a)), list(_flat(b))
    return len(fa) == len(fb) and all(
        x.shape == y.shape and np.array_equal(x, y) for x, y in zip(fa, fb))


def best_time(fn, repeats):
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicas", type=int, default=800)
    ap.add_argument("--repeats", type=int, default=3,
                    help="best-of-K timing (numpy lane always runs once)")
    args = ap.parse_args(argv)

    if not HAVE_NUMBA:
        print("numba unavailable; timing the numpy lane only")
        for name, call in scenarios(args.replicas):
            t, _ = best_time(lambda: call(_numpy_lane), 1)
            print("%-22s numpy %8.1f ms" % (name, 1e3 * t))
        return 0

    from perclab._kernels import _numba_lane
    print("replicas per scenario: %d" % args.replicas)
    print("%-22s %10s %10s %9s  %s"
          % ("kernel", "jit ms", "numpy ms", "speedup", "outputs"))
    failures = 0
    for name, call in scenarios(args.replicas):
        call(_numba_lane)  # compile outside the timed region
        t_jit, out_jit = best_time(lambda: call(_numba_lane), args.repeats)
        t_np, out_np = best_time(lambda: call(_numpy_lane), 1)
        same = outputs_equal(out_jit, out_np)
        failures += not same
        print("%-22s %10.1f %10.1f %8.1fx  %s"
              % (name, 1e3 * t_jit, 1e3 * t_np, t_np / t_jit,
                 "identical" if same else "MISMATCH"))
    if failures:
        print("FAIL: %d kernel(s) disagree between lanes" % failures)
        return 1
    print("all kernels agree bit for bit across lanes")
    return 0


if __name__ == "__main__":
    sys.exit(main())

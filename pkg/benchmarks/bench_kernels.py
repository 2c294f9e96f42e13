"""Compiled vs pure-Python kernels on the same inputs.

Usage: python benchmarks/bench_kernels.py [--n 32 64 128] [--repeat 3]

Both implementations must return the same pattern; the script reports the
median wall time of each and the speedup.
"""

import argparse
import statistics
import time

import numpy as np

from irs_sense import _kernels_py
from irs_sense.beamforming import isotropic_crb_objective, snr_objective
from irs_sense.beamforming.design import refine_pattern_exact
from irs_sense.channel import ArrayGeometry, PathLossModel, gen_channel, geometry_from_positions
from irs_sense.metrics import FULLY, SEMI, isotropic_covariance

try:
    from irs_sense import _kernels as _compiled
except ImportError:
    _compiled = None


def _median_time(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def _refine_args(arch, ch, v):
    # same block construction as refine_pattern_exact
    from irs_sense.beamforming.objectives import _covariance_root

    r = isotropic_covariance(ch.m_t, 1.0).r
    lh = _covariance_root(r).conj().T
    a, ad = ch.steering(), ch.steering_dot()
    t_blk, td_blk = lh @ (ch.g_t.T * a), lh @ (ch.g_t.T * ad)
    if arch == FULLY:
        r_blk, rd_blk = ch.g_r * a, ch.g_r * ad
    else:
        r_blk = rd_blk = np.zeros((0, ch.n), dtype=complex)
    b, bd = ch.sensor_steering(), ch.sensor_steering_dot()
    return t_blk, td_blk, r_blk, rd_blk, v, arch == FULLY, float(np.vdot(b, b).real), float(np.vdot(bd, bd).real)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; only the Python fallback is available")
        return 1
    scen = geometry_from_positions((0, 0), (1, 1), (1, -5))
    print(f"{'kernel':<26}{'N':>5}{'python ms':>12}{'compiled ms':>13}{'speedup':>9}  same")
    for n in args.n:
        ch = gen_channel("Rayleigh", ArrayGeometry(4, 4, n), scen, PathLossModel(), seed=args.seed)
        v0 = np.exp(1j * np.random.default_rng(args.seed).uniform(0, 2 * np.pi, n))
        cases = []
        for arch in (FULLY, SEMI):
            for make in (snr_objective, isotropic_crb_objective):
                ka = make(arch, ch).kernel_args()
                cases.append((f"ascent {make.__name__[:3]} {arch[:4]}", "coordinate_ascent",
                              ka + (v0.copy(), 1e-8, 200)))
            cases.append((f"refine_exact {arch[:4]}", "refine_exact", _refine_args(arch, ch, v0.copy()) + (1e-4, 20)))
        for label, name, fargs in cases:
            tp, out_p = _median_time(lambda: getattr(_kernels_py, name)(*fargs), args.repeat)
            tc, out_c = _median_time(lambda: getattr(_compiled, name)(*fargs), args.repeat)
            same = np.allclose(np.asarray(out_p[0]), np.asarray(out_c[0]), atol=1e-12)
            print(f"{label:<26}{n:>5}{tp * 1e3:>12.2f}{tc * 1e3:>13.2f}{tp / tc:>9.1f}  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

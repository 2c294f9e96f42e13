import json
import os
import subprocess
import sys

import numpy as np
import pytest

from irs_sense import _kernels_py, kernels
from irs_sense.beamforming import isotropic_crb_objective, snr_objective
from irs_sense.beamforming.objectives import _covariance_root
from irs_sense.metrics import FULLY, SEMI, isotropic_covariance

compiled = pytest.importorskip("irs_sense._kernels")


def _refine_args(arch, ch, v):
    lh = _covariance_root(isotropic_covariance(ch.m_t, 1.0).r).conj().T
    a, ad = ch.steering(), ch.steering_dot()
    t_blk, td_blk = lh @ (ch.g_t.T * a), lh @ (ch.g_t.T * ad)
    if arch == FULLY:
        r_blk, rd_blk = ch.g_r * a, ch.g_r * ad
    else:
        r_blk = rd_blk = np.zeros((0, ch.n), dtype=complex)
    b, bd = ch.sensor_steering(), ch.sensor_steering_dot()
    return t_blk, td_blk, r_blk, rd_blk, v, arch == FULLY, float(np.vdot(b, b).real), float(np.vdot(bd, bd).real)


def test_compiled_selected_by_default():
    if os.environ.get("IRS_SENSE_PURE_PYTHON") != "1":
        assert kernels.BACKEND == "compiled"


def test_best_phase_agrees():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a1, a2 = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        phi = rng.uniform(0, 2 * np.pi)
        assert compiled.best_phase(a1, a2, phi) == pytest.approx(_kernels_py.best_phase(a1, a2, phi), abs=1e-12)


@pytest.mark.parametrize("n", [8, 24])
@pytest.mark.parametrize("arch", [FULLY, SEMI])
@pytest.mark.parametrize("make", [snr_objective, isotropic_crb_objective])
def test_coordinate_ascent_agrees(make_channel, n, arch, make):
    ch = make_channel("Rayleigh", n=n, seed=n)
    args = make(arch, ch).kernel_args()
    v0 = np.exp(1j * np.random.default_rng(n).uniform(0, 2 * np.pi, n))
    out_p = _kernels_py.coordinate_ascent(*args, v0.copy(), 1e-8, 200)
    out_c = compiled.coordinate_ascent(*args, v0.copy(), 1e-8, 200)
    assert np.allclose(out_p[0], out_c[0], atol=1e-12)
    assert _kernels_py.objective(*args, np.asarray(out_p[0])) == pytest.approx(
        compiled.objective(*args, np.asarray(out_c[0])), rel=1e-12)


@pytest.mark.parametrize("arch", [FULLY, SEMI])
def test_refine_exact_agrees(make_channel, arch):
    ch = make_channel("Rayleigh", n=16, seed=5)
    v0 = np.exp(1j * np.random.default_rng(5).uniform(0, 2 * np.pi, 16))
    out_p = _kernels_py.refine_exact(*_refine_args(arch, ch, v0.copy()), 1e-4, 20)
    out_c = compiled.refine_exact(*_refine_args(arch, ch, v0.copy()), 1e-4, 20)
    assert np.allclose(out_p[0], out_c[0], atol=1e-12)


_SCRIPT = """
import json
from irs_sense import kernels
from irs_sense.beamforming import OptimizerOptions, maximize_snr, minimize_crb
from irs_sense.channel import ArrayGeometry, PathLossModel, gen_channel, geometry_from_positions
from irs_sense.metrics import SensingSpec, dbm_to_watts
scen = geometry_from_positions((0, 0), (1, 1), (1, -5))
ch = gen_channel("Rayleigh", ArrayGeometry(4, 4, 12), scen, PathLossModel(), seed=3)
opts = OptimizerOptions(backend="CoordinateAscent")
spec = SensingSpec(dbm_to_watts(-90.0), 256, 1e-2)
out = {"backend": kernels.BACKEND,
       "snr": maximize_snr("FullyPassive", ch, opts=opts).objective,
       "crb": minimize_crb("SemiPassive", ch, None, spec, 1.0, opts).objective}
print(json.dumps(out))
"""


def _run(pure):
    env = dict(os.environ)
    env.pop("IRS_SENSE_PURE_PYTHON", None)
    if pure:
        env["IRS_SENSE_PURE_PYTHON"] = "1"
    res = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def test_fallback_selected_and_equivalent():
    py, c = _run(True), _run(False)
    assert py["backend"] == "python" and c["backend"] == "compiled"
    assert py["snr"] == pytest.approx(c["snr"], rel=1e-12)
    assert py["crb"] == pytest.approx(c["crb"], rel=1e-12)

"""Fast analytic sanity checks, runnable without pytest.

Every check is a zero-argument function that raises ``AssertionError`` on
failure.  ``python -m irs_sense selftest`` runs them all; the test suite
runs the same list under the ``trivial`` marker.
"""

from __future__ import annotations

import math
import traceback
from typing import Callable, List, Tuple

import numpy as np

from . import analysis, conic
from .beamforming import (
    ALIGN_COLUMN,
    IDENTITY,
    RANDOM_PHASES,
    SNR_OBJECTIVE,
    CRB_OBJECTIVE,
    OptimizerOptions,
    appendix_aligned_pattern,
    benchmark_pattern,
    los_optimal_phases,
    maximize_snr,
    transmit_only_design,
)
from .beamforming.patterns import SPLIT_ALIGN
from .channel import (
    ArrayGeometry,
    ChannelValidationError,
    PathLossModel,
    gen_channel,
    geometry_from_positions,
    steering_derivative,
    steering_irs,
    target_coefficient,
)
from .metrics import (
    FULLY,
    SEMI,
    ReflectPattern,
    SensingSpec,
    TransmitCovariance,
    UnboundedCrbError,
    crb,
    crb_approx,
    detection_probability,
    dbm_to_watts,
    fisher_numeric,
    isotropic_covariance,
    marcum_q1,
    mrt_covariance,
    snr,
)

_SCEN = geometry_from_positions((0.0, 0.0), (1.0, 1.0), (1.0, -5.0))
_MODEL = PathLossModel()
_P0 = dbm_to_watts(30.0)
_SPEC = SensingSpec(dbm_to_watts(-90.0), 256, 1e-2)


def _close(a, b, tol=1e-12) -> bool:
    return bool(np.allclose(a, b, rtol=tol, atol=tol))


def _rayleigh(n=8, seed=3):
    return gen_channel("Rayleigh", ArrayGeometry(4, 4, n), _SCEN, _MODEL, seed=seed)


def _los(n=8, seed=3):
    return gen_channel("LoS", ArrayGeometry(4, 4, n), _SCEN, _MODEL, seed=seed)


def check_embed_identity():
    assert _close(conic.embed_hermitian(np.eye(2, dtype=complex)), np.eye(4))


def check_embed_pauli_y():
    e = np.linalg.eigvalsh(conic.embed_hermitian(np.array([[0, -1j], [1j, 0]])))
    assert _close(np.sort(e), [-1, -1, 1, 1], 1e-12)


def check_sdp_forced():
    e11 = np.diag([1.0, 0.0])
    sol = conic.solve_sdp(conic.SdpProblem(np.eye(2), [(e11, 1.0)]), tol=1e-9)
    assert abs(sol.objective - 1.0) < 1e-6
    assert _close(sol.X, e11, 1e-6)


def check_project_psd():
    assert _close(conic.project_psd(np.diag([2.0, -1.0])), np.diag([2.0, 0.0]))
    a = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert _close(conic.project_psd(a), a)


def check_steering():
    g = ArrayGeometry(4, 4, 4)
    assert _close(steering_irs(0.0, 4, g), np.ones(4))
    assert _close(steering_irs(math.pi / 2, 2, g), [np.exp(-0.5j * math.pi), np.exp(0.5j * math.pi)])
    a = steering_irs(0.37, 64, g)
    assert abs(np.vdot(a, a).real - 64.0) < 1e-12


def check_steering_derivative():
    g = ArrayGeometry(4, 4, 4)
    assert _close(steering_derivative(0.4, 1, g), [0.0])
    assert _close(steering_derivative(math.pi / 2, 4, g), np.zeros(4))


def check_geometry():
    try:
        geometry_from_positions((0, 0), (0, 0), (1, -5))
    except ChannelValidationError:
        pass
    else:
        raise AssertionError("coincident BS and IRS accepted")
    # IRS broadside points back at the BS, so a target behind the BS is on broadside
    assert abs(geometry_from_positions((0, 0), (2, 0), (-3, 0)).theta) < 1e-15


def check_los_rank():
    ch = _los(16)
    assert np.linalg.matrix_rank(ch.g_t, tol=1e-9 * np.linalg.norm(ch.g_t)) == 1
    assert abs(np.linalg.norm(ch.g_t) ** 2 / (ch.path_gain * 16 * 4) - 1.0) < 1e-12


def check_target_coefficient():
    a1 = target_coefficient(_SCEN, _MODEL, 1.0, seed=11)
    a4 = target_coefficient(_SCEN, _MODEL, 4.0, seed=11)
    assert abs(abs(a4) / abs(a1) - 2.0) < 1e-12
    assert a1 == target_coefficient(_SCEN, _MODEL, 1.0, seed=11)


def check_snr_zero_power():
    ch = _rayleigh()
    r0 = TransmitCovariance(np.zeros((4, 4)), _P0)
    assert snr(FULLY, r0, np.ones(8), ch, _SPEC) == 0.0


def check_mrt_trace():
    ch = _rayleigh()
    r = mrt_covariance(np.ones(8), ch, _P0)
    assert abs(np.trace(r.r).real - _P0) < 1e-12


def check_crb_power_scaling():
    ch = _rayleigh()
    v = np.exp(1j * np.arange(8.0))
    c1 = crb(FULLY, isotropic_covariance(4, 1.0), v, ch, _SPEC)
    c2 = crb(FULLY, isotropic_covariance(4, 2.0), v, ch, _SPEC)
    assert abs(c1 / c2 - 2.0) < 1e-12


def check_crb_los_unbounded():
    try:
        crb(FULLY, isotropic_covariance(4, _P0), np.ones(8), _los(), _SPEC)
    except UnboundedCrbError:
        return
    raise AssertionError("LoS fully-passive CRB did not raise")


def check_crb_approx_below():
    ch = _rayleigh()
    v = np.exp(1j * np.arange(8.0) ** 2)
    r = isotropic_covariance(4, _P0)
    for arch in (FULLY, SEMI):
        assert crb_approx(arch, r, v, ch, _SPEC) <= crb(arch, r, v, ch, _SPEC)


def check_marcum_edges():
    assert marcum_q1(3.0, 0.0) == 1.0
    for b in (0.5, 1.0, 3.0):
        assert abs(marcum_q1(0.0, b) - math.exp(-b * b / 2.0)) < 1e-14


def check_detection_chance():
    ch = _rayleigh()
    r0 = TransmitCovariance(np.zeros((4, 4)), _P0)
    pd = detection_probability(FULLY, r0, np.ones(8), ch, _SPEC)
    assert abs(pd - _SPEC.p_fa) < 1e-12


def check_detection_monotone_los():
    spec = SensingSpec(dbm_to_watts(-40.0), 1, 1e-2)
    last = 0.0
    for n in (4, 8, 16, 32):
        ch = _los(n)
        v = los_optimal_phases(_SCEN.theta, _SCEN.theta2, ch.array_geometry())
        r = mrt_covariance(v.v, ch, _P0)
        pd = detection_probability(FULLY, r, v, ch, spec)
        assert pd >= last
        last = pd


def check_fisher_symmetric():
    ch = _rayleigh()
    f = fisher_numeric(FULLY, isotropic_covariance(4, _P0), np.ones(8), ch, _SPEC)
    assert np.max(np.abs(f - f.T)) <= 1e-8 * np.max(np.abs(f))


def check_los_phases():
    g = ArrayGeometry(4, 4, 16)
    assert _close(los_optimal_phases(0.3, -0.3, g).phases, np.zeros(16))
    v = los_optimal_phases(0.7, 0.2, g).v
    assert np.max(np.abs(np.abs(v) - 1.0)) < 1e-12


def check_benchmark_patterns():
    assert _close(benchmark_pattern(RANDOM_PHASES, 10, 5).v, benchmark_pattern(RANDOM_PHASES, 10, 5).v, 0.0)
    g = ArrayGeometry(4, 4, 12)
    v = benchmark_pattern(IDENTITY, 12).v
    a = steering_irs(0.0, 12, g)
    assert abs(abs(a @ (v * a)) ** 2 - 144.0) < 1e-9


def check_aligned_pattern_boundaries():
    g = ArrayGeometry(4, 4, 4)
    pat = appendix_aligned_pattern(ALIGN_COLUMN, np.full((4, 2), 0.7 + 0j), 0, 0.0, g)
    assert _close(pat.v, np.ones(4))
    gh = np.exp(1j * np.array([[0.3], [1.1]]))
    g2 = ArrayGeometry(4, 4, 2)
    split = appendix_aligned_pattern(SPLIT_ALIGN, gh, 0, 0.4, g2).phases
    a = steering_irs(0.4, 2, g2)
    assert abs(split[0] + np.angle(a[0])) < 1e-12
    assert abs(np.angle(np.exp(1j * (split[1] + np.angle(a[1]) + 1.1)))) < 1e-12


def check_sdr_below_bound():
    ch = _rayleigh(6, seed=9)
    opts = OptimizerOptions(backend="SdrSca", randomization_samples=100)
    res = maximize_snr(FULLY, ch, opts=opts, p0=_P0)
    val = max(res.objective_trace)
    assert val <= res.relaxation_bound * (1 + 1e-9)


def check_transmit_only():
    ch = _rayleigh()
    v = benchmark_pattern(RANDOM_PHASES, 8, 1)
    r = transmit_only_design(FULLY, ch, v, SNR_OBJECTIVE, _P0)
    assert _close(r.r, mrt_covariance(v, ch, _P0).r, 0.0)
    c1 = crb(SEMI, transmit_only_design(SEMI, ch, v, CRB_OBJECTIVE, 1.0, _SPEC), v, ch, _SPEC)
    c2 = crb(SEMI, transmit_only_design(SEMI, ch, v, CRB_OBJECTIVE, 2.0, _SPEC), v, ch, _SPEC)
    assert abs(c1 / c2 - 2.0) < 1e-6
    assert c1 <= crb(SEMI, isotropic_covariance(4, 1.0), v, ch, _SPEC)


def check_gamma2_boundary():
    for m_t in (1, 3, 7):
        pair = analysis.gamma_bounds(analysis.GAMMA2, 1, m_t, 4)
        assert abs(pair.lower - m_t) < 1e-12 and abs(pair.upper - m_t) < 1e-12


def check_threshold_unit_gain():
    assert analysis.crossover_threshold(analysis.LOS_SNR, 1.0) == 1.0


def check_fit_synthetic():
    fit = analysis.fit_scaling_exponent([(n, 3.0 * n ** 4) for n in (10, 20, 40, 80)])
    assert abs(fit.slope - 4.0) < 1e-9


def check_crossover_single_point():
    try:
        analysis.find_crossover([(10, 1.0)], [(10, 2.0)])
    except analysis.AnalysisError:
        return
    raise AssertionError("single-point grid accepted")


def check_sweep_determinism():
    from .experiments.config import ScenarioConfig
    from .experiments.sweep import run_sweep

    cfg = ScenarioConfig(n_list=[6, 8], trials=2, schemes=["JointBf", "NoOptimization"],
                         backend="CoordinateAscent", record_wall_time=False)
    assert run_sweep(cfg).to_csv() == run_sweep(cfg).to_csv()


CHECKS: List[Tuple[str, Callable[[], None]]] = [
    (name[len("check_"):], fn) for name, fn in sorted(globals().items())
    if name.startswith("check_") and callable(fn)
]


def run_all(verbose: bool = True) -> int:
    """Run every check; returns the number of failures."""
    failed = 0
    for name, fn in CHECKS:
        try:
            fn()
            ok = True
        except Exception:  # report and keep going
            ok = False
            failed += 1
            if verbose:
                traceback.print_exc()
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'} {name}")
    if verbose:
        print(f"{len(CHECKS) - failed}/{len(CHECKS)} checks passed")
    return failed

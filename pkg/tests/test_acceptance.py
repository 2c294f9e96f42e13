"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion k: PASS|FAIL`` line (collected again in
the terminal summary) and then asserts.  Tolerances are the stated ones;
nothing is loosened to make a criterion pass.
"""

import functools
import itertools
import math
import time

import numpy as np
import pytest

from irs_sense import analysis
from irs_sense.beamforming import (
    COORDINATE_ASCENT,
    SDR_SCA,
    OptimizerOptions,
    isotropic_crb_objective,
    maximize_snr,
    sdr_sca,
    snr_objective,
)
from irs_sense.channel import BS_IRS, ArrayGeometry, gen_channel, path_loss
from irs_sense.conic import OPTIMAL, SdpProblem, embed_hermitian, solve_sdp
from irs_sense.experiments.bounds import bounds_check, format_report
from irs_sense.experiments.figures import figure_recipe, run_recipe
from irs_sense.experiments.sweep import METRIC_CRB, METRIC_CRB_APPROX, METRIC_SNR
from irs_sense.metrics import (
    FULLY,
    SEMI,
    SensingSpec,
    TransmitCovariance,
    crb,
    crb_from_fisher,
    detection_probability,
    fisher_numeric,
    isotropic_covariance,
    snr,
)

from conftest import random_phases
from test_beamforming import BRUTE_N6
from test_conic import _kkt

RESULTS = {}


def report(k, ok, detail):
    line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line)
    assert ok, line


@functools.lru_cache(maxsize=None)
def _figure(tag, trials=None, n_list=None):
    recipe = figure_recipe(tag, trials=trials, n_list=list(n_list) if n_list else None)
    return recipe, run_recipe(recipe)


def _curve(res, arch, scheme, metric):
    return dict(res.series(arch, scheme, metric))


def test_criterion_01_los_closed_forms(scen, model, spec, p0):
    t0 = time.perf_counter()
    l_d = path_loss(scen.d_bi, model, BS_IRS)
    worst = 0.0
    got = {}
    for n in (8, 10, 16, 32, 64, 100):
        ch = gen_channel("LoS", ArrayGeometry(4, 4, n), scen, model, seed=n)
        for arch in (FULLY, SEMI):
            res = maximize_snr(arch, ch, opts=OptimizerOptions(backend=COORDINATE_ASCENT), p0=p0)
            val = snr(arch, res.r, res.v, ch, spec)
            cf = analysis.los_snr_closed_form(arch, n, p0, abs(ch.alpha) ** 2, l_d, 4, 4, spec.sigma2)
            got[(n, arch)] = val / abs(ch.alpha) ** 2
            if n in (8, 16, 32, 64):
                worst = max(worst, abs(val / cf - 1.0))
    dec_f = 10 * math.log10(got[(100, FULLY)] / got[(10, FULLY)])
    dec_s = 10 * math.log10(got[(100, SEMI)] / got[(10, SEMI)])
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and abs(dec_f - 40.0) <= 1e-9 and abs(dec_s - 20.0) <= 1e-9 and elapsed < 10
    report(1, ok, f"max rel err {worst:.2e}; decade gains {dec_f:.12f} / {dec_s:.12f} dB; {elapsed:.1f} s")


def test_criterion_02_los_crossover(scen, model):
    t0 = time.perf_counter()
    l_d = path_loss(scen.d_bi, model, BS_IRS)
    ns = list(range(10, 101))
    f = analysis.los_snr_closed_form(FULLY, ns, 1.0, 1.0, l_d, 4, 4, 1.0)
    s = analysis.los_snr_closed_form(SEMI, ns, 1.0, 1.0, l_d, 4, 4, 1.0)
    cross = analysis.find_crossover(list(zip(ns, f)), list(zip(ns, s)))
    thr = analysis.crossover_threshold(analysis.LOS_SNR, l_d)
    elapsed = time.perf_counter() - t0
    ok = cross == 47 and math.floor(thr) + 1 == 47 and abs(thr - 46.3) < 0.05 and elapsed < 5
    report(2, ok, f"crossover {cross}, 1/sqrt(L) = {thr:.2f}")


@pytest.mark.slow
def test_criterion_03_rayleigh_snr_scaling():
    _recipe, res = _figure("Fig3", 100, (10, 100))
    want = {("Rayleigh", FULLY): (36.28, 1.5), ("Rayleigh", SEMI): (18.14, 1.0),
            ("Rician", FULLY): (39.34, 1.5), ("Rician", SEMI): (19.67, 1.0)}
    parts, ok = [], True
    for (chan, arch), (target, tol) in want.items():
        c = _curve(res, arch, f"JointBf@{chan}", METRIC_SNR)
        gain = c[100] - c[10]
        ok &= abs(gain - target) <= tol
        parts.append(f"{chan}/{arch[:4]} {gain:.2f} dB (want {target}+-{tol})")
    report(3, ok, "; ".join(parts))


@pytest.mark.slow
def test_criterion_04_rayleigh_snr_crossover():
    _recipe, res = _figure("Fig5")
    cross = {}
    for scheme in ("JointBf", "TransmitOnly", "NoOptimization"):
        cross[scheme] = analysis.find_crossover(res.series(FULLY, scheme, METRIC_SNR),
                                                res.series(SEMI, scheme, METRIC_SNR))
    j = cross["JointBf"]
    ok = j is not None and 75 <= j <= 110 and cross["TransmitOnly"] is None and cross["NoOptimization"] is None
    report(4, ok, f"crossovers {cross} (joint want [75, 110])")


@pytest.mark.slow
def test_criterion_05_crb_approximation():
    _recipe, res = _figure("Fig2")
    worst, where = 0.0, None
    for arch in (FULLY, SEMI):
        ex, ap = _curve(res, arch, "JointBf", METRIC_CRB), _curve(res, arch, "JointBf", METRIC_CRB_APPROX)
        assert sorted(ex) == list(range(16, 129, 16))
        for n in ex:
            d = abs(ex[n] - ap[n])
            if d > worst:
                worst, where = d, (arch, n)
    report(5, worst <= 0.2, f"max |approx - exact| {worst:.4f} dB at {where}")


@pytest.mark.slow
def test_criterion_06_crb_scaling():
    _recipe, res = _figure("Fig6")
    want = {("Rayleigh", FULLY): 56.14, ("Rayleigh", SEMI): 38.63,
            ("Rician", FULLY): 54.55, ("Rician", SEMI): 40.05}
    slope_rng = {FULLY: (5.2, 6.2), SEMI: (3.6, 4.4)}
    parts, ok = [], True
    for (chan, arch), target in want.items():
        c = _curve(res, arch, f"JointBf@{chan}", METRIC_CRB)
        red = c[20] - c[200]
        tol = 3.0 if arch == FULLY else 2.0
        fit = analysis.fit_scaling_exponent([(n, 10 ** (db / 10)) for n, db in sorted(c.items())], min_n=16)
        lo, hi = slope_rng[arch]
        ok &= abs(red - target) <= tol and lo <= -fit.slope <= hi
        parts.append(f"{chan}/{arch[:4]} {red:.2f} dB (want {target}+-{tol}), slope {fit.slope:.2f}")
    report(6, ok, "; ".join(parts))


@pytest.mark.slow
def test_criterion_07_crb_crossovers():
    _recipe, res = _figure("Fig7")
    cross = {s: analysis.find_crossover(res.series(FULLY, s, METRIC_CRB), res.series(SEMI, s, METRIC_CRB),
                                        lower_is_better=True)
             for s in ("JointBf", "ReflectiveOnly")}
    j, r = cross["JointBf"], cross["ReflectiveOnly"]
    ok_j = j is not None and 150 <= j <= 200
    ok_r = r is not None and 190 <= r <= 240
    report(7, ok_j and ok_r, f"joint {j} (want [150, 200]: {'ok' if ok_j else 'miss'}); "
                             f"reflective-only {r} (want [190, 240]: {'ok' if ok_r else 'miss'})")


@pytest.mark.slow
def test_criterion_08_bound_sandwich():
    rep = bounds_check(n=32, m_t=4, m_r=4, draws=200, seed=0)
    print(format_report(rep))
    viol = {q: s.violations(1e-9) for q, s in rep.sandwiches.items()}
    means = {m.quantity: m.z for m in rep.means}
    ok = sum(viol.values()) == 0 and all(m.ok(3.0) for m in rep.means)
    report(8, ok, f"violations {viol}; mean z-scores " + ", ".join(f"{k} {z:+.2f}" for k, z in means.items()))


def test_criterion_09_fim_oracle(scen, model, spec, p0):
    rng = np.random.default_rng(9)
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(2, 17))
        kind = ("Rayleigh", "Rician")[i % 2]
        ch = gen_channel(kind, ArrayGeometry(4, 4, n), scen, model, seed=100 + i, k_factor=1.0)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        r = a @ a.conj().T
        cov = TransmitCovariance(r * p0 / np.trace(r).real, p0)
        v = random_phases(rng, n)
        arch = (FULLY, SEMI)[(i // 2) % 2]
        num = crb_from_fisher(fisher_numeric(arch, cov, v, ch, spec))
        worst = max(worst, abs(crb(arch, cov, v, ch, spec) / num - 1.0))
    report(9, worst <= 1e-4, f"max relative deviation {worst:.2e} over 50 instances")


def test_criterion_10_detection(scen, model):
    from irs_sense.metrics import simulate_glrt

    ch = gen_channel("Rayleigh", ArrayGeometry(4, 4, 6), scen, model, seed=1)
    v = np.ones(6)
    r = isotropic_covariance(4, 1.0)
    t = 16
    s1 = snr(FULLY, r, v, ch, SensingSpec(1.0, t, 1e-2))
    parts, ok = [], True
    for k, tsnr in enumerate((5.0, 10.0, 20.0)):
        spec = SensingSpec(t * s1 / tsnr, t, 1e-2)
        emp = simulate_glrt(FULLY, r, v, ch, spec, trials=10_000, seed=10 + k)
        pred = detection_probability(FULLY, r, v, ch, spec)
        ok &= abs(emp - pred) <= 0.02
        parts.append(f"T*SNR={tsnr:g}: {emp:.4f} vs {pred:.4f}")
    spec = SensingSpec(t * s1 / 10.0, t, 1e-2)
    fa = simulate_glrt(FULLY, r, v, ch, spec, trials=10_000, seed=99, target_present=False)
    ok &= abs(fa - 1e-2) <= 0.3e-2
    report(10, ok, f"false alarm {fa:.4f}; " + "; ".join(parts))


def test_criterion_11_optimizer_hygiene(scen, model):
    traces_ok, bounds_ok, worst_gap, n_inst = True, True, 0.0, 0
    for i in range(25):
        n = (8, 16, 24, 32)[i % 4]
        ch = gen_channel("Rayleigh", ArrayGeometry(4, 4, n), scen, model, seed=500 + i)
        for arch in (FULLY, SEMI):
            a = maximize_snr(arch, ch, opts=OptimizerOptions(backend=SDR_SCA))
            b = maximize_snr(arch, ch, opts=OptimizerOptions(backend=COORDINATE_ASCENT))
            n_inst += 1
            tr = np.asarray(a.objective_trace)
            traces_ok &= bool(np.all(np.diff(tr) >= -1e-12 * abs(tr[-1])))
            bounds_ok &= a.objective <= a.relaxation_bound * (1 + 1e-9)
            worst_gap = max(worst_gap, abs(a.objective - b.objective) / max(a.objective, b.objective))
            if i < 6:
                c = sdr_sca(isotropic_crb_objective(arch, ch), seed=i)
                traces_ok &= bool(np.all(np.diff(c.trace) >= -1e-12 * abs(c.trace[-1])))
                bounds_ok &= c.objective <= c.relaxation_bound * (1 + 1e-9)
    ratios = []
    ph = np.exp(2j * np.pi * np.arange(16) / 16)
    grid = np.stack([np.ones(16 ** 5, complex)] + [x.ravel() for x in np.meshgrid(*([ph] * 5), indexing="ij")], 1)
    for seed in range(3):
        ch = gen_channel("Rayleigh", ArrayGeometry(4, 4, 6), scen, model, seed=seed)
        for arch in (FULLY, SEMI):
            obj = snr_objective(arch, ch)
            brute = max(float(np.max(obj.values_batch(grid[k:k + 65536]))) for k in range(0, grid.shape[0], 65536))
            assert brute == pytest.approx(BRUTE_N6[(seed, arch)], rel=1e-12)
            ratios.append(maximize_snr(arch, ch, opts=OptimizerOptions(backend=SDR_SCA)).objective / brute)
    ok = traces_ok and bounds_ok and worst_gap <= 0.03 and n_inst == 50 and min(ratios) >= 0.95
    report(11, ok, f"traces monotone {traces_ok}; randomized <= bound {bounds_ok}; "
                   f"CA vs SdrSca worst gap {worst_gap:.2%} on {n_inst}; SdrSca/brute min {min(ratios):.4f}")


def test_criterion_12_solver(scen, model):
    cases = []
    p = SdpProblem(np.eye(2), [(np.diag([1.0, 0.0]), 1.0)])
    cases.append(("forced", p, 1.0, 1.0))
    g = np.array([1.0, -2.0, 3.0])
    brute = max((np.array(x) @ g) ** 2 for x in itertools.product((-1, 1), repeat=3))
    cases.append(("real rank-one", SdpProblem(np.outer(g, g), [(np.diag(e), 1.0) for e in np.eye(3)], sense="maximize"),
                  brute, 1.0))
    n = 16
    ch = gen_channel("LoS", ArrayGeometry(4, 4, n), scen, model)
    a = ch.steering()
    r2 = np.diag(a.conj()) @ ch.g_t_hat.conj() @ ch.g_t_hat.T @ np.diag(a) / 4.0
    # Hermitian instance through the real embedding: constraints and objective double
    eqs = [(embed_hermitian(np.diag(e).astype(complex)), 2.0) for e in np.eye(n)]
    cases.append(("LoS relaxation", SdpProblem(embed_hermitian(r2), eqs, sense="maximize"), float(n * n), 2.0))
    parts, ok = [], True
    for name, prob, want, scale in cases:
        sol = solve_sdp(prob, tol=1e-9)
        kkt = max(_kkt(prob, sol))
        err = abs(sol.objective / scale - want)
        ok &= sol.status == OPTIMAL and kkt <= 1e-6 and err <= 1e-6
        parts.append(f"{name}: kkt {kkt:.1e}, err {err:.1e}")
    report(12, ok, "; ".join(parts))

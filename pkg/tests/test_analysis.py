import math

import numpy as np
import pytest
from scipy.optimize import brentq

from irs_sense import analysis
from irs_sense.analysis import (
    GAMMA1,
    GAMMA2,
    GAMMA3,
    GAMMA4,
    LOS_SNR,
    QUANTITIES,
    RAYLEIGH_SNR,
    AnalysisError,
    BoundPair,
    crossover_threshold,
    find_crossover,
    fit_scaling_exponent,
    gamma_bounds,
    los_snr_closed_form,
)
from irs_sense.channel import BS_IRS, path_loss
from irs_sense.experiments.bounds import (
    ALIGNED_SNR_SEMI,
    COLUMN_GAIN,
    DERIVATIVE_SUM,
    SPLIT_PRODUCT,
    bounds_check,
)
from irs_sense.metrics import FULLY, SEMI

L_D = 4.665e-4


def test_l_d_of_reference_geometry(scen, model):
    assert path_loss(scen.d_bi, model, BS_IRS) == pytest.approx(L_D, rel=1e-3)


class TestGammaBounds:
    def test_ordered_on_grid(self):
        for q in QUANTITIES:
            for n in range(1, 257):
                for m_t in range(1, 9):
                    for m_r in range(1, 9):
                        b = gamma_bounds(q, n, m_t, m_r)
                        assert b.lower <= b.upper

    def test_gamma1_unit(self):
        b = gamma_bounds(GAMMA1, 1, 1, 1)
        assert (b.lower, b.upper) == (1.0, 3.0)

    def test_gamma2_collapse(self):
        for m_t in (1, 2, 5):
            b = gamma_bounds(GAMMA2, 1, m_t, 3)
            assert b.lower == b.upper == m_t

    def test_gamma3_sixth_power(self):
        b = gamma_bounds(GAMMA3, 100, 4, 4)
        assert b.lower <= b.upper
        assert 1e-4 < b.lower / 100 ** 6 <= b.upper / 100 ** 6 < 1e2
        # leading coefficients: 1/512 (lower) and 2 K_min (M_t + M_r + (1 - 3 K_min)/2) / 3 (upper)
        big = gamma_bounds(GAMMA3, 10 ** 5, 4, 4)
        assert big.lower / 1e30 == pytest.approx(1 / 512, rel=1e-2)
        assert big.upper / 1e30 == pytest.approx(2 * 4 * (8 - 5.5) / 3, rel=1e-4)

    def test_single_element_contains_exact_mean(self):
        rng = np.random.default_rng(0)
        for m in (1, 6):
            b = gamma_bounds(GAMMA1, 1, m, m)
            # shared-column model: g_t and g_r share their first K_min entries
            h = (rng.standard_normal((200_000, m)) + 1j * rng.standard_normal((200_000, m))) / math.sqrt(2)
            mc = np.mean(np.sum(np.abs(h) ** 2, axis=1) ** 2)
            assert b.contains(mc)
            assert mc == pytest.approx(m * m + m, rel=2e-2)
        assert gamma_bounds(GAMMA3, 1, 4, 4).lower == 0.0
        assert gamma_bounds(GAMMA4, 1, 3, 1).lower == 0.0

    def test_gamma4_fourth_power(self):
        b1, b2 = gamma_bounds(GAMMA4, 1000, 4, 4), gamma_bounds(GAMMA4, 2000, 4, 4)
        assert math.log2(b2.lower / b1.lower) == pytest.approx(4.0, abs=1e-2)
        assert math.log2(b2.upper / b1.upper) == pytest.approx(4.0, abs=1e-2)

    def test_errors(self):
        with pytest.raises(AnalysisError):
            gamma_bounds("Gamma9", 4, 4, 4)
        with pytest.raises(AnalysisError):
            gamma_bounds(GAMMA1, 0, 4, 4)
        with pytest.raises(AnalysisError):
            BoundPair(2.0, 1.0, GAMMA1)
        assert BoundPair(1.0, 2.0, GAMMA1).contains(2.0 + 1e-12, rel_tol=1e-9)


class TestThresholds:
    def test_los_value(self):
        t = crossover_threshold(LOS_SNR, L_D)
        assert t == pytest.approx(46.3, abs=0.05)
        assert math.floor(t) + 1 == 47

    def test_los_equals_closed_form_equality_point(self):
        def gap(n):
            f = los_snr_closed_form(FULLY, n, 1.0, 1.0, L_D, 4, 4, 1.0)
            s = los_snr_closed_form(SEMI, n, 1.0, 1.0, L_D, 4, 4, 1.0)
            return math.log(f / s)

        root = brentq(gap, 2.0, 1000.0, xtol=1e-12)
        assert crossover_threshold(LOS_SNR, L_D) == pytest.approx(root, rel=1e-10)

    def test_rayleigh_value(self):
        t = crossover_threshold(RAYLEIGH_SNR, L_D, 4, 4)
        assert t == pytest.approx(2.3e2, rel=0.05)
        # sufficient condition: looser than the empirical crossover near 91
        assert t > 91

    def test_rayleigh_is_where_bounds_meet(self):
        # fully lower bound L^2 gamma1_lower = semi upper bound L M_r gamma2_upper
        t = crossover_threshold(RAYLEIGH_SNR, L_D, 4, 4)
        lhs = L_D ** 2 * analysis.gamma1_lower(t, 4, 4)
        rhs = L_D * 4 * analysis.gamma2_upper(t, 4)
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_errors(self):
        with pytest.raises(AnalysisError):
            crossover_threshold(LOS_SNR, 0.0)
        with pytest.raises(AnalysisError):
            crossover_threshold(LOS_SNR, 1.5)
        with pytest.raises(AnalysisError):
            crossover_threshold("Nope", 0.1)


class TestFit:
    def test_los_closed_form_slopes(self):
        ns = list(range(10, 101, 10))
        for arch, want in ((FULLY, 4.0), (SEMI, 2.0)):
            vals = los_snr_closed_form(arch, ns, 1.0, 1e-3, L_D, 4, 4, 1e-12)
            fit = fit_scaling_exponent(list(zip(ns, vals)))
            assert fit.slope == pytest.approx(want, abs=1e-9)
            assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
            assert fit.n_range == (10, 100)

    def test_min_n_drops_small_points(self):
        pts = [(2, 1.0)] + [(n, n ** 3.0) for n in (16, 32, 64, 128)]
        assert fit_scaling_exponent(pts, min_n=16).slope == pytest.approx(3.0, abs=1e-12)
        assert fit_scaling_exponent(pts).slope != pytest.approx(3.0, abs=1e-3)

    def test_errors(self):
        with pytest.raises(AnalysisError):
            fit_scaling_exponent([(1, 1.0), (2, 2.0), (3, 3.0)])
        with pytest.raises(AnalysisError):
            fit_scaling_exponent([(1, 1.0), (2, -2.0), (3, 3.0), (4, 4.0)])
        with pytest.raises(AnalysisError):
            fit_scaling_exponent([(1, 1.0), (3, 2.0), (2, 3.0), (4, 4.0)])


class TestCrossover:
    def test_los_closed_forms(self):
        ns = list(range(10, 101))
        f = los_snr_closed_form(FULLY, ns, 1.0, 1.0, L_D, 4, 4, 1.0)
        s = los_snr_closed_form(SEMI, ns, 1.0, 1.0, L_D, 4, 4, 1.0)
        assert find_crossover(list(zip(ns, f)), list(zip(ns, s))) == 47

    def test_semi_always_better(self):
        ns = [10, 20, 30, 40]
        assert find_crossover([(n, 1.0) for n in ns], [(n, 2.0) for n in ns]) is None

    def test_persistence(self):
        ns = [1, 2, 3, 4, 5]
        f = [(1, 2.0), (2, 0.0), (3, 2.0), (4, 2.0), (5, 2.0)]
        assert find_crossover(f, [(n, 1.0) for n in ns]) == 3
        f[-1] = (5, 0.0)
        assert find_crossover(f, [(n, 1.0) for n in ns]) is None

    def test_lower_is_better(self):
        ns = [1, 2, 3]
        assert find_crossover([(1, 5.0), (2, 1.0), (3, 0.5)], [(n, 2.0) for n in ns], lower_is_better=True) == 2

    def test_errors(self):
        with pytest.raises(AnalysisError):
            find_crossover([(10, 1.0)], [(10, 2.0)])
        with pytest.raises(AnalysisError):
            find_crossover([(10, 1.0), (20, 1.0)], [(10, 2.0), (30, 2.0)])


class TestAlignedExpectations:
    def test_exact_forms_against_monte_carlo(self):
        rep = bounds_check(n=16, draws=4000, seed=11, with_sandwich=False)
        by = {m.quantity: m for m in rep.means}
        for q in (COLUMN_GAIN, ALIGNED_SNR_SEMI):
            assert by[q].ok(), by[q]
        for q in (SPLIT_PRODUCT, DERIVATIVE_SUM):
            m = by[q]
            assert abs(m.mean - m.exact) <= 4 * m.std_err, m

    def test_exact_forms_small_n_enumeration(self):
        # N = 2: derivative weights are -1, +1; aligned column gives (|g1| + |g2|)^2
        d_exact = analysis.derivative_align_exact(2, 3, 2)
        want = 2 * ((math.pi / 4) * 4 + (1 - math.pi / 4) * 2 + 2 * 2)
        assert d_exact == pytest.approx(want, rel=1e-12)

    def test_printed_gamma1_is_product_of_means(self):
        assert analysis.gamma1_align_column_printed(20, 4, 2) == analysis.gamma1_lower(20, 4, 2)

import itertools

import numpy as np
import pytest

from irs_sense.channel import ArrayGeometry, PathLossModel, gen_channel
from irs_sense.conic import (
    INFEASIBLE,
    OPTIMAL,
    SdpProblem,
    SdpValidationError,
    embed_hermitian,
    project_psd,
    solve_hermitian_sdp,
    solve_sdp,
    unembed_hermitian,
)

from conftest import random_hermitian


def _kkt(p: SdpProblem, sol):
    """Primal feasibility, dual feasibility and complementarity of a solution."""
    s = p.C.copy()
    for (a, _b), y in zip(p.eq_constraints, sol.y):
        s = s - y * np.asarray(a)
    if p.sense == "maximize":
        s = -s
    primal = max(abs(np.sum(np.asarray(a) * sol.X) - b) for a, b in p.eq_constraints)
    dual = max(-np.linalg.eigvalsh(s)[0], 0.0)
    comp = abs(np.sum(s * sol.X))
    return primal, dual, comp


class TestEmbedding:
    def test_eigenvalues_duplicated(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            h = random_hermitian(rng, 3)
            ev = np.linalg.eigvalsh(h)
            emb = np.linalg.eigvalsh(embed_hermitian(h))
            assert np.allclose(np.sort(np.repeat(ev, 2)), emb, atol=1e-10)

    def test_inner_product_doubles(self):
        rng = np.random.default_rng(1)
        a, b = random_hermitian(rng, 4), random_hermitian(rng, 4)
        lhs = np.sum(embed_hermitian(a) * embed_hermitian(b))
        assert lhs == pytest.approx(2.0 * np.real(np.vdot(a, b)), rel=1e-12)

    def test_round_trip(self):
        h = random_hermitian(np.random.default_rng(2), 5)
        assert np.allclose(unembed_hermitian(embed_hermitian(h)), h)

    def test_rejects_non_hermitian(self):
        with pytest.raises(SdpValidationError):
            embed_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


class TestProjectPsd:
    def test_idempotent(self):
        rng = np.random.default_rng(3)
        s = rng.standard_normal((6, 6))
        s = s + s.T
        once = project_psd(s)
        assert np.allclose(project_psd(once), once, atol=1e-12)

    def test_nearest_among_random_candidates(self):
        rng = np.random.default_rng(4)
        s = rng.standard_normal((4, 4))
        s = s + s.T
        best = np.linalg.norm(s - project_psd(s))
        for _ in range(10_000):
            b = rng.standard_normal((4, 4))
            cand = b @ b.T * rng.uniform(0, 2)
            assert np.linalg.norm(s - cand) >= best - 1e-12


class TestSolveSdp:
    def test_forced_instance_kkt(self):
        p = SdpProblem(np.eye(2), [(np.diag([1.0, 0.0]), 1.0)])
        sol = solve_sdp(p, tol=1e-9)
        assert sol.status == OPTIMAL
        assert abs(sol.objective - 1.0) <= 1e-6
        assert max(_kkt(p, sol)) <= 1e-6

    def test_real_rank_one_cost_matches_enumeration(self):
        g = np.array([1.0, -2.0, 3.0])
        brute = max((np.array(x) @ g) ** 2 for x in itertools.product((-1, 1), repeat=3))
        eqs = [(np.diag(e), 1.0) for e in np.eye(3)]
        p = SdpProblem(np.outer(g, g), eqs, sense="maximize")
        sol = solve_sdp(p, tol=1e-9)
        assert brute == 36.0
        assert sol.status == OPTIMAL
        assert abs(sol.objective - brute) <= 1e-6
        assert max(_kkt(p, sol)) <= 1e-6
        assert sol.min_eigenvalue >= -1e-9

    def test_los_pattern_relaxation_is_n_squared(self, scen, model):
        n = 16
        ch = gen_channel("LoS", ArrayGeometry(4, 4, n), scen, model)
        a = ch.steering()
        r2 = np.diag(a.conj()) @ ch.g_t_hat.conj() @ ch.g_t_hat.T @ np.diag(a) / 4.0
        eqs = [(np.diag(e).astype(complex), 1.0) for e in np.eye(n)]
        res = solve_hermitian_sdp(r2, eqs, sense="maximize", tol=1e-9)
        assert res.solution.status == OPTIMAL
        assert abs(res.objective - n ** 2) <= 1e-6

    def test_inequality_constraint(self):
        # maximize x11 + x22 subject to tr(X) <= 3
        p = SdpProblem(np.eye(2), ineq_constraints=[(np.eye(2), 3.0)], sense="maximize")
        sol = solve_sdp(p, tol=1e-9)
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(3.0, abs=1e-6)
        assert np.trace(sol.X) <= 3.0 + 1e-7

    def test_infeasible_detected(self):
        # a negative diagonal entry, and |x12| = 1.5 with unit diagonal, both miss the PSD cone
        sol = solve_sdp(SdpProblem(np.eye(2), [(np.diag([1.0, 0.0]), -1.0)]))
        assert sol.status == INFEASIBLE
        off = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]) / 2.0
        eqs = [(np.diag([1.0, 0.0, 0.0]), 1.0), (np.diag([0.0, 1.0, 0.0]), 1.0), (off, 1.5)]
        assert solve_sdp(SdpProblem(np.eye(3), eqs)).status == INFEASIBLE

    def test_contradictory_equalities_not_optimal(self):
        e = np.diag([1.0, 0.0])
        sol = solve_sdp(SdpProblem(np.eye(2), [(e, 1.0), (e, -1.0)]), max_iter=3000)
        assert sol.status != OPTIMAL

    def test_validation(self):
        with pytest.raises(SdpValidationError):
            SdpProblem(np.array([[0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(SdpValidationError):
            SdpProblem(np.eye(2), [(np.eye(3), 1.0)])
        with pytest.raises(SdpValidationError):
            SdpProblem(np.eye(2), sense="sideways")

"""Dense semidefinite programming by dual operator splitting.

Solves

    min / max  <C, X>   s.t.  <A_i, X> = b_i,  <A_j, X> <= b_j,  X PSD

with an alternating-direction method on the dual (projection onto the
affine set, projection onto the PSD cone, multiplier update with
over-relaxation).  Inequalities are turned into equalities with slack
entries on the diagonal of an augmented matrix.  Complex Hermitian
problems go through :func:`embed_hermitian`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

OPTIMAL = "Optimal"
MAX_ITERATIONS = "MaxIterations"
INFEASIBLE = "Infeasible"

_SYM_TOL = 1e-12


class SdpValidationError(ValueError):
    """Raised on malformed problem data."""


def _check_symmetric(a: np.ndarray, name: str, hermitian: bool = False) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SdpValidationError(f"{name} must be square, got shape {a.shape}")
    ref = a.conj().T if hermitian else a.T
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if a.size and float(np.max(np.abs(a - ref))) > _SYM_TOL * scale:
        kind = "Hermitian" if hermitian else "symmetric"
        raise SdpValidationError(f"{name} is not {kind}")


def embed_hermitian(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding ``[[Re H, -Im H], [Im H, Re H]]``.

    Eigenvalues of the embedding are those of ``H`` with doubled
    multiplicity and ``<embed(A), embed(B)> = 2 Re <A, B>``.
    """
    h = np.asarray(h)
    _check_symmetric(h, "H", hermitian=True)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]]).astype(float)


def unembed_hermitian(x: np.ndarray) -> np.ndarray:
    """Recover the Hermitian matrix represented by a real embedding.

    Averages the two copies, so it is also the Frobenius projection of a
    symmetric ``2n x 2n`` matrix onto the set of embeddings.
    """
    n = x.shape[0] // 2
    x11, x12 = x[:n, :n], x[:n, n:]
    x21, x22 = x[n:, :n], x[n:, n:]
    return 0.5 * (x11 + x22) + 0.5j * (x21 - x12)


def project_psd(s: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix (negative eigenvalues clipped to zero)."""
    s = np.asarray(s, dtype=float)
    s = 0.5 * (s + s.T)
    w, q = np.linalg.eigh(s)
    if w[0] >= 0.0:
        return s
    w = np.clip(w, 0.0, None)
    return (q * w) @ q.T


@dataclass
class SdpProblem:
    """Real symmetric SDP in standard form.

    ``eq_constraints`` holds pairs ``(A_i, b_i)`` for ``<A_i, X> = b_i`` and
    ``ineq_constraints`` pairs ``(A_j, b_j)`` for ``<A_j, X> <= b_j``.
    """

    C: np.ndarray
    eq_constraints: list = field(default_factory=list)
    ineq_constraints: list = field(default_factory=list)
    sense: str = "minimize"

    def __post_init__(self) -> None:
        self.C = np.asarray(self.C, dtype=float)
        if self.C.ndim != 2 or self.C.shape[0] < 1:
            raise SdpValidationError("C must be a non-empty square matrix")
        _check_symmetric(self.C, "C")
        if self.sense not in ("minimize", "maximize"):
            raise SdpValidationError(f"unknown sense {self.sense!r}")
        n = self.C.shape[0]
        for label, cons in (("eq", self.eq_constraints), ("ineq", self.ineq_constraints)):
            for k, (a, _b) in enumerate(cons):
                a = np.asarray(a, dtype=float)
                if a.shape != (n, n):
                    raise SdpValidationError(f"{label} constraint {k} has shape {a.shape}, expected {(n, n)}")
                _check_symmetric(a, f"{label} constraint {k}")

    @property
    def n(self) -> int:
        return self.C.shape[0]


@dataclass
class SdpSolution:
    """Solver output.

    ``y`` are equality multipliers and ``z`` inequality multipliers, signed
    so that ``C - sum(y_i A_i) - sum(z_j A_j)`` is PSD for minimization and
    NSD for maximization (``z <= 0`` for minimize, ``z >= 0`` for maximize).
    """

    X: np.ndarray
    objective: float
    status: str
    primal_residual: float
    dual_residual: float
    min_eigenvalue: float
    iterations: int = 0
    gap: float = float("nan")
    y: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    dual_objective: float = float("nan")


def _constraint_rows(p: SdpProblem):
    """Stack vectorized constraint matrices of the slack-augmented problem."""
    n = p.n
    n_ineq = len(p.ineq_constraints)
    n_aug = n + n_ineq
    rows, rhs = [], []
    for a, b in p.eq_constraints:
        big = np.zeros((n_aug, n_aug))
        big[:n, :n] = a
        rows.append(big.ravel())
        rhs.append(float(b))
    for j, (a, b) in enumerate(p.ineq_constraints):
        big = np.zeros((n_aug, n_aug))
        big[:n, :n] = a
        big[n + j, n + j] = 1.0
        rows.append(big.ravel())
        rhs.append(float(b))
    # off-block entries of the augmented matrix stay free
    if not rows:
        return np.zeros((0, n_aug * n_aug)), np.zeros(0), n_aug
    return np.array(rows), np.array(rhs), n_aug


def solve_sdp(
    p: SdpProblem,
    tol: float = 1e-7,
    max_iter: int = 20000,
    relax: float = 1.6,
    warm_start: Optional[np.ndarray] = None,
    mu0: float = 1.0,
) -> SdpSolution:
    """Solve an :class:`SdpProblem`.

    Parameters
    ----------
    p : SdpProblem
    tol : float
        Stopping tolerance on relative primal/dual residuals and gap; the
        unscaled equality residual is also required to be below ``tol``.
    max_iter : int
    relax : float
        Over-relaxation of the multiplier step, in ``(0, 1.618)``.
    warm_start : ndarray, optional
        Initial primal matrix of size ``n`` (slacks start at zero).

    Returns
    -------
    SdpSolution
    """
    if tol <= 0:
        raise SdpValidationError("tol must be positive")
    if max_iter < 1:
        raise SdpValidationError("max_iter must be >= 1")
    n = p.n
    sign = -1.0 if p.sense == "maximize" else 1.0
    amat, b, n_aug = _constraint_rows(p)
    m = amat.shape[0]
    m_user = len(p.eq_constraints) + len(p.ineq_constraints)

    c_full = np.zeros((n_aug, n_aug))
    c_full[:n, :n] = sign * p.C

    # row and cost scaling
    row_norm = np.linalg.norm(amat, axis=1) if m else np.zeros(0)
    row_norm[row_norm == 0] = 1.0
    a_s = amat / row_norm[:, None] if m else amat
    b_s = b / row_norm if m else b
    beta = max(1.0, float(np.linalg.norm(b_s))) if m else 1.0
    b_s = b_s / beta
    c_norm = float(np.linalg.norm(c_full))
    gamma = 1.0 / c_norm if c_norm > 0 else 1.0
    c_s = c_full * gamma
    c_vec = c_s.ravel()

    if m:
        gram = a_s @ a_s.T
        gram_inv = np.linalg.pinv(gram, rcond=1e-12, hermitian=True)
    else:
        gram_inv = np.zeros((0, 0))

    def a_op(x):
        return a_s @ x.ravel() if m else np.zeros(0)

    def at_op(y):
        if not m:
            return np.zeros((n_aug, n_aug))
        return (a_s.T @ y).reshape(n_aug, n_aug)

    x = np.zeros((n_aug, n_aug))
    if warm_start is not None:
        ws = np.asarray(warm_start, dtype=float)
        if ws.shape != (n, n):
            raise SdpValidationError("warm_start has wrong shape")
        x[:n, :n] = project_psd(ws) / beta
    s = np.zeros((n_aug, n_aug))
    y = np.zeros(m)
    mu = float(mu0)
    bnorm1 = 1.0 + float(np.linalg.norm(b_s))
    cnorm1 = 1.0 + float(np.linalg.norm(c_s))

    status = MAX_ITERATIONS
    pinf = dinf = gap = np.inf
    x_hat = x
    window_pinf = None
    window_y = None
    it = 0
    for it in range(1, max_iter + 1):
        y = gram_inv @ (mu * (b_s - a_op(x)) + a_op(c_s - s)) if m else y
        aty = at_op(y)
        v = c_s - aty - mu * x
        v = 0.5 * (v + v.T)
        w, q = np.linalg.eigh(v)
        wp = np.clip(w, 0.0, None)
        wn = np.clip(-w, 0.0, None)
        s = (q * wp) @ q.T
        x_hat = (q * wn) @ q.T / mu
        x = (1.0 - relax) * x + relax * x_hat

        if it % 5 == 0 or it == max_iter:
            pinf = float(np.linalg.norm(a_op(x_hat) - b_s)) / bnorm1 if m else 0.0
            dinf = float(np.linalg.norm(c_s - aty - s)) / cnorm1
            pobj = float(c_vec @ x_hat.ravel())
            dobj = float(b_s @ y) if m else 0.0
            gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
            if max(pinf, dinf, gap) <= tol:
                # confirm on the unscaled equality residual
                raw = (amat @ (x_hat.ravel() * beta) - b) if m else np.zeros(0)
                if raw.size == 0 or float(np.max(np.abs(raw))) <= tol:
                    status = OPTIMAL
                    break
            # balance primal and dual progress
            if it % 20 == 0 and dinf > 0 and pinf > 0:
                ratio = pinf / dinf
                if ratio > 5.0:
                    mu = min(mu * 1.6, 1e8)
                elif ratio < 0.2:
                    mu = max(mu / 1.6, 1e-8)
        if it % 500 == 0:
            ynorm = float(np.linalg.norm(y))
            if window_pinf is not None:
                stagnant = pinf > 1e3 * tol and pinf >= 0.5 * window_pinf
                growing = ynorm > 2.0 * max(window_y, 1.0)
                if stagnant and growing:
                    status = INFEASIBLE
                    break
            window_pinf, window_y = pinf, ynorm

    x_out = x_hat[:n, :n] * beta
    x_out = 0.5 * (x_out + x_out.T)
    eq_res = []
    for a, bi in p.eq_constraints:
        eq_res.append(abs(float(np.sum(a * x_out)) - bi))
    for a, bi in p.ineq_constraints:
        eq_res.append(max(0.0, float(np.sum(a * x_out)) - bi))
    primal_residual = max(eq_res) if eq_res else 0.0

    # unscale multipliers: y_i = y'_i / (row_norm_i * gamma)
    y_un = y / (row_norm * gamma) if m else np.zeros(0)
    y_user = sign * y_un[:m_user]
    n_eq = len(p.eq_constraints)
    s_un = s[:n, :n] / gamma
    dual_residual = float(np.linalg.norm(c_full[:n, :n] - at_op(y)[:n, :n] / gamma - s_un)) / (
        1.0 + float(np.linalg.norm(p.C))
    )
    objective = float(np.sum(p.C * x_out))
    dual_obj = float(b[:m_user] @ y_user) if m_user else 0.0
    min_eig = float(np.linalg.eigvalsh(x_out)[0])
    if status != OPTIMAL:
        logger.debug("solve_sdp finished with %s after %d iterations (pinf=%.2e dinf=%.2e)", status, it, pinf, dinf)
    return SdpSolution(
        X=x_out,
        objective=objective,
        status=status,
        primal_residual=primal_residual,
        dual_residual=dual_residual,
        min_eigenvalue=min_eig,
        iterations=it,
        gap=float(gap),
        y=y_user[:n_eq],
        z=y_user[n_eq:],
        dual_objective=dual_obj,
    )


@dataclass
class HermitianSdpResult:
    """Complex solution recovered from the real embedding."""

    Z: np.ndarray
    objective: float
    solution: SdpSolution


def solve_hermitian_sdp(
    C: np.ndarray,
    eq_constraints: Sequence = (),
    ineq_constraints: Sequence = (),
    sense: str = "minimize",
    tol: float = 1e-7,
    max_iter: int = 20000,
    warm_start: Optional[np.ndarray] = None,
) -> HermitianSdpResult:
    """Solve a complex Hermitian SDP through the real embedding.

    Constraints ``tr(A Z) = b`` with Hermitian ``A`` become
    ``<embed(A), X> = 2 b`` and the embedded objective is halved.
    """
    C = np.asarray(C, dtype=complex)
    eqs = [(embed_hermitian(np.asarray(a, dtype=complex)), 2.0 * float(b)) for a, b in eq_constraints]
    ineqs = [(embed_hermitian(np.asarray(a, dtype=complex)), 2.0 * float(b)) for a, b in ineq_constraints]
    ws = embed_hermitian(warm_start) if warm_start is not None else None
    sol = solve_sdp(SdpProblem(embed_hermitian(C), eqs, ineqs, sense), tol=tol, max_iter=max_iter, warm_start=ws)
    z = unembed_hermitian(sol.X)
    objective = float(np.real(np.sum(C.conj() * z)))
    return HermitianSdpResult(Z=z, objective=objective, solution=sol)


def diagonal_relaxation_bound(C: np.ndarray, y: np.ndarray) -> float:
    """Certified upper bound on ``max <C, V>`` over PSD ``V`` with unit diagonal.

    Valid for any ``y``: ``sum(y) + N * max(lambda_max(C - Diag(y)), 0)``.
    """
    C = np.asarray(C)
    y = np.asarray(y, dtype=float)
    lam = float(np.linalg.eigvalsh(C - np.diag(y))[-1])
    return float(np.sum(y)) + C.shape[0] * max(lam, 0.0)

"""Per-realization bound sandwiches and Monte Carlo checks of the aligned constructions.

For each Rayleigh draw and each of the four pattern objectives

* ``Gamma1``: fully-passive SNR factor ``||G_t^T Phi^T a||^2 ||G_r Phi^T a||^2``,
* ``Gamma2``: semi-passive SNR factor ``||G_t^T Phi^T a||^2``,
* ``Gamma3``: fully-passive isotropic CRB denominator,
* ``Gamma4``: semi-passive isotropic CRB denominator,

the value of the closed-form aligned pattern, the optimized value (started
from that pattern) and the certified SDR bound must be ordered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .. import analysis
from ..beamforming import (
    ALIGN_COLUMN,
    COORDINATE_ASCENT,
    DERIVATIVE_ALIGN,
    SPLIT_ALIGN,
    OptimizerOptions,
    appendix_aligned_pattern,
    isotropic_crb_objective,
    relaxation_bound,
    snr_objective,
)
from ..beamforming.design import optimize_pattern
from ..channel import (
    RAYLEIGH,
    ArrayGeometry,
    PathLossModel,
    derivative_weights,
    gen_channel,
    geometry_from_positions,
    steering_irs,
)
from ..metrics import FULLY, SEMI

_OBJECTIVES = {
    analysis.GAMMA1: (snr_objective, FULLY, ALIGN_COLUMN),
    analysis.GAMMA2: (snr_objective, SEMI, ALIGN_COLUMN),
    analysis.GAMMA3: (isotropic_crb_objective, FULLY, SPLIT_ALIGN),
    analysis.GAMMA4: (isotropic_crb_objective, SEMI, DERIVATIVE_ALIGN),
}

# aligned-pattern quantities with closed-form expectations
COLUMN_GAIN = "ColumnGain"          # |g_1^T Phi^T a|^2, column-aligned
ALIGNED_SNR_SEMI = "AlignedSemiSnr"  # ||G_t^T Phi^T a||^2, column-aligned
SPLIT_PRODUCT = "SplitProduct"      # |g_1^T a~|^2 |g_1^T D1 a~|^2, split pattern
DERIVATIVE_SUM = "DerivativeSum"    # M_r ||G_t^T Phi^T D1 a||^2, derivative-aligned


@dataclass
class Sandwich:
    quantity: str
    aligned: np.ndarray
    optimized: np.ndarray
    bound: np.ndarray

    def violations(self, rel_tol: float = 1e-9) -> int:
        lo = self.aligned > self.optimized * (1 + rel_tol)
        hi = self.optimized > self.bound * (1 + rel_tol)
        return int(np.sum(lo | hi))


@dataclass
class MeanCheck:
    quantity: str
    mean: float
    std_err: float
    closed_form: float
    exact: Optional[float] = None

    @property
    def z(self) -> float:
        return (self.mean - self.closed_form) / self.std_err

    def ok(self, k: float = 3.0) -> bool:
        return abs(self.z) <= k


@dataclass
class BoundsReport:
    n: int
    draws: int
    sandwiches: Dict[str, Sandwich] = field(default_factory=dict)
    means: List[MeanCheck] = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return sum(s.violations() for s in self.sandwiches.values())


def _aligned_samples(g_hat: np.ndarray, theta: float, geom: ArrayGeometry, m_r: int) -> Dict[str, float]:
    n = g_hat.shape[0]
    a = steering_irs(theta, n, geom)
    d = derivative_weights(n)
    g = g_hat[:, 0]
    v = appendix_aligned_pattern(ALIGN_COLUMN, g_hat, 0, theta, geom).v
    out = {
        COLUMN_GAIN: abs(g @ (v * a)) ** 2,
        ALIGNED_SNR_SEMI: float(np.sum(np.abs(g_hat.T @ (v * a)) ** 2)),
    }
    v = appendix_aligned_pattern(SPLIT_ALIGN, g_hat, 0, theta, geom).v
    out[SPLIT_PRODUCT] = abs(g @ (v * a)) ** 2 * abs(g @ (d * v * a)) ** 2
    v = appendix_aligned_pattern(DERIVATIVE_ALIGN, g_hat, 0, theta, geom).v
    out[DERIVATIVE_SUM] = m_r * float(np.sum(np.abs(g_hat.T @ (d * v * a)) ** 2))
    return out


def bounds_check(n: int = 32, m_t: int = 4, m_r: int = 4, draws: int = 200, seed: int = 0,
                 positions=((0.0, 0.0), (1.0, 1.0), (1.0, -5.0)), with_sandwich: bool = True,
                 bound_tol: float = 1e-6) -> BoundsReport:
    """Sandwich and expectation checks over ``draws`` Rayleigh realizations."""
    if draws < 2:
        raise ValueError("need at least two draws for a standard error")
    scen = geometry_from_positions(*positions)
    geom = ArrayGeometry(m_t, m_r, n)
    opts = OptimizerOptions(backend=COORDINATE_ASCENT, compute_bound=False)
    vals = {q: ([], [], []) for q in _OBJECTIVES}
    samples: Dict[str, List[float]] = {k: [] for k in (COLUMN_GAIN, ALIGNED_SNR_SEMI, SPLIT_PRODUCT, DERIVATIVE_SUM)}
    root = np.random.SeedSequence(seed)
    for child in root.spawn(draws):
        ch = gen_channel(RAYLEIGH, geom, scen, PathLossModel(), seed=int(child.generate_state(1)[0]))
        for key, x in _aligned_samples(ch.g_t_hat, ch.theta, geom, m_r).items():
            samples[key].append(x)
        if not with_sandwich:
            continue
        for q, (make, arch, kind) in _OBJECTIVES.items():
            obj = make(arch, ch)
            v0 = appendix_aligned_pattern(kind, ch.g_t_hat, 0, ch.theta, geom).v
            v, value, _tr, _b, _st = optimize_pattern(obj, v0, opts, n)
            vals[q][0].append(obj.value(v0))
            vals[q][1].append(value)
            vals[q][2].append(relaxation_bound(obj, point=v, tol=bound_tol))
    report = BoundsReport(n, draws)
    if with_sandwich:
        for q, (al, op, bd) in vals.items():
            report.sandwiches[q] = Sandwich(q, np.array(al), np.array(op), np.array(bd))
    expected = {
        COLUMN_GAIN: (analysis.align_column_gain_mean(n), None),
        ALIGNED_SNR_SEMI: (analysis.gamma2_align_column_mean(n, m_t), None),
        SPLIT_PRODUCT: (analysis.split_align_product_printed(n), analysis.split_align_product_exact(n)),
        DERIVATIVE_SUM: (analysis.derivative_align_printed(n, m_t, m_r),
                         analysis.derivative_align_exact(n, m_t, m_r)),
    }
    for key, xs in samples.items():
        arr = np.asarray(xs)
        cf, ex = expected[key]
        report.means.append(MeanCheck(key, float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size)), cf, ex))
    return report


def format_report(rep: BoundsReport) -> str:
    lines = [f"bounds check: N={rep.n}, {rep.draws} Rayleigh draws"]
    for q, s in rep.sandwiches.items():
        gap = float(np.mean(s.optimized / s.bound))
        lines.append(f"  {q}: aligned <= optimized <= bound, violations={s.violations()}, "
                     f"mean optimized/bound={gap:.3f}")
    for m in rep.means:
        extra = f", exact-form z={(m.mean - m.exact) / m.std_err:+.2f}" if m.exact is not None else ""
        lines.append(f"  {m.quantity}: MC mean {m.mean:.6g} +- {m.std_err:.3g}, closed form {m.closed_form:.6g}, "
                     f"z={m.z:+.2f} [{'ok' if m.ok() else 'MISMATCH'}]{extra}")
    return "\n".join(lines)

"""Seeded Monte Carlo sweeps over the IRS element count."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..beamforming import (
    CRB_OBJECTIVE,
    RANDOM_PHASES,
    SNR_OBJECTIVE,
    OptimizerOptions,
    benchmark_pattern,
    maximize_snr,
    minimize_crb,
    reflective_only_design,
    transmit_only_design,
)
from ..channel import gen_channel
from ..metrics import (
    ARCHS,
    SensingSpec,
    crb,
    crb_approx,
    dbm_to_watts,
    detection_probability,
    isotropic_covariance,
    snr,
)
from .config import (
    CRB,
    DETECTION,
    JOINT_BF,
    NO_OPTIMIZATION,
    REFLECTIVE_ONLY,
    SCHEMES,
    SNR,
    TRANSMIT_ONLY,
    ScenarioConfig,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = ("n", "trial", "seed", "arch", "scheme", "metric", "value_db",
               "wall_time_ms", "objective_trace_len", "status")
THREADS_ENV = "IRS_SENSE_THREADS"

METRIC_SNR = "Snr"
METRIC_CRB = "Crb"
METRIC_CRB_APPROX = "CrbApprox"
METRIC_PD = "Pd"

STATUS_OK = "ok"


@dataclass(frozen=True)
class SweepRow:
    n: int
    trial: int
    seed: int
    arch: str
    scheme: str
    metric: str
    value_db: float
    wall_time_ms: float = 0.0
    objective_trace_len: int = 0
    status: str = STATUS_OK

    @property
    def linear(self) -> float:
        return 10.0 ** (self.value_db / 10.0)


@dataclass(frozen=True)
class AggregateRow:
    n: int
    arch: str
    scheme: str
    metric: str
    mean_db: float
    std_db: float
    trials: int


@dataclass
class SweepResult:
    config: ScenarioConfig
    rows: List[SweepRow] = field(default_factory=list)
    aggregates: List[AggregateRow] = field(default_factory=list)

    @property
    def failures(self) -> List[SweepRow]:
        return [r for r in self.rows if r.status != STATUS_OK]

    def series(self, arch: str, scheme: str, metric: str) -> List[Tuple[int, float]]:
        """``(n, mean_db)`` points of one aggregate curve, sorted by ``n``."""
        pts = [(a.n, a.mean_db) for a in self.aggregates
               if a.arch == arch and a.scheme == scheme and a.metric == metric]
        return sorted(pts)

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)


def cell_seed(master_seed: int, n: int, trial: int) -> int:
    """64-bit seed of one (n, trial) cell, independent of the schedule."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(n), int(trial)))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def pattern_seed(seed: int) -> np.random.SeedSequence:
    # children 0 and 1 of the same sequence drive the channel draw
    return np.random.SeedSequence(seed, spawn_key=(2,))


def _to_db(x: float) -> float:
    if not x > 0.0 or not math.isfinite(x):
        return math.nan
    return 10.0 * math.log10(x)


def _metrics_for(objective: str) -> Tuple[str, ...]:
    if objective == SNR:
        return (METRIC_SNR,)
    if objective == CRB:
        return (METRIC_CRB, METRIC_CRB_APPROX)
    return (METRIC_PD,)


def _design(scheme: str, arch: str, ch, design_obj: str, p0: float, spec: SensingSpec,
            opts: OptimizerOptions, v_rand):
    """Returns ``(v, r, trace_len)`` of one scheme."""
    if scheme == JOINT_BF:
        if design_obj == SNR_OBJECTIVE:
            res = maximize_snr(arch, ch, opts=opts, p0=p0)
        else:
            res = minimize_crb(arch, ch, None, spec, p0, opts)
        return res.v, res.r, len(res.objective_trace)
    if scheme == REFLECTIVE_ONLY:
        res = reflective_only_design(arch, ch, design_obj, p0, spec, opts)
        return res.v, res.r, len(res.objective_trace)
    if scheme == TRANSMIT_ONLY:
        return v_rand, transmit_only_design(arch, ch, v_rand, design_obj, p0, spec, opts), 0
    if scheme == NO_OPTIMIZATION:
        return v_rand, isotropic_covariance(ch.m_t, p0), 0
    raise ValueError(f"unknown scheme {scheme!r}")


def _evaluate(metric: str, arch: str, r, v, ch, spec: SensingSpec) -> float:
    if metric == METRIC_SNR:
        return snr(arch, r, v, ch, spec)
    if metric == METRIC_CRB:
        return crb(arch, r, v, ch, spec)
    if metric == METRIC_CRB_APPROX:
        return crb_approx(arch, r, v, ch, spec)
    return detection_probability(arch, r, v, ch, spec)


def run_cell(cfg: ScenarioConfig, n: int, trial: int) -> List[SweepRow]:
    """All rows of one (n, trial) cell; failures become rows with a status."""
    seed = cell_seed(cfg.master_seed, n, trial)
    geom = cfg.array(n)
    ch = gen_channel(cfg.channel, geom, cfg.scenario(), cfg.path_loss_model(), cfg.rcs, seed, cfg.k_factor)
    p0 = dbm_to_watts(cfg.power_budget_dbm)
    spec = SensingSpec(dbm_to_watts(cfg.sigma2_dbm), cfg.t_symbols, cfg.p_fa)
    opts = OptimizerOptions(backend=cfg.backend, seed=seed & 0xFFFFFFFF)
    design_obj = CRB_OBJECTIVE if cfg.objective == CRB else SNR_OBJECTIVE
    v_rand = None
    if TRANSMIT_ONLY in cfg.schemes or NO_OPTIMIZATION in cfg.schemes:
        v_rand = benchmark_pattern(RANDOM_PHASES, n, pattern_seed(seed))
    metrics = _metrics_for(cfg.objective)
    rows = []
    for scheme in cfg.schemes:
        for arch in ARCHS:
            t0 = time.perf_counter()
            try:
                v, r, tlen = _design(scheme, arch, ch, design_obj, p0, spec, opts, v_rand)
                vals = [_evaluate(m, arch, r, v, ch, spec) for m in metrics]
                status = STATUS_OK
            except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
                logger.warning("n=%d trial=%d %s/%s failed: %s", n, trial, scheme, arch, exc)
                vals, tlen = [math.nan] * len(metrics), 0
                status = type(exc).__name__
            ms = (time.perf_counter() - t0) * 1e3 if cfg.record_wall_time else 0.0
            for m, val in zip(metrics, vals):
                db = _to_db(val)
                st = status
                if st == STATUS_OK and math.isnan(db):
                    st = "NonPositive"
                rows.append(SweepRow(n, trial, seed, arch, scheme, m, db, ms, tlen, st))
    return rows


def _cell_task(args):
    cfg, n, trial = args
    return run_cell(cfg, n, trial)


def resolve_threads(threads: Optional[int] = None) -> int:
    """``threads`` if given, else ``$IRS_SENSE_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
        else:
            threads = 1
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def _sort_key(cfg: ScenarioConfig):
    order = {s: i for i, s in enumerate(SCHEMES)}
    arch_order = {a: i for i, a in enumerate(ARCHS)}

    def key(r: SweepRow):
        return (r.n, r.trial, order[r.scheme], arch_order[r.arch], r.metric)

    return key


def aggregate(rows: Sequence[SweepRow]) -> List[AggregateRow]:
    """Per-curve mean of linear values (reported in dB) and std of the dB values."""
    groups: Dict[tuple, List[float]] = defaultdict(list)
    for r in rows:
        if r.status == STATUS_OK:
            groups[(r.n, r.arch, r.scheme, r.metric)].append(r.value_db)
    out = []
    for (n, arch, scheme, metric), vals in sorted(groups.items()):
        db = np.asarray(vals)
        mean_lin = float(np.mean(10.0 ** (db / 10.0)))
        std = float(np.std(db, ddof=1)) if db.size > 1 else 0.0
        out.append(AggregateRow(n, arch, scheme, metric, 10.0 * math.log10(mean_lin), std, int(db.size)))
    return out


def run_sweep(cfg: ScenarioConfig, threads: Optional[int] = None, progress=None) -> SweepResult:
    """Run every (n, trial) cell of ``cfg``.

    Cells are independent and seeded from ``(master_seed, n, trial)``, so the
    output does not depend on ``threads``.  ``progress`` is called with the
    number of finished cells.
    """
    cfg.validate()
    threads = resolve_threads(threads)
    tasks = [(cfg, n, t) for n in cfg.n_list for t in range(cfg.trials)]
    rows: List[SweepRow] = []
    if threads == 1:
        for i, task in enumerate(tasks):
            rows.extend(_cell_task(task))
            if progress:
                progress(i + 1)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for i, part in enumerate(pool.map(_cell_task, tasks, chunksize=max(1, len(tasks) // (8 * threads)))):
                rows.extend(part)
                if progress:
                    progress(i + 1)
    rows.sort(key=_sort_key(cfg))
    return SweepResult(cfg, rows, aggregate(rows))


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("nan" if math.isnan(x) else repr(x))
    return str(x)


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    buf.write(f"schema={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_csv(path: str) -> List[SweepRow]:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"schema={SCHEMA_VERSION}":
            raise ValueError(f"{path}: unsupported CSV schema line {first!r}")
        reader = csv.DictReader(fh)
        out = []
        for d in reader:
            out.append(SweepRow(
                int(d["n"]), int(d["trial"]), int(d["seed"]), d["arch"], d["scheme"], d["metric"],
                float(d["value_db"]), float(d["wall_time_ms"]), int(d["objective_trace_len"]), d["status"],
            ))
    return out


def aggregates_to_csv(aggs: Sequence[AggregateRow]) -> str:
    buf = io.StringIO()
    buf.write(f"schema={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    cols = ("n", "arch", "scheme", "metric", "mean_db", "std_db", "trials")
    w.writerow(cols)
    for a in aggs:
        w.writerow([_fmt(getattr(a, c)) for c in cols])
    return buf.getvalue()

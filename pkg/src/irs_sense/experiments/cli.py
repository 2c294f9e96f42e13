"""Command-line entry point: ``irs-sense <subcommand> [flags]``.

Exit codes: 0 success, 1 validation or usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from .. import analysis
from ..beamforming import BACKENDS
from ..channel import BS_IRS, path_loss
from ..conic import SdpValidationError
from ..metrics import ARCHS, UnboundedCrbError
from .config import CRB, DETECTION, SNR, ConfigError, ScenarioConfig, load_config
from .figures import FIGURE_TAGS, reproduce_figure
from .sweep import METRIC_CRB, METRIC_PD, METRIC_SNR, aggregates_to_csv, run_sweep
from .svg import line_chart

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

logger = logging.getLogger("irs_sense")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for numerical failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON scenario file")
    p.add_argument("--out", help="output directory (default: config out_dir)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per N")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--threads", type=int, help=f"worker processes (fallback ${'IRS_SENSE_THREADS'}, else 1)")
    p.add_argument("--backend", choices=BACKENDS, help="reflection-pattern optimizer")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="irs-sense", description="Fully- vs semi-passive IRS sensing experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    for name, help_ in (("snr-sweep", "average sensing SNR versus N"),
                        ("crb-sweep", "average DoA CRB versus N"),
                        ("detect-curve", "detection probability versus N")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--n", type=int, nargs="+", help="element counts (overrides n_list)")
        p.add_argument("--scheme", nargs="+", help="schemes to run (overrides config)")
        p.add_argument("--channel", help="channel model (overrides config)")
        if name == "detect-curve":
            p.add_argument("--p0-dbm", type=float, help="transmit power in dBm (overrides config)")

    p = sub.add_parser("bounds-check", help="aligned <= optimized <= relaxation bound sandwich tests")
    _common(p)
    p.add_argument("--n", type=int, default=32)

    p = sub.add_parser("thresholds", help="LoS and Rayleigh SNR crossover thresholds")
    _common(p)

    p = sub.add_parser("reproduce", help="regenerate one figure as CSV + SVG")
    _common(p)
    p.add_argument("--fig", required=True, type=str.capitalize, choices=FIGURE_TAGS)

    p = sub.add_parser("selftest", help="run the fast analytic checks")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    over = {"trials": args.trials, "master_seed": args.seed, "backend": args.backend}
    if getattr(args, "n", None) and isinstance(args.n, list):
        over["n_list"] = args.n
    if getattr(args, "scheme", None):
        over["schemes"] = args.scheme
    if getattr(args, "channel", None):
        over["channel"] = args.channel
    if getattr(args, "p0_dbm", None) is not None:
        over["power_budget_dbm"] = args.p0_dbm
    if args.out:
        over["out_dir"] = args.out
    try:
        return cfg.with_overrides(**over)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_sweep(args, objective: str) -> int:
    cfg = _config(args).with_overrides(objective=objective)
    res = run_sweep(cfg, threads=args.threads)
    os.makedirs(cfg.out_dir, exist_ok=True)
    stem = os.path.join(cfg.out_dir, cfg.name)
    with open(stem + ".csv", "w", newline="") as fh:
        fh.write(res.to_csv())
    with open(stem + ".agg.csv", "w", newline="") as fh:
        fh.write(aggregates_to_csv(res.aggregates))
    metric = {SNR: METRIC_SNR, CRB: METRIC_CRB, DETECTION: METRIC_PD}[objective]
    series = {f"{arch} {s}": res.series(arch, s, metric) for s in cfg.schemes for arch in ARCHS}
    if objective == DETECTION:
        series = {k: [(n, 10 ** (db / 10)) for n, db in pts] for k, pts in series.items()}
        ylabel = "Detection probability"
    else:
        ylabel = f"{metric} (dB)"
    with open(stem + ".svg", "w") as fh:
        fh.write(line_chart(series, f"{metric}, {cfg.channel} BS-IRS link", "Number of IRS elements N", ylabel))
    for name, pts in series.items():
        fmt = "{:.4f}" if objective == DETECTION else "{:.2f}"
        print(name + ": " + ", ".join(f"N={n} " + fmt.format(y) for n, y in pts))
    if objective != DETECTION:
        for s in cfg.schemes:
            f, sm = res.series(ARCHS[0], s, metric), res.series(ARCHS[1], s, metric)
            if len(f) < 2 or [n for n, _ in f] != [n for n, _ in sm]:
                print(f"{s}: crossover not available (fewer than two complete grid points)")
                continue
            cross = analysis.find_crossover(f, sm, lower_is_better=(objective == CRB))
            print(f"{s}: fully-passive wins from N = {cross}")
    print(f"wrote {stem}.csv, {stem}.agg.csv, {stem}.svg")
    if res.failures:
        print(f"{len(res.failures)} rows failed", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_bounds(args) -> int:
    from .bounds import bounds_check, format_report

    cfg = _config(args)
    rep = bounds_check(n=args.n, m_t=cfg.m_t, m_r=cfg.m_r, draws=args.trials or 200, seed=cfg.master_seed,
                       positions=(cfg.bs_pos, cfg.irs_pos, cfg.target_pos))
    print(format_report(rep))
    return EXIT_OK if rep.total_violations == 0 else EXIT_NUMERICAL


def _cmd_thresholds(args) -> int:
    cfg = _config(args)
    l_d = path_loss(cfg.scenario().d_bi, cfg.path_loss_model(), BS_IRS)
    los = analysis.crossover_threshold(analysis.LOS_SNR, l_d, cfg.m_t, cfg.m_r)
    ray = analysis.crossover_threshold(analysis.RAYLEIGH_SNR, l_d, cfg.m_t, cfg.m_r)
    print(f"L(d_bi) = {l_d:.6g}")
    print(f"LoS SNR threshold: N > {los:.1f} (first integer {int(np.floor(los)) + 1})")
    print(f"Rayleigh SNR sufficient threshold: N > {ray:.1f}")
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    cfg = load_config(args.config) if args.config else None
    out = args.out or (cfg.out_dir if cfg else "out")
    paths = reproduce_figure(args.fig, out, trials=args.trials, threads=args.threads, backend=args.backend,
                             master_seed=args.seed)
    with open(paths["meta"]) as fh:
        failed = json.load(fh)["failed_rows"]
    for p in (paths["csv"], paths["svg"], paths["meta"]):
        print(f"wrote {p}")
    return EXIT_NUMERICAL if failed else EXIT_OK


def _cmd_selftest(args) -> int:
    from ..selftest import run_all

    return EXIT_OK if run_all(verbose=True) == 0 else EXIT_NUMERICAL


def cli_main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {
        "snr-sweep": lambda a: _cmd_sweep(a, SNR),
        "crb-sweep": lambda a: _cmd_sweep(a, CRB),
        "detect-curve": lambda a: _cmd_sweep(a, DETECTION),
        "bounds-check": _cmd_bounds,
        "thresholds": _cmd_thresholds,
        "reproduce": _cmd_reproduce,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, SdpValidationError, FileNotFoundError, analysis.AnalysisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UnboundedCrbError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(cli_main())

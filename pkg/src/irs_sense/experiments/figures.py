"""Recipes that regenerate the published figures as CSV + SVG."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from ..beamforming import COORDINATE_ASCENT
from ..metrics import ARCHS
from .config import CRB, SCHEMES, SNR, ScenarioConfig
from .sweep import (
    METRIC_CRB,
    METRIC_CRB_APPROX,
    METRIC_SNR,
    SweepResult,
    aggregate,
    rows_to_csv,
    run_sweep,
)
from .svg import line_chart

FIGURE_TAGS = ("Fig2", "Fig3", "Fig4", "Fig5", "Fig6", "Fig7")


@dataclass
class FigureRecipe:
    tag: str
    title: str
    ylabel: str
    metrics: Tuple[str, ...]
    # (series label prefix, config); prefix is empty for single-channel figures
    parts: List[Tuple[str, ScenarioConfig]]


def _cfg(**kw) -> ScenarioConfig:
    kw.setdefault("backend", COORDINATE_ASCENT)
    return ScenarioConfig(**kw)


def figure_recipe(tag: str, trials: Optional[int] = None, backend: Optional[str] = None,
                  master_seed: Optional[int] = None, n_list: Optional[List[int]] = None) -> FigureRecipe:
    """Configuration of one figure; keyword arguments override the defaults."""
    key = tag.capitalize() if tag.lower().startswith("fig") else tag
    if key not in FIGURE_TAGS:
        raise ValueError(f"unknown figure {tag!r}; expected one of {FIGURE_TAGS}")
    all_schemes = list(SCHEMES)
    if key == "Fig2":
        parts = [("", _cfg(channel="Rayleigh", objective=CRB, n_list=list(range(16, 129, 16)), trials=20,
                           name="Fig2"))]
        recipe = FigureRecipe(key, "Exact vs approximate CRB, Rayleigh", "CRB (dB)",
                              (METRIC_CRB, METRIC_CRB_APPROX), parts)
    elif key == "Fig3":
        parts = [(ch, _cfg(channel=ch, objective=SNR, n_list=list(range(10, 101, 10)), trials=100,
                           k_factor=1.0, name=f"Fig3-{ch}"))
                 for ch in ("LoS", "Rician", "Rayleigh")]
        recipe = FigureRecipe(key, "Joint design SNR for three channel models", "SNR (dB)", (METRIC_SNR,), parts)
    elif key == "Fig4":
        parts = [("", _cfg(channel="LoS", objective=SNR, n_list=list(range(10, 101)), trials=100,
                           schemes=all_schemes, name="Fig4"))]
        recipe = FigureRecipe(key, "SNR, LoS BS-IRS link", "SNR (dB)", (METRIC_SNR,), parts)
    elif key == "Fig5":
        parts = [("", _cfg(channel="Rayleigh", objective=SNR, n_list=list(range(10, 151, 5)), trials=100,
                           schemes=all_schemes, name="Fig5"))]
        recipe = FigureRecipe(key, "SNR, Rayleigh BS-IRS link", "SNR (dB)", (METRIC_SNR,), parts)
    elif key == "Fig6":
        parts = [(ch, _cfg(channel=ch, objective=CRB, n_list=list(range(20, 201, 20)), trials=20,
                           k_factor=1.0, name=f"Fig6-{ch}"))
                 for ch in ("Rician", "Rayleigh")]
        recipe = FigureRecipe(key, "Joint design CRB", "CRB (dB)", (METRIC_CRB,), parts)
    else:
        parts = [("", _cfg(channel="Rayleigh", objective=CRB, n_list=list(range(20, 241, 10)), trials=20,
                           schemes=all_schemes, name="Fig7"))]
        recipe = FigureRecipe(key, "CRB, Rayleigh BS-IRS link", "CRB (dB)", (METRIC_CRB,), parts)
    recipe.parts = [(label, cfg.with_overrides(trials=trials, backend=backend, master_seed=master_seed,
                                               n_list=n_list))
                    for label, cfg in recipe.parts]
    for _label, cfg in recipe.parts:
        cfg.validate()
    return recipe


def _label_scheme(prefix: str, scheme: str) -> str:
    return f"{scheme}@{prefix}" if prefix else scheme


def run_recipe(recipe: FigureRecipe, threads: Optional[int] = None) -> SweepResult:
    """Run every part and merge; multi-channel parts tag the scheme as ``scheme@channel``."""
    rows = []
    for prefix, cfg in recipe.parts:
        res = run_sweep(cfg, threads=threads)
        rows.extend(replace(r, scheme=_label_scheme(prefix, r.scheme)) for r in res.rows)
    rows.sort(key=lambda r: (r.n, r.trial, r.scheme, r.arch, r.metric))
    return SweepResult(recipe.parts[0][1], rows, aggregate(rows))


def figure_series(recipe: FigureRecipe, result: SweepResult) -> Dict[str, List[Tuple[float, float]]]:
    series = {}
    for prefix, cfg in recipe.parts:
        for scheme in cfg.schemes:
            name = _label_scheme(prefix, scheme)
            for arch in ARCHS:
                for metric in recipe.metrics:
                    label = f"{arch} {name}"
                    if len(recipe.metrics) > 1:
                        label += f" {metric}"
                    series[label] = result.series(arch, name, metric)
    return series


def reproduce_figure(tag: str, out_dir: str, trials: Optional[int] = None, threads: Optional[int] = None,
                     backend: Optional[str] = None, master_seed: Optional[int] = None,
                     n_list: Optional[List[int]] = None) -> Dict[str, str]:
    """Write ``<tag>.csv``, ``<tag>.svg`` and the ``<tag>.meta.json`` sidecar.

    Returns the written paths keyed by ``csv``, ``svg`` and ``meta``.
    """
    recipe = figure_recipe(tag, trials, backend, master_seed, n_list)
    result = run_recipe(recipe, threads)
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, recipe.tag)
    paths = {"csv": base + ".csv", "svg": base + ".svg", "meta": base + ".meta.json"}
    with open(paths["csv"], "w", newline="") as fh:
        fh.write(rows_to_csv(result.rows))
    svg = line_chart(figure_series(recipe, result), recipe.title, "Number of IRS elements N", recipe.ylabel)
    with open(paths["svg"], "w") as fh:
        fh.write(svg)
    meta = {
        "figure": recipe.tag,
        "parts": [{"label": p, "config": c.to_dict()} for p, c in recipe.parts],
        "metrics": list(recipe.metrics),
        "rows": len(result.rows),
        "failed_rows": len(result.failures),
    }
    with open(paths["meta"], "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


__all__ = ["FIGURE_TAGS", "FigureRecipe", "figure_recipe", "figure_series", "reproduce_figure", "run_recipe"]

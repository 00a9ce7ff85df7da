"""Aggregate run records into curves, boosts and figure-ready CSV tables."""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..analysis import Curve, attach_power_law, data_collapse, repetition_correct
from ..exceptions import InputError, ReferenceValueError
from ..ising import read_problem
from .config import load_config
from .experiments import RECORDS, _read_jsonl

OPT_FIGURES = ("fig1a", "fig1b", "fig1c", "fig2", "best_gamma")
SAMPLING_FIGURES = ("fig3a", "fig3b", "fig3c", "fig4")
FIGURES = OPT_FIGURES + SAMPLING_FIGURES


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _pct(values):
    v = np.asarray(values, dtype=float)
    return float(np.median(v)), float(np.percentile(v, 25)), float(np.percentile(v, 75))


class RunAggregate:
    """Everything the figures need, derived from one run directory."""

    def __init__(self, run_dir: str | Path):
        run_dir = Path(run_dir)
        if not (run_dir / RECORDS).exists():
            raise InputError(f"no {RECORDS} in {run_dir}")
        self.config = load_config(run_dir / "config.yaml")
        self.records = _read_jsonl(run_dir / RECORDS)
        if not self.records:
            raise InputError("run has no records")
        kinds = {r["kind"] for r in self.records}
        if len(kinds) != 1:
            raise InputError(f"mixed record kinds {sorted(kinds)}")
        self.kind = kinds.pop()
        self.sizes = {}
        for r in self.records:
            i = r["instance"]
            if i not in self.sizes:
                self.sizes[i] = read_problem(run_dir / f"instance_{i:03d}.txt").n_spins
        self.metric = "P" if self.kind == "opt" else "beta_fit"
        self.failed = sum(1 for r in self.records if r["error"])
        self._select()
        self._collapse()

    # per (instance, C, alpha): embedding values at the best gamma
    def _select(self):
        table = defaultdict(list)
        for r in sorted(self.records, key=lambda r: r["embedding"]):
            if r[self.metric] is not None:
                table[(r["instance"], r["C"], r["gamma"], r["alpha"])].append(r[self.metric])
        gammas = sorted({k[2] for k in table})
        best = {(i, C, a): None for i, C, _, a in table}
        self.best_gamma = {}
        for key in sorted(best):
            i, C, a = key
            top = None
            for g in gammas:  # ascending, strict > keeps the smallest gamma on ties
                vals = table.get((i, C, g, a))
                if vals and (top is None or np.median(vals) > top[1]):
                    top = (g, float(np.median(vals)), vals)
            self.best_gamma[key] = top[:2]
            best[key] = top[2]
        self.selected = best
        self.overlaps = defaultdict(list)
        for r in sorted(self.records, key=lambda r: r["embedding"]):
            key = (r["instance"], r["C"], r["alpha"])
            if r["overlap"] is not None and r["gamma"] == self.best_gamma.get(key, (None,))[0]:
                self.overlaps[key].append(r["overlap"])

    def _samples(self, source, C):
        instances = sorted(self.sizes)
        alphas, samples = [], []
        for a in self.config.alphas:
            if len(instances) == 1:
                s = source.get((instances[0], C, a), [])
            else:
                s = [float(np.median(source[(i, C, a)])) for i in instances if source.get((i, C, a))]
            if s:
                alphas.append(a)
                samples.append(s)
        return alphas, samples

    def _collapse(self):
        self.curves = []
        for C in self.config.C:
            alphas, samples = self._samples(self.selected, C)
            if alphas:
                self.curves.append(Curve.from_samples(C, alphas, samples,
                                                      "success" if self.kind == "opt" else "beta"))
        self.notes = []
        self.boost = None
        try:
            self.boost = attach_power_law(data_collapse(self.curves, self.config.analysis.M0))
            self.notes.extend(self.boost.notes)
        except (ReferenceValueError, InputError) as exc:
            self.notes.append(f"data collapse unavailable: {exc}")

    def mu(self, C):
        if self.boost is None:
            return None
        hit = np.flatnonzero(self.boost.C == C)
        return float(self.boost.mu[hit[0]]) if len(hit) else None

    def summary(self) -> dict:
        b = self.boost
        out = {"kind": self.kind, "name": self.config.name, "config_hash": self.config.content_hash(),
               "n_records": len(self.records),
               "n_failed": self.failed, "notes": self.notes}
        if b is not None:
            out.update({
                "M0": b.M0,
                "mu": {str(c): m for c, m, _, _ in b.as_rows()},
                "mu_low": {str(int(c)): float(v) for c, v in zip(b.C, b.mu_low)},
                "mu_high": {str(int(c)): float(v) for c, v in zip(b.C, b.mu_high)},
                "eta": None if b.eta_degenerate else float(b.eta),
                "eta_err": None if b.eta_degenerate or not np.isfinite(b.eta_err) else float(b.eta_err),
                "eta_degenerate": bool(b.eta_degenerate),
            })
        return out

    # -- tables ---------------------------------------------------------------

    def _curve_rows(self, scaled: bool):
        rows = []
        for c in self.curves:
            mu = self.mu(c.C)
            for a, m, lo, hi in zip(c.alpha, c.median, c.p25, c.p75):
                if scaled:
                    rows.append((c.C, a, None if mu is None else a * mu, m, lo, hi))
                else:
                    rows.append((c.C, a, m, lo, hi))
        return rows

    def _boost_rows(self):
        b = self.boost
        if b is None:
            return []
        eta = None if b.eta_degenerate else b.eta
        err = None if b.eta_degenerate or not np.isfinite(b.eta_err) else b.eta_err
        return [(self.config.name, c, m, lo, hi, eta, err) for c, m, lo, hi in b.as_rows()]

    def _ratio_rows(self):
        C_max = self.config.analysis.C_max or max(self.config.C)
        rows = []
        for C in self.config.C:
            for a in self.config.alphas:
                ratio, corr = [], []
                for i, N in sorted(self.sizes.items()):
                    pc, p1 = self.selected.get((i, C, a)), self.selected.get((i, 1, a))
                    if not pc or not p1:
                        continue
                    pc, p1 = float(np.median(pc)), float(np.median(p1))
                    if p1 > 0:
                        ratio.append(pc / p1)
                    c1 = repetition_correct(p1, 1, N, C_max)
                    if c1 > 0:
                        corr.append(repetition_correct(pc, C, N, C_max) / c1)
                if ratio and corr:
                    rows.append((C, a, *_pct(ratio), *_pct(corr)))
        return rows

    def _overlap_rows(self):
        rows = []
        for C in self.config.C:
            alphas, samples = self._samples(self.overlaps, C)
            for a, s in zip(alphas, samples):
                rows.append((C, a, *_pct(s)))
        return rows

    def table(self, figure: str) -> str:
        if figure not in FIGURES:
            raise InputError(f"unknown figure id {figure!r}; known: {', '.join(FIGURES)}")
        wanted = OPT_FIGURES if self.kind == "opt" else SAMPLING_FIGURES
        if figure not in wanted:
            raise InputError(f"figure {figure!r} needs a {'sampling' if self.kind == 'opt' else 'opt'} run")
        if figure == "fig1a":
            return _csv(("C", "alpha", "p_median", "p25", "p75"), self._curve_rows(False))
        if figure == "fig1b":
            return _csv(("C", "alpha", "alpha_scaled", "p_median", "p25", "p75"), self._curve_rows(True))
        if figure in ("fig1c", "fig4"):
            return _csv(("ensemble", "C", "mu", "mu_low", "mu_high", "eta", "eta_err"), self._boost_rows())
        if figure == "fig2":
            return _csv(("C", "alpha", "ratio_median", "ratio25", "ratio75",
                         "corrected_median", "corrected25", "corrected75"), self._ratio_rows())
        if figure == "best_gamma":
            rows = [(i, C, a, g, p) for (i, C, a), (g, p) in sorted(self.best_gamma.items())]
            return _csv(("instance", "C", "alpha", "gamma", "p_median"), rows)
        if figure == "fig3a":
            return _csv(("C", "alpha", "beta_median", "beta25", "beta75"), self._curve_rows(False))
        if figure == "fig3b":
            return _csv(("C", "alpha", "alpha_scaled", "beta_median", "beta25", "beta75"), self._curve_rows(True))
        return _csv(("C", "alpha", "overlap_median", "overlap25", "overlap75"), self._overlap_rows())


def export_csv(run_dir: str | Path, figure: str, path: str | Path | None = None) -> Path:
    """Write one figure table; defaults to ``<run_dir>/<figure>.csv``."""
    if figure not in FIGURES:
        raise InputError(f"unknown figure id {figure!r}; known: {', '.join(FIGURES)}")
    agg = RunAggregate(run_dir)
    target = Path(path) if path else Path(run_dir) / f"{figure}.csv"
    target.write_text(agg.table(figure))
    return target


def export_all(run_dir: str | Path, kind: str | None = None):
    """Write every table for the run's kind plus ``summary.json``."""
    agg = RunAggregate(run_dir)
    run_dir = Path(run_dir)
    files = {}
    for fig in (OPT_FIGURES if agg.kind == "opt" else SAMPLING_FIGURES):
        target = run_dir / f"{fig}.csv"
        target.write_text(agg.table(fig))
        files[fig] = target
    summary = agg.summary()
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    files["summary"] = run_dir / "summary.json"
    return files, summary

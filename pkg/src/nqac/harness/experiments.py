"""Experiment orchestration: one job per (instance, C, gamma, alpha, embedding).

Each job is a pure function of the config and its derived seeds, so runs
are reproducible and resumable. Results go to ``<output>/records.jsonl``
(canonical order, rewritten when a run completes); while running, finished
jobs are appended to ``records.journal.jsonl`` so an interrupted run can
resume from its completed points.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..analysis import FIT_CAP, ThermalHistogram, fit_effective_beta, gradient_overlap, success_probability
from ..bm import exact_moments, moments_from_configs
from ..exceptions import CapacityError, InputError, NQACError
from ..ising import dumps_problem, energy_histogram, enumerate_ground_states, loads_problem
from ..pipeline import run_pipeline
from .config import ExperimentConfig, derive_seed, dump_config, worker_count

log = logging.getLogger(__name__)

RECORDS = "records.jsonl"
JOURNAL = "records.journal.jsonl"
TIMINGS = "timings.jsonl"


@dataclass(frozen=True)
class Point:
    kind: str
    instance: int
    C: int
    gamma: float
    alpha: float
    embedding: int


def plan_points(config: ExperimentConfig, kind: str, n_instances: int) -> list[Point]:
    gammas = config.gamma.grid
    pts = []
    for inst in range(n_instances):
        for C in config.C:
            # gamma is unused at C = 1, run it once
            for g in (gammas[:1] if C == 1 else gammas):
                for a in config.alphas:
                    for e in range(config.embeddings):
                        pts.append(Point(kind, inst, C, g, a, e))
    return pts


def point_key(config: ExperimentConfig, digest: str, p: Point) -> str:
    payload = {
        "point": asdict(p), "problem": digest, "seed": config.seed, "reads": config.reads,
        "chain_penalty": config.chain_penalty, "graph": asdict(config.graph), "device": config.device,
    }
    if p.kind == "sampling":
        payload["analysis"] = {k: v for k, v in asdict(config.analysis).items() if k in ("beta_range", "n_grid", "tol")}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:32]


def _run_point(job):
    config_dict, problem_text, p_dict, key = job
    config = ExperimentConfig(**config_dict)
    p = Point(**p_dict)
    logical = loads_problem(problem_text)[0]
    rec = {"key": key, **p_dict, "P": None, "beta_fit": None, "tv": None,
           "overlap": None, "broken_chain_fraction": None, "error": None, "note": None}
    start = time.perf_counter()
    try:
        result = run_pipeline(
            logical, alpha=p.alpha, C=p.C, gamma=p.gamma, graph=config.graph.build(),
            device=config.device_model(), n_reads=config.reads, chain_penalty=config.chain_penalty,
            embedding_seed=derive_seed(config.seed, "embedding", p.instance, p.C, p.embedding),
            seed=derive_seed(config.seed, "device", p.kind, p.instance, p.C, p.gamma, p.alpha, p.embedding),
            embedding_id=p.embedding,
        )
        reads = result.decoded
        rec["broken_chain_fraction"] = result.broken_chain_fraction
        if p.kind == "opt":
            _, ground = enumerate_ground_states(logical)
            rec["P"] = success_probability(reads, ground).median
        else:
            an = config.analysis
            fit = fit_effective_beta(energy_histogram(reads, logical), ThermalHistogram(logical),
                                     tuple(an.beta_range), an.n_grid, an.tol)
            rec["beta_fit"], rec["tv"] = fit.beta, fit.distance
            has_fields = bool(np.any(logical.h != 0))
            emp = moments_from_configs(reads.configs, has_fields=has_fields)
            exact = exact_moments(logical, fit.beta)
            exact.has_fields = has_fields
            try:
                rec["overlap"] = gradient_overlap(emp, exact)
            except InputError as exc:
                rec["note"] = f"overlap undefined: {exc}"
    except (NQACError, ValueError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec, time.perf_counter() - start


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    out = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError:
            log.warning("skipping truncated line in %s", path)
    return out


def _dumps_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True)


@dataclass
class RunResult:
    output: Path
    records: list
    files: dict
    summary: dict


def run_experiment(config: ExperimentConfig, kind: str, workers: int | None = None,
                   output: str | Path | None = None) -> RunResult:
    from .export import export_all  # circular at import time

    if kind not in ("opt", "sampling"):
        raise InputError(f"unknown experiment kind {kind!r}")
    out = Path(output or config.output)
    out.mkdir(parents=True, exist_ok=True)
    instances = config.build_instances()
    if not instances:
        raise InputError("empty instance ensemble")
    if kind == "sampling":
        if config.gamma.mode != "fixed":
            raise InputError("sampling experiments use a fixed gamma")
        too_big = [p.n_spins for p in instances if p.n_spins > FIT_CAP]
        if too_big:
            raise CapacityError(f"exact thermal fitting capped at N <= {FIT_CAP}; got N = {too_big[0]}")
    dump_config(config, out / "config.yaml")
    for k, prob in enumerate(instances):
        (out / f"instance_{k:03d}.txt").write_text(dumps_problem(prob))

    digests = [p.digest() for p in instances]
    texts = [dumps_problem(p) for p in instances]
    points = plan_points(config, kind, len(instances))
    keys = [point_key(config, digests[p.instance], p) for p in points]

    done = {r["key"]: r for r in _read_jsonl(out / RECORDS) + _read_jsonl(out / JOURNAL)}
    todo = [(p, k) for p, k in zip(points, keys) if k not in done]
    log.info("%s: %d points, %d already done", config.name, len(points), len(points) - len(todo))

    cfg = config.as_dict()
    jobs = [(cfg, texts[p.instance], asdict(p), k) for p, k in todo]
    n_workers = workers or worker_count()
    with open(out / JOURNAL, "a") as journal, open(out / TIMINGS, "a") as timings:
        if n_workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(n_workers) as pool:
                results = pool.map(_run_point, jobs, chunksize=max(1, len(jobs) // (8 * n_workers)))
                for rec, secs in results:
                    _record(journal, timings, done, rec, secs)
        else:
            for job in jobs:
                _record(journal, timings, done, *_run_point(job))

    records = [done[k] for k in keys]
    tmp = out / (RECORDS + ".tmp")
    tmp.write_text("".join(_dumps_record(r) + "\n" for r in records))
    tmp.replace(out / RECORDS)
    (out / JOURNAL).unlink(missing_ok=True)
    files, summary = export_all(out, kind)
    return RunResult(out, records, files, summary)


def _record(journal, timings, done, rec, secs):
    done[rec["key"]] = rec
    journal.write(_dumps_record(rec) + "\n")
    journal.flush()
    timings.write(json.dumps({"key": rec["key"], "seconds": round(secs, 4), "finished": time.time()}) + "\n")
    if rec["error"]:
        log.warning("point %s failed: %s", rec["key"], rec["error"])


def run_optimization_experiment(config: ExperimentConfig, workers=None, output=None) -> RunResult:
    """Success-probability protocol: P_C(alpha) curves, data collapse, power law, repetition."""
    return run_experiment(config, "opt", workers, output)


def run_sampling_experiment(config: ExperimentConfig, workers=None, output=None) -> RunResult:
    """Sampling protocol: beta_{C,eff}(alpha), gradient overlap, data collapse, power law."""
    return run_experiment(config, "sampling", workers, output)

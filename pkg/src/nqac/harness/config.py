"""Experiment configuration (YAML) and seed derivation."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..chimera import ChimeraGraph, build_chimera
from ..exceptions import InputError
from ..ising import (
    RANDOM_COUPLING_VALUES,
    IsingProblem,
    antiferromagnetic_complete,
    random_complete_instance,
    read_problem,
)
from ..samplers import DeviceModel

WORKERS_ENV = "NQAC_WORKERS"


def derive_seed(master: int, *labels) -> int:
    """64-bit stream seed: first 8 bytes of sha256("<master>:<label>:<label>...").

    Floats are rendered with repr(), so identical labels always map to the
    same stream.
    """
    text = ":".join([str(int(master))] + [repr(x) if isinstance(x, float) else str(x) for x in labels])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


@dataclass
class InstanceSpec:
    """``source`` is ``antiferromagnetic`` (K_N, all J = 1), ``random``
    (K_N couplings from ``values``) or ``file`` (paths in ``files``)."""

    source: str = "antiferromagnetic"
    N: int = 4
    count: int = 1
    values: list = field(default_factory=lambda: list(RANDOM_COUPLING_VALUES))
    files: list = field(default_factory=list)


@dataclass
class GammaSpec:
    mode: str = "fixed"  # fixed | sweep
    value: float = 1.0
    values: list = field(default_factory=lambda: [round(0.1 * k, 1) for k in range(1, 11)])

    @property
    def grid(self) -> list:
        return [float(self.value)] if self.mode == "fixed" else [float(v) for v in self.values]


@dataclass
class GraphSpec:
    rows: int = 16
    cols: int = 16
    shore: int = 4
    mask: list = field(default_factory=list)

    def build(self) -> ChimeraGraph:
        return build_chimera(self.rows, self.cols, self.shore, self.mask)


@dataclass
class AnalysisSpec:
    M0: float | None = None
    beta_range: list = field(default_factory=lambda: [0.0, 20.0])
    n_grid: int = 200
    tol: float = 1e-4
    C_max: int | None = None


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    instances: InstanceSpec = field(default_factory=InstanceSpec)
    alphas: list = field(default_factory=lambda: [float(a) for a in np.logspace(-2, 0, 12)])
    C: list = field(default_factory=lambda: [1, 2, 3])
    gamma: GammaSpec = field(default_factory=GammaSpec)
    embeddings: int = 25
    reads: int = 1000
    chain_penalty: float = 1.0
    graph: GraphSpec = field(default_factory=GraphSpec)
    device: dict = field(default_factory=dict)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)
    output: str = "runs/experiment"

    def __post_init__(self):
        if isinstance(self.instances, dict):
            self.instances = InstanceSpec(**self.instances)
        if isinstance(self.gamma, dict):
            self.gamma = GammaSpec(**self.gamma)
        elif isinstance(self.gamma, (int, float)):
            self.gamma = GammaSpec("fixed", float(self.gamma))
        if isinstance(self.graph, dict):
            self.graph = GraphSpec(**self.graph)
        if isinstance(self.analysis, dict):
            self.analysis = AnalysisSpec(**self.analysis)
        if isinstance(self.alphas, dict):
            lo, hi, n = self.alphas["logspace"]
            self.alphas = [float(a) for a in np.logspace(lo, hi, int(n))]
        self.alphas = sorted(float(a) for a in self.alphas)
        self.C = sorted(int(c) for c in self.C)
        self.validate()

    def validate(self) -> None:
        if not self.alphas or any(not 0 < a <= 1 for a in self.alphas):
            raise InputError("alphas must be a non-empty list in (0, 1]")
        if not self.C or self.C[0] < 1:
            raise InputError("C must be a non-empty list of levels >= 1")
        if self.gamma.mode not in ("fixed", "sweep"):
            raise InputError(f"gamma.mode must be fixed or sweep, got {self.gamma.mode!r}")
        if any(g <= 0 for g in self.gamma.grid):
            raise InputError("gamma values must be > 0")
        inst = self.instances
        if inst.source not in ("antiferromagnetic", "random", "file"):
            raise InputError(f"unknown instance source {inst.source!r}")
        if inst.source == "file" and not inst.files:
            raise InputError("instance source 'file' needs a non-empty files list")
        if inst.source != "file" and (inst.count < 1 or inst.N < 2):
            raise InputError("instance ensemble must have count >= 1 and N >= 2")
        if inst.source == "random":
            allowed = {round(v, 10) for v in RANDOM_COUPLING_VALUES}
            if not inst.values or any(round(float(v), 10) not in allowed for v in inst.values):
                raise InputError("random coupling values must come from {+-0.1, ..., +-1.0}")
        if self.embeddings < 1 or self.reads < 1:
            raise InputError("embeddings and reads must be >= 1")
        self.device_model()

    def device_model(self) -> DeviceModel:
        return DeviceModel(**self.device)

    def build_instances(self) -> list[IsingProblem]:
        inst = self.instances
        if inst.source == "file":
            return [read_problem(p) for p in inst.files]
        if inst.source == "antiferromagnetic":
            return [antiferromagnetic_complete(inst.N) for _ in range(inst.count)]
        return [random_complete_instance(inst.N, derive_seed(self.seed, "instance", k), inst.values)
                for k in range(inst.count)]

    def as_dict(self) -> dict:
        return asdict(self)

    def content_hash(self) -> str:
        """Hash of everything except the output location."""
        d = self.as_dict()
        d.pop("output", None)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def load_config(path: str | os.PathLike, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise InputError(f"bad config {path}: {exc}") from exc


def dump_config(config: ExperimentConfig, path: str | os.PathLike) -> None:
    Path(path).write_text(yaml.safe_dump(config.as_dict(), sort_keys=True))


def worker_count(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, default)))
    except ValueError:
        return default

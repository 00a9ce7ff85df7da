"""Sample container shared by samplers, decoders and analysis."""
from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, InputError
from .ising import as_configs

PROVENANCE_KEYS = ("problem", "sampler", "seed", "embedding", "alpha", "C", "gamma", "beta")


@dataclass
class ReadSet:
    """Spin-configuration samples plus where they came from.

    ``provenance`` always carries :data:`PROVENANCE_KEYS` (``None`` when a
    key does not apply); samplers and decoders may add more.
    """

    configs: np.ndarray
    provenance: dict = field(default_factory=dict)
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.configs = as_configs(self.configs)
        for key in PROVENANCE_KEYS:
            self.provenance.setdefault(key, None)
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (len(self.configs),):
                raise DimensionError("one weight per read required")

    def __len__(self) -> int:
        return len(self.configs)

    @property
    def n_spins(self) -> int:
        return self.configs.shape[1]

    def with_configs(self, configs, **provenance) -> "ReadSet":
        return ReadSet(configs, {**self.provenance, **provenance}, self.weights)

    @classmethod
    def concatenate(cls, readsets, **provenance) -> "ReadSet":
        readsets = list(readsets)
        if not readsets:
            raise InputError("nothing to concatenate")
        w = None
        if any(r.weights is not None for r in readsets):
            w = np.concatenate([np.ones(len(r)) if r.weights is None else r.weights for r in readsets])
        return cls(np.concatenate([r.configs for r in readsets]),
                   {**readsets[0].provenance, **provenance}, w)


# -- persistence -------------------------------------------------------------
#
#   #nqac-readset v1
#   #provenance {json, sorted keys}
#   +-+-++          one read per line
#   +--+-+ 0.5      optional per-read weight after a space

def dumps_readset(reads: ReadSet) -> str:
    out = io.StringIO()
    out.write("#nqac-readset v1\n")
    out.write("#provenance " + json.dumps(reads.provenance, sort_keys=True, default=_jsonable) + "\n")
    chars = np.where(reads.configs > 0, "+", "-")
    for k, row in enumerate(chars):
        line = "".join(row)
        if reads.weights is not None:
            line += " " + repr(float(reads.weights[k]))
        out.write(line + "\n")
    return out.getvalue()


def loads_readset(text: str) -> ReadSet:
    provenance: dict = {}
    rows, weights = [], []
    for line in text.splitlines():
        if line.startswith("#provenance "):
            provenance = json.loads(line[len("#provenance "):])
        elif line.startswith("#") or not line.strip():
            continue
        else:
            spins, _, w = line.partition(" ")
            rows.append([1 if ch == "+" else -1 for ch in spins])
            if w:
                weights.append(float(w))
    if weights and len(weights) != len(rows):
        raise InputError("weights present on only some reads")
    configs = np.array(rows, dtype=np.int8).reshape(len(rows), -1)
    return ReadSet(configs, provenance, np.array(weights) if weights else None)


def write_readset(path: str | os.PathLike, reads: ReadSet) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_readset(reads))


def read_readset(path: str | os.PathLike) -> ReadSet:
    with open(path) as fh:
        return loads_readset(fh.read())


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")

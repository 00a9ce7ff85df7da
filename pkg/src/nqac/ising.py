"""Ising problem representation and exact small-system oracles.

Energy convention::

    E(z) = sum_i h_i z_i + sum_(i,j) J_ij z_i z_j,    z_i in {-1, +1}

Configurations are ``int8`` arrays of +/-1. Exhaustive routines index the
``2**n`` configurations by an integer ``k`` whose bit ``i`` set means
spin ``i`` is -1.
"""
from __future__ import annotations

import hashlib
import io
import os
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .exceptions import CapacityError, DimensionError, InputError, RangeViolationError

# Enumeration caps; override per call or by rebinding the module constants.
GROUND_STATE_CAP = 30
GIBBS_CAP = 25
ENERGY_TOLERANCE = 1e-9

_BLOCK_BITS = 18
_RANGE_EPS = 1e-12

RANDOM_COUPLING_VALUES = tuple(
    s * round(0.1 * k, 1) for k in range(1, 11) for s in (-1.0, 1.0)
)


@dataclass(frozen=True)
class IsingProblem:
    """Ising instance on ``n_spins`` spins.

    ``edges`` holds ``(i, j, J_ij)`` triples with ``i < j`` after
    normalisation; ``fields`` holds ``(i, h_i)`` pairs, zero fields may be
    omitted. Construction validates indices, duplicates and ranges.
    """

    n_spins: int
    edges: tuple = ()
    fields: tuple = ()
    h_range: tuple = (-2.0, 2.0)
    j_range: tuple = (-1.0, 1.0)
    label: str = "logical"

    def __post_init__(self):
        n = int(self.n_spins)
        if n < 0:
            raise InputError(f"n_spins must be non-negative, got {n}")
        object.__setattr__(self, "n_spins", n)
        object.__setattr__(self, "h_range", (float(self.h_range[0]), float(self.h_range[1])))
        object.__setattr__(self, "j_range", (float(self.j_range[0]), float(self.j_range[1])))
        if self.h_range[0] > self.h_range[1] or self.j_range[0] > self.j_range[1]:
            raise InputError("ranges must be closed intervals [lo, hi] with lo <= hi")

        edges, seen = [], set()
        for i, j, J in self.edges:
            i, j, J = int(i), int(j), float(J)
            if i == j:
                raise InputError(f"self-coupling on spin {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"edge ({i}, {j}) out of range for {n} spins")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InputError(f"duplicate edge {key}")
            seen.add(key)
            if not self.j_range[0] - _RANGE_EPS <= J <= self.j_range[1] + _RANGE_EPS:
                raise RangeViolationError(f"J{key} = {J} outside j_range {self.j_range}")
            edges.append((key[0], key[1], J))
        fields, seen = [], set()
        for i, h in self.fields:
            i, h = int(i), float(h)
            if not 0 <= i < n:
                raise InputError(f"field index {i} out of range for {n} spins")
            if i in seen:
                raise InputError(f"duplicate field on spin {i}")
            seen.add(i)
            if not self.h_range[0] - _RANGE_EPS <= h <= self.h_range[1] + _RANGE_EPS:
                raise RangeViolationError(f"h[{i}] = {h} outside h_range {self.h_range}")
            fields.append((i, h))
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "fields", tuple(fields))

    @classmethod
    def from_arrays(cls, h=None, J=None, **kwargs) -> "IsingProblem":
        """Build from a field vector and a (upper-triangular or symmetric) coupling matrix."""
        if J is None and h is None:
            raise InputError("need h or J")
        J = None if J is None else np.asarray(J, dtype=float)
        n = len(h) if h is not None else J.shape[0]
        edges = []
        if J is not None:
            if J.shape != (n, n):
                raise DimensionError(f"coupling matrix shape {J.shape} != ({n}, {n})")
            if np.array_equal(J, J.T):
                upper = np.triu(J, 1)
            elif np.any(np.triu(J, 1)) and np.any(np.tril(J, -1)):
                raise InputError("coupling matrix must be symmetric or one-sided triangular")
            else:
                upper = np.triu(J, 1) + np.tril(J, -1).T
            for i, j in zip(*np.nonzero(upper)):
                edges.append((int(i), int(j), float(upper[i, j])))
        fields = []
        if h is not None:
            fields = [(i, float(v)) for i, v in enumerate(np.asarray(h, dtype=float)) if v != 0.0]
        return cls(n, tuple(edges), tuple(fields), **kwargs)

    @cached_property
    def h(self) -> np.ndarray:
        out = np.zeros(self.n_spins)
        for i, v in self.fields:
            out[i] = v
        out.flags.writeable = False
        return out

    @cached_property
    def edge_arrays(self) -> tuple:
        if not self.edges:
            return np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp), np.zeros(0)
        i, j, J = zip(*self.edges)
        return np.array(i, dtype=np.intp), np.array(j, dtype=np.intp), np.array(J, dtype=float)

    @cached_property
    def coupling_matrix(self) -> np.ndarray:
        """Symmetric dense coupling matrix with zero diagonal."""
        W = np.zeros((self.n_spins, self.n_spins))
        i, j, J = self.edge_arrays
        W[i, j] = J
        W[j, i] = J
        W.flags.writeable = False
        return W

    def coupling(self, i: int, j: int) -> float:
        return float(self.coupling_matrix[i, j])

    def digest(self) -> str:
        """Content hash of the canonical text serialisation."""
        return hashlib.sha256(dumps_problem(self).encode()).hexdigest()


def antiferromagnetic_complete(n: int, J: float = 1.0) -> IsingProblem:
    """K_n with every coupling equal to ``J`` and no fields."""
    return IsingProblem(n, tuple((i, j, J) for i in range(n) for j in range(i + 1, n)))


def random_complete_instance(n, rng, values=RANDOM_COUPLING_VALUES) -> IsingProblem:
    """K_n with couplings drawn uniformly from ``values``, zero fields."""
    rng = np.random.default_rng(rng)
    vals = np.asarray(values, dtype=float)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    draws = vals[rng.integers(len(vals), size=len(pairs))]
    return IsingProblem(n, tuple((i, j, float(v)) for (i, j), v in zip(pairs, draws)))


def as_configs(configs, n_spins: int | None = None) -> np.ndarray:
    arr = np.asarray(configs)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionError(f"expected 1-D or 2-D spin array, got shape {arr.shape}")
    if n_spins is not None and arr.shape[1] != n_spins:
        raise DimensionError(f"config length {arr.shape[1]} != n_spins {n_spins}")
    if arr.size and not np.all(np.abs(arr) == 1):
        raise InputError("spin entries must be +1 or -1")
    return arr.astype(np.int8, copy=False)


def energies(problem: IsingProblem, configs) -> np.ndarray:
    """Vectorised energy of a batch of configurations."""
    Z = as_configs(configs, problem.n_spins).astype(float)
    i, j, J = problem.edge_arrays
    return Z @ problem.h + (Z[:, i] * Z[:, j]) @ J


def energy(problem: IsingProblem, config) -> float:
    z = np.asarray(config)
    if z.ndim != 1:
        raise DimensionError("energy() takes a single configuration")
    return float(energies(problem, z)[0])


def index_to_configs(indices, n_spins: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n_spins, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def configs_to_index(configs) -> np.ndarray:
    Z = as_configs(configs)
    bits = (Z < 0).astype(np.int64)
    return bits @ (np.int64(1) << np.arange(Z.shape[1], dtype=np.int64))


def all_configs(n_spins: int) -> np.ndarray:
    return index_to_configs(np.arange(2 ** n_spins), n_spins)


def _energy_blocks(problem: IsingProblem):
    n = problem.n_spins
    total = 1 << n
    block = 1 << min(n, _BLOCK_BITS)
    for start in range(0, total, block):
        idx = np.arange(start, min(start + block, total), dtype=np.int64)
        yield idx, energies(problem, index_to_configs(idx, n))


def all_energies(problem: IsingProblem) -> np.ndarray:
    return np.concatenate([e for _, e in _energy_blocks(problem)])


def enumerate_ground_states(problem: IsingProblem, cap: int | None = None,
                            tol: float = ENERGY_TOLERANCE):
    """Exact ground energy and every minimiser, in config-index order."""
    cap = GROUND_STATE_CAP if cap is None else cap
    if problem.n_spins > cap:
        raise CapacityError(f"{problem.n_spins} spins exceeds ground-state cap {cap}")
    best = np.inf
    found: list[np.ndarray] = []
    for idx, e in _energy_blocks(problem):
        m = e.min()
        if m < best - tol:
            best = m
            found = []
        if m <= best + tol:
            found.append(idx[e <= best + tol])
    ground = np.concatenate(found)
    return float(best), index_to_configs(ground, problem.n_spins)


@dataclass
class ExactDistribution:
    """Gibbs distribution over all ``2**n`` configurations, indexed by config index."""

    n_spins: int
    beta: float
    energies: np.ndarray
    probs: np.ndarray

    def configs(self, indices=None) -> np.ndarray:
        if indices is None:
            indices = np.arange(len(self.probs))
        return index_to_configs(indices, self.n_spins)

    def expectation(self, values) -> float:
        return float(np.dot(self.probs, values))


def boltzmann_weights(energies_, beta: float) -> np.ndarray:
    """Normalised exp(-beta E) computed stably."""
    e = np.asarray(energies_, dtype=float)
    w = np.exp(-beta * (e - e.min())) if e.size else e
    return w / w.sum()


def gibbs_distribution(problem: IsingProblem, beta: float, cap: int | None = None) -> ExactDistribution:
    cap = GIBBS_CAP if cap is None else cap
    if beta < 0:
        raise InputError(f"beta must be >= 0, got {beta}")
    if problem.n_spins > cap:
        raise CapacityError(f"{problem.n_spins} spins exceeds Gibbs enumeration cap {cap}")
    e = all_energies(problem)
    return ExactDistribution(problem.n_spins, float(beta), e, boltzmann_weights(e, beta))


@dataclass(frozen=True)
class EnergyHistogram:
    levels: np.ndarray
    masses: np.ndarray
    energy_tolerance: float = ENERGY_TOLERANCE

    def __post_init__(self):
        if len(self.levels) != len(self.masses):
            raise DimensionError("levels and masses differ in length")

    def as_dict(self) -> dict:
        return {float(e): float(p) for e, p in zip(self.levels, self.masses)}


def histogram_from_energies(energies_, masses=None, tol: float = ENERGY_TOLERANCE) -> EnergyHistogram:
    """Aggregate mass per distinct energy level (levels within ``tol`` are merged)."""
    e = np.asarray(energies_, dtype=float)
    if e.size == 0:
        raise InputError("cannot build a histogram from zero samples")
    w = np.ones_like(e) if masses is None else np.asarray(masses, dtype=float)
    order = np.argsort(e, kind="stable")
    e, w = e[order], w[order]
    starts = np.concatenate([[0], np.nonzero(np.diff(e) > tol)[0] + 1])
    mass = np.add.reduceat(w, starts)
    return EnergyHistogram(e[starts], mass / mass.sum(), tol)


def energy_histogram(source, problem: IsingProblem | None = None,
                     tol: float = ENERGY_TOLERANCE) -> EnergyHistogram:
    """Energy histogram of an exact distribution, a ReadSet or a raw config array.

    Sample sources need ``problem`` to evaluate energies; an exact
    distribution uses its stored energies unless ``problem`` is given.
    """
    if isinstance(source, ExactDistribution):
        e = source.energies if problem is None else all_energies(problem)
        return histogram_from_energies(e, source.probs, tol)
    if problem is None:
        raise InputError("problem is required for sample histograms")
    configs = getattr(source, "configs", source)
    weights = getattr(source, "weights", None)
    configs = as_configs(configs, problem.n_spins)
    if len(configs) == 0:
        raise InputError("cannot build a histogram from an empty sample set")
    return histogram_from_energies(energies(problem, configs), weights, tol)


def align_histograms(p: EnergyHistogram, q: EnergyHistogram):
    """Masses of ``p`` and ``q`` on the union of their levels (0 where absent)."""
    tol = max(p.energy_tolerance, q.energy_tolerance)
    e = np.concatenate([p.levels, q.levels])
    src = np.concatenate([np.zeros(len(p.levels), int), np.ones(len(q.levels), int)])
    m = np.concatenate([p.masses, q.masses])
    order = np.argsort(e, kind="stable")
    e, src, m = e[order], src[order], m[order]
    group = np.concatenate([[0], np.cumsum(np.diff(e) > tol)])
    n_levels = group[-1] + 1 if len(group) else 0
    pm = np.zeros(n_levels)
    qm = np.zeros(n_levels)
    np.add.at(pm, group[src == 0], m[src == 0])
    np.add.at(qm, group[src == 1], m[src == 1])
    first = np.concatenate([[0], np.nonzero(np.diff(group))[0] + 1])
    return e[first], pm, qm


def scale_problem(problem: IsingProblem, alpha: float) -> IsingProblem:
    """Multiply every h and J by ``alpha`` in (0, 1]."""
    if not 0.0 < alpha <= 1.0:
        raise InputError(f"alpha must lie in (0, 1], got {alpha}")
    return replace(
        problem,
        edges=tuple((i, j, alpha * J) for i, j, J in problem.edges),
        fields=tuple((i, alpha * h) for i, h in problem.fields),
    )


# -- text format -------------------------------------------------------------
#
#   # comment lines are ignored
#   n_spins <int>
#   label <logical|nested|physical|...>
#   h_range <lo> <hi>
#   j_range <lo> <hi>
#   [meta]              optional, "<key> <value...>" lines
#   [fields]            "<i> <h>" lines
#   [couplings]         "<i> <j> <J>" lines
#   [<other>]           free-form lines, returned verbatim
#
# Floats are written with repr(), so decimal literals round-trip exactly.

def _fmt(x: float) -> str:
    return repr(float(x))


def dumps_problem(problem: IsingProblem, meta: Mapping | None = None,
                  extra: Mapping[str, Iterable[str]] | None = None) -> str:
    out = io.StringIO()
    out.write("# nqac ising v1\n")
    out.write(f"n_spins {problem.n_spins}\n")
    out.write(f"label {problem.label}\n")
    out.write(f"h_range {_fmt(problem.h_range[0])} {_fmt(problem.h_range[1])}\n")
    out.write(f"j_range {_fmt(problem.j_range[0])} {_fmt(problem.j_range[1])}\n")
    if meta:
        out.write("[meta]\n")
        for k, v in meta.items():
            out.write(f"{k} {v}\n")
    out.write("[fields]\n")
    for i, h in problem.fields:
        out.write(f"{i} {_fmt(h)}\n")
    out.write("[couplings]\n")
    for i, j, J in problem.edges:
        out.write(f"{i} {j} {_fmt(J)}\n")
    for name, lines in (extra or {}).items():
        out.write(f"[{name}]\n")
        for line in lines:
            out.write(f"{line}\n")
    return out.getvalue()


def loads_problem(text: str):
    """Parse the text format; returns ``(problem, meta, extra_sections)``."""
    head: dict[str, list[str]] = {}
    meta: dict[str, str] = {}
    sections: dict[str, list[str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, [])
            continue
        if current is None:
            key, *vals = line.split()
            head[key] = vals
        elif current == "meta":
            key, _, val = line.partition(" ")
            meta[key] = val.strip()
        else:
            sections[current].append(line)
    try:
        n = int(head["n_spins"][0])
        label = head.get("label", ["logical"])[0]
        h_range = tuple(float(v) for v in head.get("h_range", ["-2", "2"]))
        j_range = tuple(float(v) for v in head.get("j_range", ["-1", "1"]))
        fields = [(int(a), float(b)) for a, b in (l.split() for l in sections.pop("fields", []))]
        edges = [(int(a), int(b), float(c)) for a, b, c in (l.split() for l in sections.pop("couplings", []))]
    except (KeyError, ValueError, IndexError) as exc:
        raise InputError(f"malformed problem file: {exc}") from exc
    sections.pop("meta", None)
    problem = IsingProblem(n, tuple(edges), tuple(fields), h_range, j_range, label)
    return problem, meta, sections


def write_problem(path: str | os.PathLike, problem: IsingProblem, meta=None, extra=None) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_problem(problem, meta, extra))


def read_problem(path: str | os.PathLike) -> IsingProblem:
    with open(path) as fh:
        return loads_problem(fh.read())[0]

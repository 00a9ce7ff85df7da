"""Logical -> code qubit nesting and its majority-vote inverse.

Logical qubit ``i`` becomes ``C`` code qubits ``(i, c)`` with flat index
``i * C + c``. Every logical coupling is copied onto all ``C**2`` code
pairs, fields are multiplied by ``C``, and the code qubits of one logical
qubit are tied together by ferromagnetic ``-gamma`` penalties.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, InputError, RangeViolationError
from .ising import ExactDistribution, IsingProblem, as_configs, index_to_configs


@dataclass(frozen=True)
class NestedProblem:
    base: IsingProblem
    C: int
    gamma: float
    problem: IsingProblem
    scale: float = 1.0

    @property
    def n_logical(self) -> int:
        return self.base.n_spins

    def code_index(self, i: int, c: int) -> int:
        return i * self.C + c

    def logical_index(self, q: int) -> tuple[int, int]:
        return divmod(q, self.C)

    @property
    def penalty_edges(self) -> list:
        return [e for e in self.problem.edges if e[0] // self.C == e[1] // self.C]

    @property
    def coupling_edges(self) -> list:
        return [e for e in self.problem.edges if e[0] // self.C != e[1] // self.C]

    def index_map_lines(self) -> list[str]:
        return [f"{self.code_index(i, c)} {i} {c}"
                for i in range(self.n_logical) for c in range(self.C)]


@dataclass(frozen=True)
class ResourceCount:
    C: int
    N: int
    chain_length: int
    physical_qubits: int


def chain_length(m: int, shore: int = 4) -> int:
    """Chain length of the native clique embedding of K_m."""
    return math.ceil(m / shore) + 1


def resource_count(N: int, C: int) -> ResourceCount:
    if N < 2 or C < 1:
        raise InputError(f"need N >= 2 and C >= 1, got N={N}, C={C}")
    L = chain_length(C * N)
    return ResourceCount(C, N, L, C * N * L)


def _in_range(x: float, rng: tuple) -> bool:
    return rng[0] - 1e-12 <= x <= rng[1] + 1e-12


def rescale_to_range(n_spins, edges, fields, h_range, j_range, label="nested"):
    """Uniformly shrink raw couplings/fields until all lie in range.

    Returns ``(problem, factor)`` where every value was divided by
    ``factor >= 1``. Ground states are unchanged.
    """
    factor = 1.0
    for _, h in fields:
        lim = h_range[1] if h > 0 else -h_range[0]
        if h != 0.0:
            factor = max(factor, abs(h) / lim)
    for _, _, J in edges:
        lim = j_range[1] if J > 0 else -j_range[0]
        if J != 0.0:
            factor = max(factor, abs(J) / lim)
    problem = IsingProblem(
        n_spins,
        tuple((i, j, J / factor) for i, j, J in edges),
        tuple((i, h / factor) for i, h in fields),
        h_range, j_range, label,
    )
    return problem, factor


def nest(problem: IsingProblem, C: int, gamma: float, rescale: bool = False) -> NestedProblem:
    """Nest a logical problem at level ``C`` with penalty strength ``gamma``.

    Out-of-range nested values raise :class:`RangeViolationError` unless
    ``rescale`` is set, in which case the whole nested problem is divided
    uniformly (see :func:`rescale_to_range`).
    """
    C = int(C)
    if C < 1:
        raise InputError(f"nesting level must be >= 1, got {C}")
    if C > 1 and not gamma > 0:
        raise InputError(f"penalty gamma must be > 0, got {gamma}")
    n = problem.n_spins
    fields = [(i * C + c, C * h) for i, h in problem.fields for c in range(C)]
    edges = [((i * C + c), (j * C + d), J)
             for i, j, J in problem.edges for c in range(C) for d in range(C)]
    if C > 1:
        edges += [(i * C + c, i * C + d, -float(gamma))
                  for i in range(n) for c in range(C) for d in range(c + 1, C)]
    edges.sort(key=lambda e: (min(e[0], e[1]), max(e[0], e[1])))

    bad = [f"h~({q // C},{q % C})={h}" for q, h in fields if not _in_range(h, problem.h_range)]
    if C > 1 and not _in_range(-gamma, problem.j_range):
        bad.append(f"penalty -gamma={-gamma}")
    if bad and not rescale:
        raise RangeViolationError(
            "nested values outside range: " + ", ".join(bad[:5])
            + ("" if len(bad) <= 5 else f" (+{len(bad) - 5} more)")
            + "; use rescale=True to shrink uniformly")
    nested, factor = rescale_to_range(n * C, edges, fields, problem.h_range, problem.j_range)
    return NestedProblem(problem, C, float(gamma) if C > 1 else 0.0, nested, factor)


def lift(logical, C: int) -> np.ndarray:
    """Copy each logical spin onto its ``C`` code qubits."""
    return np.repeat(np.asarray(logical, dtype=np.int8), C, axis=-1)


def majority_vote(blocks: np.ndarray, rng) -> np.ndarray:
    """Sign of the sum along the last axis; zero sums resolved by a fair coin.

    Coins are drawn in row-major order of the tied entries, so the result
    is a deterministic function of ``rng``'s state.
    """
    s = np.asarray(blocks, dtype=np.int64).sum(axis=-1)
    out = np.sign(s).astype(np.int8)
    ties = out == 0
    n_ties = int(ties.sum())
    if n_ties:
        rng = np.random.default_rng(rng)
        out[ties] = rng.choice(np.array([-1, 1], dtype=np.int8), size=n_ties)
    return out


def decode_code_to_logical(code_configs, C: int, tie_rng=None) -> np.ndarray:
    Z = np.asarray(code_configs)
    single = Z.ndim == 1
    Z = as_configs(Z)
    if Z.shape[1] % C:
        raise DimensionError(f"code length {Z.shape[1]} not divisible by C={C}")
    if C == 1:
        out = Z.copy()
    else:
        out = majority_vote(Z.reshape(len(Z), -1, C), tie_rng)
    return out[0] if single else out


def exact_decoded_distribution(dist: ExactDistribution, C: int) -> np.ndarray:
    """Exact distribution of decoded logical configs (length ``2**N``).

    Ties contribute 1/2 to each logical value, matching the fair-coin rule.
    """
    n_code = dist.n_spins
    if n_code % C:
        raise DimensionError(f"{n_code} code qubits not divisible by C={C}")
    N = n_code // C
    code = dist.configs().astype(np.int64)
    s = np.sign(code.reshape(len(code), N, C).sum(axis=2))  # (2^CN, N)
    logical = index_to_configs(np.arange(2 ** N), N).astype(np.int64)  # (2^N, N)
    # per-spin factor: 1 if agree, 0 if disagree, 1/2 on ties
    factor = (1.0 + s[:, None, :] * logical[None, :, :]) / 2.0
    return dist.probs @ factor.prod(axis=2)

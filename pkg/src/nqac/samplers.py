"""Sampling backends: exact Gibbs, Metropolis MCMC, and a quasi-static device model.

The device model treats an annealer as a Gibbs sampler at the freezing
point, ``beta_eff = beta_phys * freeze_fraction``, with Gaussian control
noise redrawn once per programming cycle.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass

import numpy as np
from scipy import sparse

from .exceptions import InputError
from .ising import GIBBS_CAP, IsingProblem, gibbs_distribution, index_to_configs
from .readset import ReadSet


def _seed_of(seed):
    if isinstance(seed, np.random.SeedSequence):
        return [int(seed.entropy), *map(int, seed.spawn_key)]
    return None if seed is None else int(seed)


def sample_exact(problem: IsingProblem, beta: float, n_reads: int, seed=None,
                 cap: int | None = None) -> ReadSet:
    """I.i.d. draws from the exact Gibbs distribution (inverse CDF on config index)."""
    dist = gibbs_distribution(problem, beta, cap)
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(dist.probs)
    idx = np.searchsorted(cdf, rng.random(int(n_reads)) * cdf[-1], side="right")
    idx = np.minimum(idx, len(cdf) - 1)
    prov = {"problem": problem.digest(), "sampler": "exact", "seed": _seed_of(seed), "beta": float(beta)}
    return ReadSet(index_to_configs(idx, problem.n_spins), prov)


def color_classes(problem: IsingProblem) -> list:
    """Partition spins into classes with no coupling inside a class.

    Bipartite coupling graphs (any Chimera subgraph) get two classes via
    BFS; otherwise greedy colouring in index order.
    """
    n = problem.n_spins
    if n == 0:
        return []
    nbrs = [[] for _ in range(n)]
    for i, j, _ in problem.edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    color = [-1] * n
    bipartite = True
    for root in range(n):
        if color[root] >= 0:
            continue
        color[root] = 0
        queue = deque([root])
        while queue and bipartite:
            v = queue.popleft()
            for u in nbrs[v]:
                if color[u] < 0:
                    color[u] = 1 - color[v]
                    queue.append(u)
                elif color[u] == color[v]:
                    bipartite = False
                    break
        if not bipartite:
            break
    if not bipartite:
        color = [-1] * n
        for v in range(n):
            used = {color[u] for u in nbrs[v] if color[u] >= 0}
            c = 0
            while c in used:
                c += 1
            color[v] = c
    color = np.array(color, dtype=np.intp)
    return [cls for cls in (np.nonzero(color == c)[0] for c in range(color.max() + 1)) if len(cls)]


class _Metropolis:
    """Single-spin-flip Metropolis over a batch of independent chains.

    A sweep visits colour classes in order and spins within a class
    simultaneously, which equals a sequential sweep in class order since
    same-class spins do not interact.
    """

    def __init__(self, problem: IsingProblem):
        self.h = problem.h.copy()
        i, j, J = problem.edge_arrays
        n = problem.n_spins
        W = sparse.csr_matrix(
            (np.concatenate([J, J]), (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n))
        self.classes = color_classes(problem)
        self.rows = [W[cls] for cls in self.classes]

    def run(self, Z: np.ndarray, schedule, rng) -> np.ndarray:
        """Advance chains ``Z`` (reads x spins, +/-1 floats) through ``schedule``."""
        Zt = np.ascontiguousarray(Z.T)
        for beta, sweeps in schedule:
            for _ in range(int(sweeps)):
                for cls, Wc in zip(self.classes, self.rows):
                    zc = Zt[cls]
                    dE = -2.0 * zc * (Wc @ Zt + self.h[cls, None])
                    flip = rng.random(dE.shape) < np.exp(np.minimum(0.0, -beta * dE))
                    Zt[cls] = np.where(flip, -zc, zc)
        return Zt.T.copy()


def _check_schedule(schedule) -> list:
    schedule = [(float(b), int(s)) for b, s in schedule]
    if not schedule:
        raise InputError("beta schedule must be non-empty")
    for b, s in schedule:
        if b < 0 or s < 0:
            raise InputError(f"invalid schedule entry ({b}, {s})")
    if sum(s for _, s in schedule) == 0:
        raise InputError("beta schedule has no sweeps")
    return schedule


def sample_mcmc(problem: IsingProblem, beta_schedule, n_reads: int, seed=None) -> ReadSet:
    """Independent Metropolis chains, one per read, each started uniformly at random."""
    schedule = _check_schedule(beta_schedule)
    rng = np.random.default_rng(seed)
    Z = rng.choice(np.array([-1.0, 1.0]), size=(int(n_reads), problem.n_spins))
    Z = _Metropolis(problem).run(Z, schedule, rng)
    prov = {"problem": problem.digest(), "sampler": "mcmc", "seed": _seed_of(seed),
            "beta": schedule[-1][0], "sweeps": sum(s for _, s in schedule)}
    return ReadSet(Z.astype(np.int8), prov)


def anneal_schedule(beta: float, anneal_sweeps: int = 100, hold_sweeps: int = 100,
                    start_fraction: float = 0.05, steps: int = 20) -> list:
    """Geometric ramp up to ``beta`` followed by a hold at ``beta``."""
    sched = []
    if anneal_sweeps > 0 and beta > 0:
        per = max(1, anneal_sweeps // steps)
        for b in np.geomspace(start_fraction * beta, beta, steps):
            sched.append((float(b), per))
    sched.append((float(beta), max(1, int(hold_sweeps))))
    return sched


@dataclass(frozen=True)
class DeviceModel:
    """Quasi-static annealer model.

    ``control_noise_sigma`` is the absolute std-dev of the Gaussian added
    to every programmed h and J once per cycle, before clipping to range.
    Problems up to ``exact_cap`` spins are sampled exactly, larger ones by
    annealed Metropolis (``anneal_sweeps`` ramp + ``hold_sweeps``).
    """

    beta_phys: float = 1.0
    freeze_fraction: float = 1.0
    control_noise_sigma: float = 0.03
    reads_per_cycle: int = 100
    exact_cap: int = 12
    anneal_sweeps: int = 1000
    hold_sweeps: int = 1000
    clip: bool = True

    def __post_init__(self):
        if not self.beta_phys > 0:
            raise InputError("beta_phys must be > 0")
        if not 0 < self.freeze_fraction <= 1:
            raise InputError("freeze_fraction must lie in (0, 1]")
        if self.control_noise_sigma < 0:
            raise InputError("control_noise_sigma must be >= 0")
        if self.reads_per_cycle < 1:
            raise InputError("reads_per_cycle must be >= 1")

    @property
    def beta_eff(self) -> float:
        return self.beta_phys * self.freeze_fraction

    def as_dict(self) -> dict:
        return asdict(self)


def perturb(problem: IsingProblem, sigma: float, rng, clip: bool = True) -> IsingProblem:
    """Add N(0, sigma^2) to every h (all spins) and every present J, then clip."""
    if sigma == 0:
        return problem
    h = problem.h + sigma * rng.standard_normal(problem.n_spins)
    i, j, J = problem.edge_arrays
    J = J + sigma * rng.standard_normal(len(J))
    if clip:
        h = np.clip(h, *problem.h_range)
        J = np.clip(J, *problem.j_range)
    return IsingProblem(
        problem.n_spins,
        tuple(zip(i.tolist(), j.tolist(), J.tolist())),
        tuple((k, float(v)) for k, v in enumerate(h) if v != 0.0),
        problem.h_range if clip else (-math.inf, math.inf),
        problem.j_range if clip else (-math.inf, math.inf),
        problem.label,
    )


def _disjoint_union(problems) -> IsingProblem:
    n = problems[0].n_spins
    edges, fields = [], []
    for c, p in enumerate(problems):
        off = c * n
        edges.extend((i + off, j + off, J) for i, j, J in p.edges)
        fields.extend((i + off, h) for i, h in p.fields)
    inf = (-math.inf, math.inf)
    return IsingProblem(n * len(problems), tuple(edges), tuple(fields), inf, inf, "union")


def simulate_device(physical, model: DeviceModel, n_reads: int, seed=None) -> ReadSet:
    """Programming cycles of ``reads_per_cycle`` reads, each with its own noise draw.

    ``physical`` is a :class:`~nqac.chimera.PhysicalProblem` or a bare
    :class:`IsingProblem`. Cycle ``c`` uses the ``c``-th child of
    ``SeedSequence(seed)``.
    """
    problem = getattr(physical, "problem", physical)
    n_reads = int(n_reads)
    n_cycles = max(1, math.ceil(n_reads / model.reads_per_cycle))
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_cycles)
    beta = model.beta_eff
    exact = problem.n_spins <= min(model.exact_cap, GIBBS_CAP)
    schedule = anneal_schedule(beta, model.anneal_sweeps, model.hold_sweeps)
    sizes = [min(model.reads_per_cycle, n_reads - c * model.reads_per_cycle) for c in range(n_cycles)]
    rngs = [np.random.default_rng(child) for child in children]
    programmed = [perturb(problem, model.control_noise_sigma, rng, model.clip) for rng in rngs]
    n = problem.n_spins
    if exact:
        chunks = []
        for prog, rng, k in zip(programmed, rngs, sizes):
            cdf = np.cumsum(gibbs_distribution(prog, beta).probs)
            idx = np.minimum(np.searchsorted(cdf, rng.random(k) * cdf[-1], side="right"), len(cdf) - 1)
            chunks.append(index_to_configs(idx, n))
    else:
        # all cycles run as disjoint copies inside one block-diagonal system
        mcmc_rng = np.random.default_rng(root.spawn(1)[0])
        Z = mcmc_rng.choice(np.array([-1.0, 1.0]), size=(max(sizes), n_cycles * n))
        Z = _Metropolis(_disjoint_union(programmed)).run(Z, schedule, mcmc_rng).astype(np.int8)
        chunks = [Z[:k, c * n:(c + 1) * n] for c, k in enumerate(sizes)]
    prov = {"problem": problem.digest(), "sampler": "device", "seed": _seed_of(seed),
            "beta": beta, "backend": "exact" if exact else "mcmc", "device": model.as_dict()}
    return ReadSet(np.concatenate(chunks) if chunks else np.zeros((0, problem.n_spins), np.int8), prov)

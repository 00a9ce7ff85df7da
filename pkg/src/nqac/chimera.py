"""Chimera hardware graphs, native clique embeddings and chain decoding.

Qubit ``(row, col, u, t)`` has linear index
``((row * cols + col) * 2 + u) * k + t``; ``u = 0`` is the vertical shore
(coupled to the same ``t`` in the cells above and below), ``u = 1`` the
horizontal shore (coupled left and right). Inside a cell the two shores
form a complete bipartite K_{k,k}.
"""
from __future__ import annotations

import hashlib
import math
import os
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from .exceptions import (
    CapacityError,
    ChainOverlapError,
    DimensionError,
    DisconnectedChainError,
    InputError,
    MissingCouplerError,
    UnbalancedEmbeddingError,
)
from .ising import IsingProblem
from .nesting import NestedProblem, majority_vote
from .readset import ReadSet


@dataclass(frozen=True)
class ChimeraGraph:
    rows: int
    cols: int
    shore: int = 4
    mask: frozenset = frozenset()

    def __post_init__(self):
        if min(self.rows, self.cols, self.shore) < 1:
            raise InputError("rows, cols and shore must all be >= 1")
        mask = frozenset(int(q) for q in self.mask)
        bad = [q for q in mask if not 0 <= q < self.n_qubits]
        if bad:
            raise InputError(f"mask indices out of range: {sorted(bad)[:5]}")
        object.__setattr__(self, "mask", mask)

    @property
    def n_qubits(self) -> int:
        return self.rows * self.cols * 2 * self.shore

    def index(self, row: int, col: int, u: int, t: int) -> int:
        return ((row * self.cols + col) * 2 + u) * self.shore + t

    def coords(self, q: int) -> tuple[int, int, int, int]:
        rest, t = divmod(q, self.shore)
        cell, u = divmod(rest, 2)
        row, col = divmod(cell, self.cols)
        return row, col, u, t

    def is_available(self, q: int) -> bool:
        return 0 <= q < self.n_qubits and q not in self.mask

    @cached_property
    def available(self) -> tuple:
        return tuple(q for q in range(self.n_qubits) if q not in self.mask)

    @cached_property
    def edges(self) -> tuple:
        """Couplers between available qubits, as sorted ``(a, b)`` pairs."""
        k, out = self.shore, []
        for r in range(self.rows):
            for c in range(self.cols):
                for t in range(k):
                    for s in range(k):
                        out.append((self.index(r, c, 0, t), self.index(r, c, 1, s)))
                    if r + 1 < self.rows:
                        out.append((self.index(r, c, 0, t), self.index(r + 1, c, 0, t)))
                    if c + 1 < self.cols:
                        out.append((self.index(r, c, 1, t), self.index(r, c + 1, 1, t)))
        out = [(min(a, b), max(a, b)) for a, b in out if a not in self.mask and b not in self.mask]
        return tuple(sorted(out))

    @cached_property
    def adjacency(self) -> dict:
        adj = {q: set() for q in self.available}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adjacency.get(a, ())

    def mask_hash(self) -> str:
        return hashlib.sha256(",".join(map(str, sorted(self.mask))).encode()).hexdigest()[:16]


def build_chimera(rows: int, cols: int, shore: int = 4, mask=()) -> ChimeraGraph:
    return ChimeraGraph(int(rows), int(cols), int(shore), frozenset(mask))


@dataclass(frozen=True)
class Embedding:
    """One ordered chain of physical qubits per source vertex."""

    chains: tuple
    graph: ChimeraGraph
    source: str = ""

    @property
    def m(self) -> int:
        return len(self.chains)

    @property
    def chain_length(self) -> int:
        return len(self.chains[0]) if self.chains else 0

    @property
    def qubits(self) -> tuple:
        """Physical qubits in chain-major order (the physical problem's variable order)."""
        return tuple(q for chain in self.chains for q in chain)

    @property
    def n_qubits(self) -> int:
        return sum(len(c) for c in self.chains)


def _connected(chain, graph: ChimeraGraph) -> bool:
    nodes = set(chain)
    start = chain[0]
    seen, queue = {start}, deque([start])
    while queue:
        q = queue.popleft()
        for nb in graph.adjacency.get(q, ()):
            if nb in nodes and nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return seen == nodes


def chain_couplers(embedding: Embedding) -> dict:
    """Canonical (smallest) physical coupler for every pair of chains that touch."""
    owner = {q: c for c, chain in enumerate(embedding.chains) for q in chain}
    best: dict = {}
    for a, b in embedding.graph.edges:
        ca, cb = owner.get(a), owner.get(b)
        if ca is None or cb is None or ca == cb:
            continue
        key = (ca, cb) if ca < cb else (cb, ca)
        pair = (a, b) if ca < cb else (b, a)
        if key not in best or pair < best[key]:
            best[key] = pair
    return best


def validate_embedding(embedding: Embedding, source_edges=None, balanced: bool = True) -> None:
    """Raise a specific :class:`EmbeddingError` subclass if the embedding is invalid.

    ``source_edges`` defaults to the complete graph on the chains.
    """
    graph = embedding.graph
    seen: dict = {}
    for c, chain in enumerate(embedding.chains):
        if not chain:
            raise DisconnectedChainError(f"chain {c} is empty")
        for q in chain:
            if not graph.is_available(q):
                raise DisconnectedChainError(f"chain {c} uses unavailable qubit {q}")
            if q in seen:
                raise ChainOverlapError(f"qubit {q} shared by chains {seen[q]} and {c}")
            seen[q] = c
    for c, chain in enumerate(embedding.chains):
        if not _connected(chain, graph):
            raise DisconnectedChainError(f"chain {c} is not connected: {list(chain)}")
    if balanced and len({len(ch) for ch in embedding.chains}) > 1:
        raise UnbalancedEmbeddingError(
            f"chain lengths differ: {sorted({len(ch) for ch in embedding.chains})}")
    if source_edges is None:
        source_edges = combinations(range(embedding.m), 2)
    couplers = chain_couplers(embedding)
    for a, b in source_edges:
        if (min(a, b), max(a, b)) not in couplers:
            raise MissingCouplerError(f"no physical coupler between chains {a} and {b}")


def _canonical_chains(n: int, k: int) -> list:
    """Triangle layout in an n x n cell block: chain (p, t) runs along row p
    (columns 0..p, horizontal shore) then down column p (rows p..n-1,
    vertical shore). Returned as block coordinates."""
    chains = []
    for p in range(n):
        for t in range(k):
            chain = [(p, j, 1, t) for j in range(p + 1)]
            chain += [(i, p, 0, t) for i in range(p, n)]
            chains.append(chain)
    return chains


_SYMMETRIES = (
    lambda r, c, u, n: (r, c, u),
    lambda r, c, u, n: (n - 1 - r, n - 1 - c, u),
    lambda r, c, u, n: (c, r, 1 - u),
    lambda r, c, u, n: (n - 1 - c, n - 1 - r, 1 - u),
)


def embed_complete(m: int, graph: ChimeraGraph, seed=None) -> Embedding:
    """Random balanced native clique embedding of K_m.

    Chains have length ``ceil(m / k) + 1``. The seed picks the block
    offset, a block symmetry, a permutation of in-cell positions, which
    chains are used, and the chain-to-vertex assignment. Chains touching
    masked qubits are skipped.
    """
    if m < 1:
        raise InputError(f"clique size must be >= 1, got {m}")
    k = graph.shore
    n = math.ceil(m / k)
    L = n + 1
    need = m * L
    if n > min(graph.rows, graph.cols):
        raise CapacityError(
            f"K_{m} needs a {n}x{n} cell block ({need} qubits); graph is "
            f"{graph.rows}x{graph.cols} with {len(graph.available)} available qubits")
    rng = np.random.default_rng(seed)
    placements = [(r0, c0, s) for r0 in range(graph.rows - n + 1)
                  for c0 in range(graph.cols - n + 1) for s in range(len(_SYMMETRIES))]
    canonical = _canonical_chains(n, k)
    for idx in rng.permutation(len(placements)):
        r0, c0, s = placements[idx]
        perm = rng.permutation(k)
        sym = _SYMMETRIES[s]
        chains = []
        for chain in canonical:
            qs = []
            for r, c, u, t in chain:
                rr, cc, uu = sym(r, c, u, n)
                qs.append(graph.index(r0 + rr, c0 + cc, uu, int(perm[t])))
            if all(q not in graph.mask for q in qs):
                chains.append(tuple(qs))
        if len(chains) < m:
            continue
        pick = rng.choice(len(chains), size=m, replace=False)
        return Embedding(tuple(chains[i] for i in pick), graph, source=f"K_{m}")
    raise CapacityError(
        f"no mask-free placement for K_{m}: need {need} qubits in a {n}x{n} block, "
        f"graph has {len(graph.available)} available of {graph.n_qubits}")


@dataclass(frozen=True)
class PhysicalProblem:
    problem: IsingProblem
    embedding: Embedding
    chain_penalty: float
    nested: NestedProblem | None = None

    @property
    def intra_chain_edges(self) -> list:
        L = self.embedding.chain_length
        return [e for e in self.problem.edges if e[0] // L == e[1] // L]


def embed_problem(nested: NestedProblem, embedding: Embedding, chain_penalty: float = 1.0) -> PhysicalProblem:
    """Place a nested problem on hardware chains.

    Variables are the embedded qubits in chain-major order. Chain edges
    carry ``-chain_penalty``; each nested coupling sits on the canonical
    coupler between its two chains; each nested field is split evenly over
    its chain.
    """
    if not chain_penalty > 0:
        raise InputError(f"chain_penalty must be > 0, got {chain_penalty}")
    src = nested.problem
    if embedding.m != src.n_spins:
        raise DimensionError(f"embedding has {embedding.m} chains, nested problem {src.n_spins} qubits")
    L = embedding.chain_length
    if any(len(ch) != L for ch in embedding.chains):
        raise UnbalancedEmbeddingError("embed_problem requires a balanced embedding")
    local = {q: pos for pos, q in enumerate(embedding.qubits)}
    graph = embedding.graph

    edges = []
    for c, chain in enumerate(embedding.chains):
        members = set(chain)
        for q in chain:
            for nb in graph.adjacency.get(q, ()):
                if nb in members and q < nb:
                    a, b = local[q], local[nb]
                    edges.append((min(a, b), max(a, b), -float(chain_penalty)))
    couplers = chain_couplers(embedding)
    for a, b, J in src.edges:
        pair = couplers.get((a, b))
        if pair is None:
            raise MissingCouplerError(f"no physical coupler between chains {a} and {b}")
        edges.append((local[pair[0]], local[pair[1]], J))
    fields = [(c * L + p, h / L) for c, h in src.fields for p in range(L)]
    problem = IsingProblem(len(local), tuple(edges), tuple(fields),
                           src.h_range, src.j_range, "physical")
    return PhysicalProblem(problem, embedding, float(chain_penalty), nested)


def lift_to_physical(code_configs, L: int) -> np.ndarray:
    return np.repeat(np.asarray(code_configs, dtype=np.int8), L, axis=-1)


def decode_chains(reads, embedding: Embedding, tie_rng=None):
    """Majority vote over each chain.

    Returns ``(code_reads, broken_fraction)``; ``code_reads`` is a ReadSet
    when ``reads`` is one, otherwise an array. ``broken_fraction`` is the
    share of (read, chain) pairs that were not unanimous.
    """
    configs = reads.configs if isinstance(reads, ReadSet) else np.atleast_2d(np.asarray(reads))
    L = embedding.chain_length
    if configs.shape[1] != embedding.m * L:
        raise DimensionError(f"read length {configs.shape[1]} != {embedding.m} chains x {L}")
    blocks = configs.reshape(len(configs), embedding.m, L)
    broken = float(np.mean(np.any(blocks != blocks[:, :, :1], axis=2))) if len(configs) else 0.0
    code = majority_vote(blocks, tie_rng)
    if isinstance(reads, ReadSet):
        return reads.with_configs(code, stage="code", broken_chain_fraction=broken), broken
    return code, broken


# -- embedding file ------------------------------------------------------------
#
#   #nqac-embedding v1
#   m <int>
#   L <int>
#   graph <rows> <cols> <shore>
#   mask_hash <hex>
#   mask <q> <q> ...        (may be empty)
#   chains
#   <q> <q> ... <q>         one chain per line, in chain order

def dumps_embedding(embedding: Embedding) -> str:
    g = embedding.graph
    lines = [
        "#nqac-embedding v1",
        f"m {embedding.m}",
        f"L {embedding.chain_length}",
        f"graph {g.rows} {g.cols} {g.shore}",
        f"mask_hash {g.mask_hash()}",
        "mask " + " ".join(map(str, sorted(g.mask))),
        "chains",
    ]
    lines += [" ".join(map(str, chain)) for chain in embedding.chains]
    return "\n".join(lines) + "\n"


def loads_embedding(text: str) -> Embedding:
    head, chains, in_chains = {}, [], False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if in_chains:
            chains.append(tuple(int(x) for x in line.split()))
        elif line == "chains":
            in_chains = True
        else:
            key, _, val = line.partition(" ")
            head[key] = val.split()
    try:
        rows, cols, shore = (int(x) for x in head["graph"])
        graph = build_chimera(rows, cols, shore, [int(x) for x in head.get("mask", [])])
        m, L = int(head["m"][0]), int(head["L"][0])
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed embedding file: {exc}") from exc
    if "mask_hash" in head and head["mask_hash"][0] != graph.mask_hash():
        raise InputError("mask hash does not match the listed mask")
    if len(chains) != m:
        raise DimensionError(f"header says m={m}, file lists {len(chains)} chains")
    if any(len(ch) != L for ch in chains):
        raise UnbalancedEmbeddingError(f"header says L={L} but chain lengths differ")
    return Embedding(tuple(chains), graph, source=f"K_{m}")


def write_embedding(path: str | os.PathLike, embedding: Embedding) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_embedding(embedding))


def read_embedding(path: str | os.PathLike) -> Embedding:
    with open(path) as fh:
        return loads_embedding(fh.read())

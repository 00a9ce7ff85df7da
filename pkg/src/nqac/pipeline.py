"""The full encode / sample / decode chain as one reusable sampler."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .chimera import ChimeraGraph, Embedding, PhysicalProblem, build_chimera, decode_chains, embed_complete, embed_problem
from .ising import IsingProblem, scale_problem
from .nesting import NestedProblem, decode_code_to_logical, nest
from .readset import ReadSet
from .samplers import DeviceModel, simulate_device


@dataclass
class PipelineResult:
    decoded: ReadSet
    nested: NestedProblem
    physical: PhysicalProblem
    broken_chain_fraction: float


def run_pipeline(logical: IsingProblem, *, alpha: float, C: int, gamma: float,
                 graph: ChimeraGraph, device: DeviceModel, n_reads: int,
                 chain_penalty: float = 1.0, embedding: Embedding | None = None,
                 embedding_seed=None, seed=None, rescale: bool = False,
                 embedding_id=None) -> PipelineResult:
    """scale -> nest -> embed -> simulate -> chain vote -> code vote.

    ``seed`` drives the device and both tie-breaking coins (three spawned
    streams); ``embedding_seed`` drives the embedding unless one is given.
    """
    dev_ss, chain_ss, code_ss = np.random.SeedSequence(seed).spawn(3)
    nested = nest(scale_problem(logical, alpha), C, gamma, rescale=rescale)
    if embedding is None:
        embedding = embed_complete(nested.problem.n_spins, graph, embedding_seed)
    physical = embed_problem(nested, embedding, chain_penalty)
    raw = simulate_device(physical, device, n_reads, dev_ss)
    code, broken = decode_chains(raw.configs, embedding, np.random.default_rng(chain_ss))
    decoded = decode_code_to_logical(code, C, np.random.default_rng(code_ss))
    prov = {
        "problem": logical.digest(),
        "sampler": "nqac-device",
        "seed": None if seed is None else int(seed),
        "embedding": embedding_id if embedding_id is not None else embedding_seed,
        "alpha": float(alpha),
        "C": int(C),
        "gamma": float(nested.gamma),
        "beta": device.beta_eff,
        "broken_chain_fraction": broken,
        "stage": "logical",
    }
    return PipelineResult(ReadSet(decoded, prov), nested, physical, broken)


class NQACSampler(BaseEstimator):
    """Sampler facade over :func:`run_pipeline`.

    Calling the instance as ``sampler(problem, n_reads, seed)`` returns
    decoded logical reads, so it plugs into
    :func:`nqac.bm.negative_phases`.
    """

    def __init__(self, C=1, gamma=1.0, alpha=1.0, chain_penalty=1.0, device=None,
                 graph_shape=(16, 16, 4), embedding_seed=0, rescale=False):
        self.C = C
        self.gamma = gamma
        self.alpha = alpha
        self.chain_penalty = chain_penalty
        self.device = device
        self.graph_shape = graph_shape
        self.embedding_seed = embedding_seed
        self.rescale = rescale

    def sample(self, problem: IsingProblem, n_reads: int, seed=None) -> ReadSet:
        graph = build_chimera(*self.graph_shape)
        device = self.device if self.device is not None else DeviceModel()
        result = run_pipeline(problem, alpha=self.alpha, C=self.C, gamma=self.gamma, graph=graph,
                              device=device, n_reads=n_reads, chain_penalty=self.chain_penalty,
                              embedding_seed=self.embedding_seed, seed=seed, rescale=self.rescale)
        self.broken_chain_fraction_ = result.broken_chain_fraction
        return result.decoded

    __call__ = sample

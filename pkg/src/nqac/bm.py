"""Fully connected Boltzmann machines with annealer-estimated negative phases.

Model energy is ``E(z) = sum_i b_i z_i + sum_{i<j} w_ij z_i z_j`` with
``P(z) ~ exp(-E(z))``. An annealer sampling at ``beta_eff`` reproduces the
model when programmed with ``h = b / beta_eff`` and ``J = w / beta_eff``.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import DimensionError, InputError
from .ising import (
    IsingProblem,
    as_configs,
    configs_to_index,
    gibbs_distribution,
    index_to_configs,
    loads_problem,
    dumps_problem,
)

_CHUNK = 1 << 16


@dataclass
class MomentVector:
    """First moments <z_i> and upper-triangle second moments <z_i z_j> (i < j, row-major)."""

    first: np.ndarray
    second: np.ndarray
    has_fields: bool = True

    @property
    def n_spins(self) -> int:
        return len(self.first)

    @property
    def vector(self) -> np.ndarray:
        """Gradient-space vector; first moments only when the model has fields."""
        return np.concatenate([self.first, self.second]) if self.has_fields else self.second

    def matrix(self) -> np.ndarray:
        n = self.n_spins
        M = np.eye(n)
        iu = np.triu_indices(n, 1)
        M[iu] = self.second
        M[(iu[1], iu[0])] = self.second
        return M


def _moments(Z: np.ndarray, w: np.ndarray):
    Zf = Z.astype(float)
    first = w @ Zf
    second_full = (Zf * w[:, None]).T @ Zf
    return first, second_full


def moments_from_configs(configs, weights=None, has_fields=True) -> MomentVector:
    Z = as_configs(configs)
    if len(Z) == 0:
        raise InputError("empty dataset")
    w = np.full(len(Z), 1.0 / len(Z)) if weights is None else np.asarray(weights, float) / np.sum(weights)
    first, full = _moments(Z, w)
    return MomentVector(first, full[np.triu_indices(Z.shape[1], 1)], has_fields)


def positive_phases(dataset) -> MomentVector:
    """Empirical data moments."""
    configs = getattr(dataset, "configs", dataset)
    return moments_from_configs(configs, getattr(dataset, "weights", None))


def exact_moments(problem: IsingProblem, beta: float) -> MomentVector:
    """Gibbs moments of ``problem`` at ``beta`` by full enumeration."""
    dist = gibbs_distribution(problem, beta)
    n = problem.n_spins
    first = np.zeros(n)
    full = np.zeros((n, n))
    for start in range(0, len(dist.probs), _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, len(dist.probs)))
        f, s = _moments(index_to_configs(idx, n), dist.probs[idx])
        first += f
        full += s
    has_fields = bool(np.any(problem.h != 0))
    return MomentVector(first, full[np.triu_indices(n, 1)], has_fields)


@dataclass
class BmModel:
    weights: np.ndarray
    biases: np.ndarray
    beta_eff: float = 1.0

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=float)
        self.biases = np.array(self.biases, dtype=float)
        n = len(self.biases)
        if self.weights.shape != (n, n):
            raise DimensionError(f"weights shape {self.weights.shape} != ({n}, {n})")
        if not np.allclose(self.weights, self.weights.T, rtol=0, atol=0):
            raise InputError("weights must be symmetric")
        if np.any(np.diag(self.weights) != 0):
            raise InputError("weights must have a zero diagonal")
        if not self.beta_eff > 0:
            raise InputError("beta_eff must be > 0")

    @classmethod
    def zeros(cls, n: int, beta_eff: float = 1.0) -> "BmModel":
        return cls(np.zeros((n, n)), np.zeros(n), beta_eff)

    @property
    def n_spins(self) -> int:
        return len(self.biases)

    def to_problem(self, h_range=(-2.0, 2.0), j_range=(-1.0, 1.0)) -> IsingProblem:
        """Annealer parameters h = b / beta_eff, J = w / beta_eff (range-checked)."""
        return IsingProblem.from_arrays(self.biases / self.beta_eff, np.triu(self.weights, 1) / self.beta_eff,
                                        h_range=h_range, j_range=j_range, label="logical")

    def unit_problem(self) -> IsingProblem:
        """The model itself as an unbounded Ising problem at unit temperature."""
        return IsingProblem.from_arrays(self.biases, np.triu(self.weights, 1),
                                        h_range=(-math.inf, math.inf), j_range=(-math.inf, math.inf),
                                        label="bm")

    @classmethod
    def from_problem(cls, problem: IsingProblem, beta_eff: float) -> "BmModel":
        return cls(beta_eff * problem.coupling_matrix, beta_eff * problem.h, beta_eff)

    def distribution(self) -> np.ndarray:
        return gibbs_distribution(self.unit_problem(), 1.0).probs


def negative_phases(model: BmModel, sampler="exact", n_reads: int = 1000, seed=None,
                    h_range=(-2.0, 2.0), j_range=(-1.0, 1.0)) -> MomentVector:
    """Model moments, analytic (``sampler="exact"``) or estimated from reads.

    A callable ``sampler(problem, n_reads, seed) -> ReadSet`` receives the
    annealer problem (``h = b/beta_eff``, ``J = w/beta_eff``) and must return
    logical reads at ``beta_eff``; range violations of the mapping raise.
    """
    problem = model.to_problem(h_range, j_range)
    has_fields = bool(np.any(model.biases != 0))
    if isinstance(sampler, str):
        if sampler != "exact":
            raise InputError(f"unknown sampler {sampler!r}")
        mv = exact_moments(problem, model.beta_eff)
        mv.has_fields = has_fields
        return mv
    reads = sampler(problem, n_reads, seed)
    return moments_from_configs(reads.configs, reads.weights, has_fields)


def update_step(model: BmModel, positive: MomentVector, negative: MomentVector,
                learning_rate: float) -> BmModel:
    """One likelihood-ascent step.

    With ``E = b.z + w.zz`` the log-likelihood gradient is
    ``<.>_model - <.>_data``, so ``b += lr (<z>_T - <z>_data)`` and
    ``w += lr (<zz>_T - <zz>_data)``.
    """
    n = model.n_spins
    if positive.n_spins != n or negative.n_spins != n:
        raise DimensionError("moment vectors do not match the model size")
    db = learning_rate * (negative.first - positive.first)
    dw_upper = learning_rate * (negative.second - positive.second)
    dW = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    dW[iu] = dw_upper
    dW = dW + dW.T
    return BmModel(model.weights + dW, model.biases + db, model.beta_eff)


def empirical_distribution(configs, n_spins: int) -> np.ndarray:
    idx = configs_to_index(as_configs(configs, n_spins))
    return np.bincount(idx, minlength=2 ** n_spins) / len(idx)


class BoltzmannMachine(BaseEstimator):
    """Fully visible Boltzmann machine trained by moment matching.

    Parameters
    ----------
    n_iter : int
        Number of gradient steps.
    learning_rate : float
    beta_eff : float
        Effective inverse temperature of the sampler used for negative phases.
    sampler : "exact" or callable
        See :func:`negative_phases`.
    n_reads : int
        Reads per negative phase for sampled backends.
    fit_biases : bool
        Also learn the biases (the annealer experiments use zero fields).
    random_state : int or None

    Attributes
    ----------
    model_ : BmModel
    tv_history_ : list of float
        Total variation between model and data distribution after each
        step (only when the model is small enough to enumerate).
    """

    def __init__(self, n_iter=100, learning_rate=0.1, beta_eff=1.0, sampler="exact",
                 n_reads=1000, fit_biases=True, random_state=None):
        self.n_iter = n_iter
        self.learning_rate = learning_rate
        self.beta_eff = beta_eff
        self.sampler = sampler
        self.n_reads = n_reads
        self.fit_biases = fit_biases
        self.random_state = random_state

    def fit(self, X, y=None):
        X = as_configs(X)
        n = X.shape[1]
        pos = positive_phases(X)
        if not self.fit_biases:
            pos.first = np.zeros(n)
        rng = np.random.default_rng(self.random_state)
        model = BmModel.zeros(n, self.beta_eff)
        track = n <= 16
        data_p = empirical_distribution(X, n) if track else None
        self.tv_history_ = []
        for _ in range(self.n_iter):
            neg = negative_phases(model, self.sampler, self.n_reads, int(rng.integers(2 ** 31)),
                                  h_range=(-math.inf, math.inf), j_range=(-math.inf, math.inf))
            if not self.fit_biases:
                neg.first = np.zeros(n)
            model = update_step(model, pos, neg, self.learning_rate)
            if track:
                self.tv_history_.append(0.5 * float(np.abs(model.distribution() - data_p).sum()))
        self.model_ = model
        return self

    @property
    def weights_(self):
        return self.model_.weights

    @property
    def biases_(self):
        return self.model_.biases

    def score_samples(self, X):
        """Log-likelihood of each sample under the fitted model."""
        X = as_configs(X, self.model_.n_spins)
        p = self.model_.distribution()
        return np.log(p[configs_to_index(X)])


# -- model file: instance format, b and w stored as h and J, beta_eff in [meta]

def dumps_model(model: BmModel) -> str:
    return dumps_problem(model.unit_problem(), meta={"beta_eff": repr(float(model.beta_eff))})


def loads_model(text: str) -> BmModel:
    problem, meta, _ = loads_problem(text)
    if "beta_eff" not in meta:
        raise InputError("model file lacks beta_eff")
    return BmModel(problem.coupling_matrix.copy(), problem.h.copy(), float(meta["beta_eff"]))


def write_model(path: str | os.PathLike, model: BmModel) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def read_model(path: str | os.PathLike) -> BmModel:
    with open(path) as fh:
        return loads_model(fh.read())

"""Nested quantum annealing correction on a simulated Chimera annealer."""
from .analysis import (
    BoostFit, Curve, EffectiveTemperatureEstimator, data_collapse, fit_effective_beta,
    fit_power_law, gradient_overlap, repetition_correct, success_probability,
)
from .bm import BoltzmannMachine, BmModel, exact_moments, negative_phases, positive_phases, update_step
from .chimera import ChimeraGraph, Embedding, build_chimera, decode_chains, embed_complete, embed_problem, validate_embedding
from .exceptions import CapacityError, InputError, NQACError
from .ising import IsingProblem, antiferromagnetic_complete, energy, energy_histogram, gibbs_distribution, random_complete_instance
from .nesting import NestedProblem, decode_code_to_logical, nest, resource_count
from .pipeline import NQACSampler, run_pipeline
from .readset import ReadSet
from .samplers import DeviceModel, sample_exact, sample_mcmc, simulate_device

__version__ = "0.1.0"


__all__ = [
    "BmModel",
    "BoltzmannMachine",
    "BoostFit",
    "CapacityError",
    "ChimeraGraph",
    "Curve",
    "DeviceModel",
    "EffectiveTemperatureEstimator",
    "Embedding",
    "InputError",
    "IsingProblem",
    "NQACError",
    "NQACSampler",
    "NestedProblem",
    "ReadSet",
    "antiferromagnetic_complete",
    "build_chimera",
    "data_collapse",
    "decode_chains",
    "decode_code_to_logical",
    "embed_complete",
    "embed_problem",
    "energy",
    "energy_histogram",
    "exact_moments",
    "fit_effective_beta",
    "fit_power_law",
    "gibbs_distribution",
    "gradient_overlap",
    "negative_phases",
    "nest",
    "positive_phases",
    "random_complete_instance",
    "repetition_correct",
    "resource_count",
    "run_pipeline",
    "sample_exact",
    "sample_mcmc",
    "simulate_device",
    "success_probability",
    "update_step",
    "validate_embedding",
]

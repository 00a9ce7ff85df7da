"""Success curves, effective temperature fits, gradient overlap, data collapse and power-law fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator, make_smoothing_spline
from scipy.optimize import brentq
from sklearn.base import BaseEstimator

from .exceptions import CapacityError, DegenerateInputError, InputError, ReferenceValueError
from .ising import (
    EnergyHistogram,
    IsingProblem,
    align_histograms,
    all_energies,
    configs_to_index,
    energy_histogram,
    histogram_from_energies,
)
from .nesting import resource_count
from .readset import ReadSet

# exact thermal histograms are only computed up to this many logical spins
FIT_CAP = 20

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# -- success probability -------------------------------------------------------

@dataclass(frozen=True)
class SuccessSummary:
    per_embedding: dict
    median: float
    p25: float
    p75: float


def success_probability(decoded, ground) -> SuccessSummary:
    """Fraction of reads in the ground set, per embedding, then percentiles.

    ``decoded`` is a ReadSet or an iterable of ReadSets; reads are grouped
    by their ``embedding`` provenance entry.
    """
    readsets = [decoded] if isinstance(decoded, ReadSet) else list(decoded)
    ground = np.atleast_2d(np.asarray(ground))
    if ground.size == 0:
        raise InputError("ground set is empty")
    targets = configs_to_index(ground)
    hits: dict = {}
    for rs in readsets:
        if len(rs) == 0:
            continue
        if rs.n_spins != ground.shape[1]:
            raise InputError(f"reads have {rs.n_spins} spins, ground states {ground.shape[1]}")
        ok = np.isin(configs_to_index(rs.configs), targets)
        w = np.ones(len(rs)) if rs.weights is None else rs.weights
        key = rs.provenance.get("embedding")
        s, t = hits.get(key, (0.0, 0.0))
        hits[key] = (s + float(w[ok].sum()), t + float(w.sum()))
    if not hits:
        raise InputError("no reads to score")
    per = {k: s / t for k, (s, t) in hits.items()}
    vals = np.array(list(per.values()))
    return SuccessSummary(per, float(np.median(vals)),
                          float(np.percentile(vals, 25)), float(np.percentile(vals, 75)))


def parallel_copies(N: int, C: int, C_max: int) -> int:
    if C > C_max:
        raise InputError(f"C={C} exceeds C_max={C_max}")
    return resource_count(N, C_max).physical_qubits // resource_count(N, C).physical_qubits


def repetition_correct(P_C: float, C: int, N: int, C_max: int) -> float:
    """Probability of at least one success among the copies that fit in the C_max footprint."""
    if not 0.0 <= P_C <= 1.0:
        raise InputError(f"probability out of range: {P_C}")
    return 1.0 - (1.0 - P_C) ** parallel_copies(N, C, C_max)


# -- effective temperature -------------------------------------------------------

def total_variation(p: EnergyHistogram, q: EnergyHistogram) -> float:
    _, a, b = align_histograms(p, q)
    return 0.5 * float(np.abs(a - b).sum())


class ThermalHistogram:
    """Level structure of a logical problem; yields p_T(E, beta) cheaply."""

    def __init__(self, problem: IsingProblem, cap: int = FIT_CAP):
        if problem.n_spins > cap:
            raise CapacityError(f"exact thermal histogram capped at {cap} spins, got {problem.n_spins}")
        self.problem = problem
        base = histogram_from_energies(all_energies(problem))
        self.levels = base.levels
        self.degeneracy = base.masses  # fraction of the 2^n states at each level
        self.tolerance = base.energy_tolerance

    def at(self, beta: float) -> EnergyHistogram:
        return EnergyHistogram(self.levels, self._masses(self.levels, self.degeneracy, beta), self.tolerance)

    @staticmethod
    def _masses(levels, degeneracy, beta):
        w = degeneracy * np.exp(-beta * (levels - levels.min()))
        return w / w.sum()


@dataclass(frozen=True)
class BetaFit:
    beta: float
    distance: float


def _golden_section(f, a: float, b: float, tol: float) -> float:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fit_effective_beta(empirical: EnergyHistogram, logical: IsingProblem | ThermalHistogram,
                       beta_range=(0.0, 20.0), n_grid: int = 200, tol: float = 1e-4) -> BetaFit:
    """beta minimising the total variation distance between the empirical and thermal histograms.

    Coarse grid over ``beta_range`` then golden-section refinement to
    ``tol`` around the best grid point.
    """
    thermal = logical if isinstance(logical, ThermalHistogram) else ThermalHistogram(logical)
    if len(empirical.levels) == 0:
        raise InputError("empty histogram")
    levels, emp, deg = align_histograms(empirical, EnergyHistogram(thermal.levels, thermal.degeneracy))
    lo_e = levels.min()

    def distance(beta: float) -> float:
        w = deg * np.exp(-beta * (levels - lo_e))
        return 0.5 * float(np.abs(emp - w / w.sum()).sum())

    lo, hi = float(beta_range[0]), float(beta_range[1])
    grid = np.linspace(lo, hi, int(n_grid))
    vals = np.array([distance(b) for b in grid])
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    beta = _golden_section(distance, a, b, tol) if b > a else grid[k]
    d = distance(beta)
    if vals[k] < d:
        beta, d = grid[k], vals[k]
    return BetaFit(float(beta), float(d))


class EffectiveTemperatureEstimator(BaseEstimator):
    """Estimator wrapper around :func:`fit_effective_beta`.

    ``fit(X)`` takes decoded logical samples of shape (n_samples, n_spins)
    and sets ``beta_`` and ``distance_``.
    """

    def __init__(self, problem=None, beta_range=(0.0, 20.0), n_grid=200, tol=1e-4):
        self.problem = problem
        self.beta_range = beta_range
        self.n_grid = n_grid
        self.tol = tol

    def fit(self, X, y=None, sample_weight=None):
        if self.problem is None:
            raise InputError("problem must be set before fit")
        reads = ReadSet(np.asarray(X), weights=sample_weight)
        self.histogram_ = energy_histogram(reads, self.problem)
        res = fit_effective_beta(self.histogram_, self.problem, self.beta_range, self.n_grid, self.tol)
        self.beta_ = res.beta
        self.distance_ = res.distance
        return self

    def score(self, X, y=None):
        hist = energy_histogram(ReadSet(np.asarray(X)), self.problem)
        return -total_variation(hist, ThermalHistogram(self.problem).at(self.beta_))


# -- gradient overlap ------------------------------------------------------------

def gradient_overlap(empirical, exact) -> float:
    """Cosine of the angle between two moment vectors."""
    a = np.asarray(getattr(empirical, "vector", empirical), dtype=float).ravel()
    b = np.asarray(getattr(exact, "vector", exact), dtype=float).ravel()
    if a.shape != b.shape:
        raise InputError(f"moment vectors differ in shape: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateInputError("zero-norm moment vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


# -- curves, data collapse, power law ------------------------------------------------

@dataclass
class Curve:
    """Median and quartiles of a metric M_C(alpha) at one nesting level.

    ``kind`` is ``"success"`` for P_C(alpha) or ``"beta"`` for beta_{C,eff}(alpha).
    """

    C: int
    alpha: np.ndarray
    median: np.ndarray
    p25: np.ndarray
    p75: np.ndarray
    kind: str = "success"

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float) for a in (self.alpha, self.median, self.p25, self.p75)]
        if len({a.shape for a in arrs}) != 1:
            raise InputError("curve arrays differ in length")
        order = np.argsort(arrs[0])
        self.alpha, self.median, self.p25, self.p75 = (a[order] for a in arrs)
        if np.any(self.alpha <= 0):
            raise InputError("alpha values must be positive")

    @classmethod
    def from_samples(cls, C, alpha, samples, kind="success") -> "Curve":
        """Curve from per-alpha lists of values (embeddings or instances)."""
        med = [np.median(s) for s in samples]
        return cls(C, alpha, med, [np.percentile(s, 25) for s in samples],
                   [np.percentile(s, 75) for s in samples], kind)


def SuccessCurve(C, alpha, median, p25, p75) -> Curve:
    return Curve(C, alpha, median, p25, p75, "success")


def BetaCurve(C, alpha, median, p25, p75) -> Curve:
    return Curve(C, alpha, median, p25, p75, "beta")


def _interpolant(x, y):
    """Cubic smoothing spline (GCV-chosen penalty); PCHIP below 5 points."""
    if len(x) >= 5:
        return make_smoothing_spline(x, y)
    if len(x) >= 2:
        return PchipInterpolator(x, y)
    raise InputError("need at least two points per curve")


def _first_crossing(f, lo: float, hi: float, target: float, n: int = 2001):
    xs = np.linspace(lo, hi, n)
    g = f(xs) - target
    if g[0] == 0:
        return float(xs[0])
    idx = np.nonzero(np.sign(g[1:]) != np.sign(g[:-1]))[0]
    if len(idx) == 0:
        return None
    k = idx[0]
    if g[k + 1] == 0:
        return float(xs[k + 1])
    return float(brentq(lambda x: float(f(x)) - target, xs[k], xs[k + 1], xtol=1e-12))


def default_reference(curves: Sequence[Curve]) -> float:
    """Midpoint between the floor and the maximum of the C=1 median curve."""
    base = next((c for c in curves if c.C == 1), None)
    if base is None:
        raise InputError("a C=1 curve is required")
    return 0.5 * (float(np.max(base.median)) + float(np.min(base.median)))


@dataclass
class BoostFit:
    C: np.ndarray
    mu: np.ndarray
    mu_low: np.ndarray
    mu_high: np.ndarray
    M0: float
    alpha_mid: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    eta: float = float("nan")
    eta_err: float = float("nan")
    eta_degenerate: bool = True

    def as_rows(self) -> list:
        return [(int(c), float(m), float(lo), float(hi))
                for c, m, lo, hi in zip(self.C, self.mu, self.mu_low, self.mu_high)]


def data_collapse(curves: Sequence[Curve], M0: float | None = None) -> BoostFit:
    """Energy boosts mu_C from the alpha at which each curve reaches M0.

    Median, 25th and 75th percentile points are each interpolated in
    log10(alpha); ``mu_C = alpha_1 / alpha_C`` on the median curves, and
    the percentile curves give the error bar ends. A percentile curve that
    never reaches M0 pins that bar end to mu_C (recorded in ``notes``).
    """
    curves = sorted(curves, key=lambda c: c.C)
    if len(curves) < 1 or curves[0].C != 1:
        raise InputError("data collapse needs a C=1 curve")
    M0 = default_reference(curves) if M0 is None else float(M0)

    def crossing(curve: Curve, values) -> float | None:
        x = np.log10(curve.alpha)
        f = _interpolant(x, np.asarray(values, dtype=float))
        return _first_crossing(f, x[0], x[-1], M0)

    x_mid, x_lo, x_hi, notes = {}, {}, {}, []
    for curve in curves:
        x = crossing(curve, curve.median)
        if x is None:
            raise ReferenceValueError(
                f"M0={M0:.6g} not reached by the median curve for C={curve.C} "
                f"(range {np.min(curve.median):.6g}..{np.max(curve.median):.6g})")
        x_mid[curve.C] = x
        x_lo[curve.C] = crossing(curve, curve.p25)
        x_hi[curve.C] = crossing(curve, curve.p75)

    Cs, mu, mu_lo, mu_hi = [], [], [], []
    for curve in curves:
        C = curve.C
        m = 10.0 ** (x_mid[1] - x_mid[C])
        ends = []
        for xs, name in ((x_lo, "25th"), (x_hi, "75th")):
            if xs[1] is None or xs[C] is None:
                notes.append(f"C={C}: {name} percentile curve misses M0; bar end set to mu")
                ends.append(m)
            else:
                ends.append(10.0 ** (xs[1] - xs[C]))
        if C == 1:
            m, ends = 1.0, [1.0, 1.0]
        Cs.append(C)
        mu.append(m)
        mu_lo.append(min(m, *ends))
        mu_hi.append(max(m, *ends))
    return BoostFit(np.array(Cs), np.array(mu), np.array(mu_lo), np.array(mu_hi), M0,
                    {c: 10.0 ** x for c, x in x_mid.items()}, notes)


@dataclass(frozen=True)
class PowerLawFit:
    eta: float
    eta_err: float
    n_points: int
    degenerate: bool


def fit_power_law(C, mu) -> PowerLawFit:
    """Slope of log(mu) against log(C) through the origin (mu_1 = 1).

    ``eta_err`` is the residual standard error of the slope; with a
    single informative point (C > 1) it is undefined and ``degenerate``
    is set.
    """
    C = np.asarray(C, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if C.shape != mu.shape:
        raise InputError("C and mu differ in length")
    if len(np.unique(C)) < 2:
        raise InputError("power-law fit needs at least two distinct C values")
    if np.any(mu <= 0) or np.any(C < 1):
        raise InputError("need mu > 0 and C >= 1")
    x, y = np.log(C), np.log(mu)
    sxx = float(x @ x)
    eta = float(x @ y) / sxx
    n_inf = int(np.sum(C > 1))
    dof = n_inf - 1
    if dof < 1:
        return PowerLawFit(eta, float("nan"), n_inf, True)
    resid = y[C > 1] - eta * x[C > 1]
    err = math.sqrt(float(resid @ resid) / dof / sxx)
    return PowerLawFit(eta, err, n_inf, False)


def attach_power_law(boost: BoostFit) -> BoostFit:
    """Fill ``eta`` fields of a BoostFit in place; a single level is flagged unfittable."""
    try:
        fit = fit_power_law(boost.C, boost.mu)
    except InputError as exc:
        boost.notes.append(f"power law not fitted: {exc}")
        boost.eta, boost.eta_err, boost.eta_degenerate = float("nan"), float("nan"), True
        return boost
    boost.eta, boost.eta_err, boost.eta_degenerate = fit.eta, fit.eta_err, fit.degenerate
    return boost

"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the per-criterion
lines are printed in the terminal summary. ``python tests/test_acceptance.py``
does the same.
"""
import itertools
import math
import time

import numpy as np
import pytest

from nqac.analysis import (
    Curve,
    data_collapse,
    fit_effective_beta,
    fit_power_law,
    gradient_overlap,
    parallel_copies,
    repetition_correct,
    success_probability,
)
from nqac.bm import exact_moments, moments_from_configs
from nqac.chimera import Embedding, build_chimera, embed_complete, validate_embedding
from nqac.exceptions import ChainOverlapError, DisconnectedChainError, MissingCouplerError
from nqac.harness import ExperimentConfig, run_optimization_experiment
from nqac.ising import (
    IsingProblem,
    antiferromagnetic_complete,
    configs_to_index,
    energy_histogram,
    enumerate_ground_states,
    gibbs_distribution,
    random_complete_instance,
    scale_problem,
)
from nqac.nesting import decode_code_to_logical, exact_decoded_distribution, nest, resource_count
from nqac.pipeline import run_pipeline
from nqac.samplers import DeviceModel, sample_exact, sample_mcmc

RESULTS = []


def report(number, title, ok, detail, started):
    line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail} ({time.perf_counter() - started:.1f}s)"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_01_resource_formulas():
    t = time.perf_counter()
    a, b = resource_count(4, 1), resource_count(4, 13)
    ok = (a.chain_length, a.physical_qubits) == (2, 8) and (b.chain_length, b.physical_qubits) == (14, 728)
    report(1, "resource formulas", ok,
           f"(4,1) -> L={a.chain_length}, {a.physical_qubits} qubits; "
           f"(4,13) -> L={b.chain_length}, {b.physical_qubits} qubits", t)


def test_02_random_sampling_floor():
    t = time.perf_counter()
    k4 = antiferromagnetic_complete(4)
    _, ground = enumerate_ground_states(k4)
    vals = {}
    for C in (1, 2):
        code = sample_exact(nest(k4, C, 1.0).problem, 0.0, 100_000, C)  # beta = 0: uniform
        decoded = code.with_configs(decode_code_to_logical(code.configs, C, np.random.default_rng(C)))
        vals[C] = success_probability(decoded, ground).median
    ok = all(abs(v - 0.375) <= 0.01 for v in vals.values())
    report(2, "uniform sampler floor", ok,
           ", ".join(f"C={C}: P={v:.4f}" for C, v in vals.items()) + " (target 0.375 +- 0.01)", t)


def test_03_nesting_counts():
    t = time.perf_counter()
    rng = np.random.default_rng(0)
    checked, bad = 0, []
    for N in range(2, 9):
        for C in range(1, 5):
            for density in (1.0, 0.5):
                pairs = [(i, j) for i, j in itertools.combinations(range(N), 2) if rng.random() < density]
                fields = tuple((i, float(rng.uniform(-0.5, 0.5))) for i in range(N) if rng.random() < 0.5)
                p = IsingProblem(N, tuple((i, j, float(rng.uniform(-1, 1))) for i, j in pairs), fields)
                nested = nest(p, C, 0.5)
                expect = (C * C * len(pairs) + N * C * (C - 1) // 2, N * C * (C - 1) // 2, C * len(fields))
                got = (len(nested.problem.edges), len(nested.penalty_edges), len(nested.problem.fields))
                checked += 1
                if got != expect:
                    bad.append((N, C, got, expect))
    report(3, "nesting counts", not bad, f"{checked} (N, C, graph) cases, {len(bad)} mismatches", t)


def test_04_embedding_validity():
    t = time.perf_counter()
    g = build_chimera(16, 16)
    rng = np.random.default_rng(4)
    failures = 0
    for s in range(100):
        m = int(rng.integers(1, 53))
        try:
            validate_embedding(embed_complete(m, g, s))
        except Exception:
            failures += 1
    rejected = {}
    emb = embed_complete(12, g, 7)
    chains = list(emb.chains)
    overlap = chains.copy()
    overlap[1] = (chains[0][0],) + chains[1][1:]
    used = set(emb.qubits)
    far = next(q for q in g.available if q not in used and not any(g.has_edge(q, x) for x in chains[0]))
    broken = chains.copy()
    broken[0] = chains[0][:-1] + (far,)
    lone = (Embedding(((g.index(0, 0, 0, 0),), (g.index(5, 5, 0, 1),)), g))
    for name, bad, exc in (("overlap", Embedding(tuple(overlap), g), ChainOverlapError),
                           ("disconnected", Embedding(tuple(broken), g), DisconnectedChainError),
                           ("missing coupler", lone, MissingCouplerError)):
        try:
            validate_embedding(bad)
            rejected[name] = False
        except exc:
            rejected[name] = True
    ok = failures == 0 and all(rejected.values())
    report(4, "embedding validity", ok,
           f"100 random K_m (m<=52) on 16x16: {100 - failures} valid; corrupted rejected: {rejected}", t)


@pytest.mark.slow
def test_05_mcmc_correctness():
    t = time.perf_counter()
    schedule = [(1.0, s) for s in (1, 2, 4, 8, 16)]  # doubling sweeps, 31 in total
    tvs = []
    for k in range(10):
        p = random_complete_instance(8, 100 + k)
        reads = sample_mcmc(p, schedule, 200_000, k)
        emp = np.bincount(configs_to_index(reads.configs), minlength=256) / len(reads)
        tvs.append(0.5 * np.abs(emp - gibbs_distribution(p, 1.0).probs).sum())
    ok = max(tvs) <= 0.01
    report(5, "MCMC vs exact Gibbs", ok,
           f"10 random 8-spin instances at beta=1, max TV={max(tvs):.4f}, median {np.median(tvs):.4f} "
           f"(bound 0.01)", t)


def test_06_beta_recovery():
    t = time.perf_counter()
    p = random_complete_instance(8, 2024)
    fits = {}
    for beta in (1.0, 0.0):
        reads = sample_exact(p, beta, 100_000, int(beta * 10) + 1)
        fits[beta] = fit_effective_beta(energy_histogram(reads, p), p).beta
    ok = abs(fits[1.0] - 1.0) <= 0.02 and abs(fits[0.0]) <= 0.02
    report(6, "beta recovery", ok,
           f"beta*=1 -> {fits[1.0]:.4f} (+-2%), beta*=0 -> {fits[0.0]:.4f} (+-0.02)", t)


def _collapse_curves(mu, noise, seed):
    rng = np.random.default_rng(seed)
    alpha = np.logspace(-2.5, 0, 25)

    def p1(a):
        return 0.375 + 0.6 / (1 + np.exp(-3.0 * (np.log10(a) + 1.2)))

    curves = []
    for C, m in ((1, 1.0), (2, mu)):
        y = p1(m * alpha) + noise * rng.standard_normal(len(alpha))
        curves.append(Curve(C, alpha, y, y - 0.03, y + 0.03))
    return curves


def test_07_collapse_recovery():
    t = time.perf_counter()
    rows, ok = [], True
    for mu in (2.0, 4.0):
        clean = data_collapse(_collapse_curves(mu, 0.0, 0)).mu[1]
        # 0.005 ~ standard error of a median over 25 embeddings x 1000 reads at P ~ 0.5
        noisy = [data_collapse(_collapse_curves(mu, 0.005, s)).mu[1] for s in range(10)]
        sweep = [data_collapse(_collapse_curves(mu, 0.0, 0), M0).mu[1] for M0 in np.linspace(0.55, 0.8, 6)]
        spread = max(sweep) / min(sweep) - 1
        worst_noisy = max(abs(v / mu - 1) for v in noisy)
        ok &= abs(clean / mu - 1) <= 0.01 and worst_noisy <= 0.05 and spread <= 0.01
        rows.append(f"mu={mu:g}: clean {clean:.4f}, noise 0.005 worst of 10 {worst_noisy:.2%}, M0 spread {spread:.2%}")
    report(7, "data collapse recovery", ok, "; ".join(rows), t)


def test_08_power_law():
    t = time.perf_counter()
    C = np.arange(1, 8)
    exact = fit_power_law(C, C ** 0.68).eta
    rng = np.random.default_rng(8)
    noisy = fit_power_law(C, C ** 0.68 * np.exp(0.02 * rng.standard_normal(len(C))))
    ok = abs(exact - 0.68) <= 0.02 and abs(noisy.eta - 0.68) <= 0.02
    report(8, "power-law fit", ok,
           f"eta={exact:.4f} exact data, {noisy.eta:.4f} +- {noisy.eta_err:.4f} with 2% noise", t)


@pytest.mark.slow
def test_09_boost_ordering(tmp_path):
    t = time.perf_counter()
    k4 = antiferromagnetic_complete(4)
    gi = configs_to_index(enumerate_ground_states(k4)[1])
    beta = 2.0
    grid = np.logspace(-1.5, -0.5, 8)
    worst = np.inf
    for a in grid:
        s = scale_problem(k4, a)
        p1 = gibbs_distribution(s, beta).probs[gi].sum()
        p2 = exact_decoded_distribution(gibbs_distribution(nest(s, 2, 1.0).problem, beta), 2)[gi].sum()
        worst = min(worst, p2 - p1)
    exact_ok = worst >= 0

    cfg = ExperimentConfig(
        name="k4-boost", seed=9, instances={"source": "antiferromagnetic", "N": 4},
        alphas=[float(a) for a in np.logspace(-2, -0.5, 6)], C=[1, 2, 3],
        gamma={"mode": "fixed", "value": 1.0}, embeddings=20, reads=200,
        graph={"rows": 4, "cols": 4},
        device={"beta_phys": 2.0, "control_noise_sigma": 0.03},
        output=str(tmp_path / "boost"))
    summary = run_optimization_experiment(cfg).summary
    mu = [summary["mu"][str(C)] for C in (1, 2, 3)] if "mu" in summary else []
    sim_ok = len(mu) == 3 and mu[0] < mu[1] < mu[2]
    report(9, "boost ordering", exact_ok and sim_ok,
           f"exact Gibbs beta={beta:g}: min(P_2 - P_1) over mid-alpha grid = {worst:.4f}; "
           f"simulator sigma=0.03, 20 seeds: mu_C = {[round(m, 3) for m in mu]}", t)


def test_10_gradient_overlap():
    t = time.perf_counter()
    k8 = random_complete_instance(8, 10)
    reads = sample_exact(k8, 1.0, 100_000, 0)
    exact_ov = gradient_overlap(moments_from_configs(reads.configs, has_fields=False), exact_moments(k8, 1.0))

    graph = build_chimera(16, 16)
    device = DeviceModel(beta_phys=3.0, control_noise_sigma=0.0, anneal_sweeps=500, hold_sweeps=500)
    pipe = []
    for k in range(2):
        p = random_complete_instance(8, 20 + k)
        res = run_pipeline(p, alpha=0.2, C=1, gamma=1.0, graph=graph, device=device,
                           n_reads=20_000, embedding_seed=k, seed=k)
        fit = fit_effective_beta(energy_histogram(res.decoded, p), p)
        emp = moments_from_configs(res.decoded.configs, has_fields=False)
        pipe.append((fit.beta, gradient_overlap(emp, exact_moments(p, fit.beta))))
    ok = exact_ov >= 0.999 and all(ov >= 0.99 for _, ov in pipe)
    report(10, "gradient overlap", ok,
           f"exact samples {exact_ov:.5f} (>=0.999); pipeline sigma=0 K_8: "
           + ", ".join(f"beta_fit={b:.3f} overlap={ov:.5f}" for b, ov in pipe) + " (>=0.99)", t)


def test_11_repetition():
    t = time.perf_counter()
    M = parallel_copies(4, 2, 13)
    checks = [
        M == 30,
        parallel_copies(4, 13, 13) == 1,
        parallel_copies(4, 1, 13) == 728 // 8,
        math.isclose(repetition_correct(0.2, 2, 4, 13), 1 - 0.8 ** 30),
        repetition_correct(0.0, 2, 4, 13) == 0.0,
        repetition_correct(1.0, 3, 4, 13) == 1.0,
    ]
    report(11, "repetition formula", all(checks), f"M_2 = {M} for N=4, C_max=13; {sum(checks)}/6 unit checks", t)


def test_12_end_to_end_determinism(tmp_path):
    t = time.perf_counter()
    base = dict(name="k4-det", seed=12, instances={"source": "antiferromagnetic", "N": 4},
                alphas=[0.05, 0.15, 0.4, 1.0], C=[1, 2, 3], embeddings=3, reads=200,
                graph={"rows": 4, "cols": 4}, device={"beta_phys": 2.0, "anneal_sweeps": 300, "hold_sweeps": 300})
    outs = [run_optimization_experiment(ExperimentConfig(**base, output=str(tmp_path / d))).output
            for d in ("a", "b")]
    csvs = sorted(p.name for p in outs[0].glob("*.csv"))
    same = [(outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in csvs]
    report(12, "end-to-end determinism", bool(csvs) and all(same),
           f"{sum(same)}/{len(csvs)} CSVs byte-identical across two runs", t)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))

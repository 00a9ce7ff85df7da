import numpy as np
import pytest
from scipy import stats

from nqac.chimera import build_chimera, embed_complete, embed_problem
from nqac.exceptions import CapacityError, InputError
from nqac.ising import (
    IsingProblem,
    configs_to_index,
    enumerate_ground_states,
    gibbs_distribution,
    random_complete_instance,
    scale_problem,
)
from nqac.nesting import nest
from nqac.readset import ReadSet, dumps_readset, loads_readset, read_readset, write_readset
from nqac.samplers import (
    DeviceModel,
    anneal_schedule,
    color_classes,
    perturb,
    sample_exact,
    sample_mcmc,
    simulate_device,
)


def tv(counts, probs):
    return 0.5 * np.abs(counts / counts.sum() - probs).sum()


class TestExact:
    def test_chi_square(self):
        p = random_complete_instance(4, 2)
        reads = sample_exact(p, 0.8, 50000, 0)
        counts = np.bincount(configs_to_index(reads.configs), minlength=16)
        probs = gibbs_distribution(p, 0.8).probs
        assert stats.chisquare(counts, probs * counts.sum()).pvalue > 1e-3

    def test_deterministic(self, k4):
        a = sample_exact(k4, 1.0, 100, 7)
        assert np.array_equal(a.configs, sample_exact(k4, 1.0, 100, 7).configs)
        assert a.provenance["sampler"] == "exact" and a.provenance["seed"] == 7

    def test_cap(self):
        with pytest.raises(CapacityError):
            sample_exact(IsingProblem(26), 1.0, 10)


class TestMcmc:
    def test_color_classes_independent(self):
        for p in (random_complete_instance(6, 0), embed_problem(
                nest(random_complete_instance(4, 1), 2, 1.0),
                embed_complete(8, build_chimera(4, 4), 0)).problem):
            classes = color_classes(p)
            label = np.empty(p.n_spins, int)
            for k, cls in enumerate(classes):
                label[cls] = k
            assert all(label[i] != label[j] for i, j, _ in p.edges)
            assert sorted(np.concatenate(classes).tolist()) == list(range(p.n_spins))

    def test_bipartite_uses_two_colours(self):
        phys = embed_problem(nest(random_complete_instance(4, 1), 1, 1.0),
                             embed_complete(4, build_chimera(2, 2), 0)).problem
        assert len(color_classes(phys)) == 2

    def test_matches_gibbs(self):
        p = random_complete_instance(5, 4)
        reads = sample_mcmc(p, [(0.7, 30)], 40000, 1)
        counts = np.bincount(configs_to_index(reads.configs), minlength=32).astype(float)
        assert tv(counts, gibbs_distribution(p, 0.7).probs) < 0.015

    def test_fields(self):
        p = IsingProblem(3, ((0, 1, 0.5),), ((0, 1.0), (2, -0.5)))
        reads = sample_mcmc(p, [(1.0, 30)], 40000, 2)
        counts = np.bincount(configs_to_index(reads.configs), minlength=8).astype(float)
        assert tv(counts, gibbs_distribution(p, 1.0).probs) < 0.015

    def test_bad_schedule(self, k4):
        for bad in ([], [(-1.0, 5)], [(1.0, 0)]):
            with pytest.raises(InputError):
                sample_mcmc(k4, bad, 10)

    def test_anneal_schedule(self):
        s = anneal_schedule(2.0, 100, 50, steps=10)
        assert s[-1] == (2.0, 50)
        assert len(s) == 11 and s[0][0] == pytest.approx(0.1)
        assert all(a[0] <= b[0] for a, b in zip(s, s[1:]))


class TestDevice:
    def test_defaults(self):
        d = DeviceModel()
        assert d.control_noise_sigma == 0.03 and d.beta_eff == 1.0
        assert DeviceModel(beta_phys=2.0, freeze_fraction=0.5).beta_eff == 1.0

    @pytest.mark.parametrize("kw", [{"beta_phys": 0}, {"freeze_fraction": 1.5},
                                    {"control_noise_sigma": -1}, {"reads_per_cycle": 0}])
    def test_invalid(self, kw):
        with pytest.raises(InputError):
            DeviceModel(**kw)

    def test_perturb_clips(self):
        p = IsingProblem(3, ((0, 1, 1.0), (1, 2, -1.0)), ((0, 2.0),))
        rng = np.random.default_rng(0)
        for _ in range(50):
            q = perturb(p, 0.5, rng)
            assert all(-1 <= J <= 1 for _, _, J in q.edges)
            assert all(-2 <= h <= 2 for _, h in q.fields)

    def test_noiseless_equals_exact_gibbs(self):
        # sigma = 0 on the exact path: chi-square against Gibbs
        p = random_complete_instance(6, 9)
        reads = simulate_device(p, DeviceModel(beta_phys=0.9, control_noise_sigma=0.0), 30000, 3)
        counts = np.bincount(configs_to_index(reads.configs), minlength=64)
        probs = gibbs_distribution(p, 0.9).probs
        keep = probs * counts.sum() >= 5
        f_exp = probs[keep] * counts.sum()
        f_obs = counts[keep]
        f_exp *= f_obs.sum() / f_exp.sum()
        assert stats.chisquare(f_obs, f_exp).pvalue > 1e-3

    def test_noiseless_mcmc_path(self):
        p = random_complete_instance(5, 3)
        d = DeviceModel(beta_phys=0.8, control_noise_sigma=0.0, exact_cap=2,
                        anneal_sweeps=20, hold_sweeps=40)
        reads = simulate_device(p, d, 30000, 4)
        assert reads.provenance["backend"] == "mcmc"
        counts = np.bincount(configs_to_index(reads.configs), minlength=32).astype(float)
        assert tv(counts, gibbs_distribution(p, 0.8).probs) < 0.02

    def test_reads_and_determinism(self, k4):
        d = DeviceModel(reads_per_cycle=30)
        a = simulate_device(k4, d, 95, 11)
        assert len(a) == 95
        assert np.array_equal(a.configs, simulate_device(k4, d, 95, 11).configs)
        assert not np.array_equal(a.configs, simulate_device(k4, d, 95, 12).configs)

    def test_noise_degrades_success(self):
        p = scale_problem(random_complete_instance(6, 1), 0.2)
        ground = configs_to_index(enumerate_ground_states(p)[1])

        def success(sigma):
            vals = []
            for s in range(20):
                r = simulate_device(p, DeviceModel(beta_phys=5.0, control_noise_sigma=sigma,
                                                   reads_per_cycle=50), 200, s)
                vals.append(np.isin(configs_to_index(r.configs), ground).mean())
            return np.median(vals)

        assert success(0.05) < success(0.0)


class TestReadSet:
    def test_roundtrip(self, tmp_path):
        rs = ReadSet(np.array([[1, -1, 1], [-1, -1, 1]]), {"seed": 3, "alpha": 0.5})
        write_readset(tmp_path / "r.txt", rs)
        back = read_readset(tmp_path / "r.txt")
        assert np.array_equal(back.configs, rs.configs)
        assert back.provenance == rs.provenance
        assert back.provenance["problem"] is None

    def test_weights_roundtrip(self):
        rs = ReadSet(np.array([[1, -1], [1, 1]]), weights=[0.25, 0.75])
        back = loads_readset(dumps_readset(rs))
        np.testing.assert_array_equal(back.weights, rs.weights)

    def test_concatenate(self):
        a = ReadSet(np.ones((2, 3)), {"seed": 1})
        b = ReadSet(-np.ones((1, 3)), {"seed": 2})
        c = ReadSet.concatenate([a, b])
        assert len(c) == 3 and c.provenance["seed"] == 1
        with pytest.raises(InputError):
            ReadSet.concatenate([])

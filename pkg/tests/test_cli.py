import json

import numpy as np
import pytest

from nqac.chimera import read_embedding
from nqac.harness.cli import main
from nqac.ising import antiferromagnetic_complete, read_problem, write_problem, loads_problem
from nqac.readset import read_readset


@pytest.fixture
def k4_file(tmp_path):
    path = tmp_path / "k4.txt"
    write_problem(path, antiferromagnetic_complete(4))
    return path


def run(*args):
    return main([str(a) for a in args])


def test_encode(tmp_path, k4_file):
    out = tmp_path / "nested.txt"
    assert run("encode", k4_file, "-C", 2, "-g", 0.5, "-o", out) == 0
    problem, meta, extra = loads_problem(out.read_text())
    assert problem.n_spins == 8 and meta["C"] == "2"
    assert extra["index_map"][3] == "3 1 1"


def test_encode_range_violation(tmp_path, k4_file):
    assert run("encode", k4_file, "-C", 2, "-g", 3.0, "-o", tmp_path / "x") == 2


def test_embed_validate(tmp_path, k4_file):
    emb = tmp_path / "e.txt"
    assert run("embed", "--problem", k4_file, "--rows", 4, "--cols", 4, "--seed", 1, "-o", emb) == 0
    assert read_embedding(emb).m == 4
    assert run("validate-embedding", emb, "--problem", k4_file) == 0
    lines = emb.read_text().splitlines()
    first = lines.index("chains") + 1
    lines[first + 1] = lines[first].split()[0] + " " + " ".join(lines[first + 1].split()[1:])
    bad = tmp_path / "bad.txt"
    bad.write_text("\n".join(lines) + "\n")
    assert run("validate-embedding", bad) == 2


def test_embed_capacity(tmp_path):
    assert run("embed", "-m", 40, "--rows", 4, "--cols", 4, "-o", tmp_path / "e.txt") == 3


def test_sample_decode_fit(tmp_path, k4_file, capsys):
    reads = tmp_path / "r.txt"
    assert run("sample", k4_file, "--beta", 0.5, "--reads", 20000, "--seed", 1, "-o", reads) == 0
    assert len(read_readset(reads)) == 20000
    capsys.readouterr()
    assert run("fit-beta", reads, "--problem", k4_file) == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["beta"] == pytest.approx(0.5, abs=0.05)
    # decode at C = 2 halves the width
    dec = tmp_path / "d.txt"
    assert run("decode", reads, "-C", 2, "--seed", 0, "-o", dec) == 0
    assert read_readset(dec).n_spins == 2


def test_sample_nqac_and_chain_decode(tmp_path, k4_file, capsys):
    emb = tmp_path / "e.txt"
    run("embed", "-m", 8, "--rows", 4, "--cols", 4, "--seed", 0, "-o", emb)
    reads = tmp_path / "r.txt"
    assert run("sample", k4_file, "--backend", "nqac", "-C", 2, "--alpha", 0.3, "--embedding", emb,
               "--rows", 4, "--cols", 4, "--reads", 200, "--seed", 2, "-o", reads) == 0
    rs = read_readset(reads)
    assert rs.n_spins == 4 and rs.provenance["C"] == 2
    # physical reads through the chain vote: all-up lifted physical config
    from nqac.readset import ReadSet, write_readset
    L = read_embedding(emb).chain_length
    phys = tmp_path / "phys.txt"
    write_readset(phys, ReadSet(np.ones((3, 8 * L), dtype=np.int8)))
    out = tmp_path / "dec.txt"
    capsys.readouterr()
    assert run("decode", phys, "-C", 2, "--embedding", emb, "-o", out) == 0
    assert "broken_chain_fraction 0.0" in capsys.readouterr().out
    assert read_readset(out).configs.tolist() == [[1, 1, 1, 1]] * 3


def test_mcmc_backend(tmp_path, k4_file):
    assert run("sample", k4_file, "--backend", "mcmc", "--sweeps", 10, "--reads", 50,
               "-o", tmp_path / "r.txt") == 0


def test_collapse_power_law(tmp_path, capsys):
    alpha = np.logspace(-2, 0, 12)

    def p1(a):
        return 0.4 + 0.5 / (1 + np.exp(-3 * (np.log10(a) + 1)))

    rows = ["C,alpha,p_median,p25,p75"]
    for C, mu in ((1, 1.0), (2, 2.0), (3, 3.0 ** 0.7 * 1.0)):
        for a in alpha:
            a, v = float(a), float(p1(mu * a))
            rows.append(f"{C},{a!r},{v!r},{v - 0.01!r},{v + 0.01!r}")
    (tmp_path / "curves.csv").write_text("\n".join(rows) + "\n")
    assert run("collapse", tmp_path / "curves.csv", "-o", tmp_path / "mu.csv") == 0
    lines = (tmp_path / "mu.csv").read_text().splitlines()
    assert lines[0] == "C,mu,mu_low,mu_high"
    assert float(lines[2].split(",")[1]) == pytest.approx(2.0, rel=0.01)
    capsys.readouterr()
    assert run("power-law", tmp_path / "mu.csv") == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n_points"] == 2 and not out["degenerate"]
    assert run("collapse", tmp_path / "curves.csv", "--M0", 0.99) == 2


def test_run_and_export(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(
        "name: cli\nseed: 1\nalphas: [0.1, 1.0]\nC: [1, 2]\nembeddings: 2\nreads: 50\n"
        "graph: {rows: 4, cols: 4}\ndevice: {anneal_sweeps: 20, hold_sweeps: 20}\n"
        f"output: {tmp_path / 'run'}\n")
    assert run("run-opt", cfg) == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["kind"] == "opt"
    assert run("export", tmp_path / "run", "fig1a", "-o", tmp_path / "f.csv") == 0
    assert (tmp_path / "f.csv").read_bytes() == (tmp_path / "run" / "fig1a.csv").read_bytes()
    assert run("export", tmp_path / "run", "fig3a") == 2
    assert run("run-sampling", cfg, "-o", tmp_path / "s") == 0
    assert run("run-opt", tmp_path / "nope.yaml") == 2


def test_bad_input_file(tmp_path):
    (tmp_path / "p.txt").write_text("garbage\n")
    assert run("encode", tmp_path / "p.txt", "-C", 2, "-o", tmp_path / "o") == 2


def test_problem_file_preserved(tmp_path, k4_file):
    assert read_problem(k4_file) == antiferromagnetic_complete(4)


def test_malformed_csv(tmp_path):
    (tmp_path / "c.csv").write_text("C,alpha\n1,x\n")
    assert run("collapse", tmp_path / "c.csv") == 2
    assert run("power-law", tmp_path / "c.csv") == 2

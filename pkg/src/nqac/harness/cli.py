"""``nqac`` command line.

Exit codes: 0 success, 2 invalid input or failed validation, 3 capacity
exceeded (embedding does not fit, or a problem is too large to enumerate).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import defaultdict

import numpy as np

from ..analysis import Curve, attach_power_law, data_collapse, fit_effective_beta, fit_power_law
from ..chimera import build_chimera, decode_chains, embed_complete, read_embedding, validate_embedding, write_embedding
from ..exceptions import CapacityError, InputError
from ..ising import energy_histogram, read_problem, write_problem
from ..nesting import decode_code_to_logical, nest
from ..pipeline import run_pipeline
from ..readset import read_readset, write_readset
from ..samplers import DeviceModel, sample_exact, sample_mcmc
from .config import load_config
from .experiments import run_optimization_experiment, run_sampling_experiment
from .export import FIGURES, export_csv

EXIT_OK, EXIT_INVALID, EXIT_CAPACITY = 0, 2, 3


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _graph(args):
    return build_chimera(args.rows, args.cols, args.shore, args.mask or ())


def _add_graph(p):
    p.add_argument("--rows", type=int, default=16)
    p.add_argument("--cols", type=int, default=16)
    p.add_argument("--shore", type=int, default=4)
    p.add_argument("--mask", type=int, nargs="*", help="unavailable qubit indices")


def _add_device(p):
    d = DeviceModel()
    p.add_argument("--beta-phys", type=float, default=d.beta_phys)
    p.add_argument("--freeze-fraction", type=float, default=d.freeze_fraction)
    p.add_argument("--sigma", type=float, default=d.control_noise_sigma, help="control noise std-dev")
    p.add_argument("--reads-per-cycle", type=int, default=d.reads_per_cycle)


def _device(args) -> DeviceModel:
    return DeviceModel(beta_phys=args.beta_phys, freeze_fraction=args.freeze_fraction,
                       control_noise_sigma=args.sigma, reads_per_cycle=args.reads_per_cycle)


def cmd_encode(args):
    problem = read_problem(args.problem)
    nested = nest(problem, args.C, args.gamma, rescale=args.rescale)
    meta = {"C": args.C, "gamma": repr(nested.gamma), "scale": repr(nested.scale), "base": problem.digest()}
    write_problem(args.output, nested.problem, meta, {"index_map": nested.index_map_lines()})


def cmd_embed(args):
    m = args.m if args.m is not None else read_problem(args.problem).n_spins
    write_embedding(args.output, embed_complete(m, _graph(args), args.seed))


def cmd_validate_embedding(args):
    emb = read_embedding(args.embedding)
    edges = None
    if args.problem:
        edges = [(i, j) for i, j, _ in read_problem(args.problem).edges]
    validate_embedding(emb, edges, balanced=not args.allow_unbalanced)
    print(f"valid: {emb.m} chains of length {emb.chain_length}, {emb.n_qubits} qubits")


def cmd_sample(args):
    problem = read_problem(args.problem)
    if args.backend == "exact":
        reads = sample_exact(problem, args.beta, args.reads, args.seed)
    elif args.backend == "mcmc":
        reads = sample_mcmc(problem, [(args.beta, args.sweeps)], args.reads, args.seed)
    else:
        emb = read_embedding(args.embedding) if args.embedding else None
        reads = run_pipeline(problem, alpha=args.alpha, C=args.C, gamma=args.gamma, graph=_graph(args),
                             device=_device(args), n_reads=args.reads, chain_penalty=args.chain_penalty,
                             embedding=emb, embedding_seed=args.embedding_seed, seed=args.seed).decoded
    write_readset(args.output, reads)


def cmd_decode(args):
    reads = read_readset(args.reads)
    rng = np.random.default_rng(args.seed)
    broken = None
    if args.embedding:
        reads, broken = decode_chains(reads, read_embedding(args.embedding), rng)
    logical = decode_code_to_logical(reads.configs, args.C, rng)
    out = reads.with_configs(logical, stage="logical", C=args.C)
    write_readset(args.output, out)
    if broken is not None:
        print(f"broken_chain_fraction {broken!r}")


def cmd_fit_beta(args):
    problem = read_problem(args.problem)
    reads = read_readset(args.reads)
    fit = fit_effective_beta(energy_histogram(reads, problem), problem, tuple(args.beta_range))
    print(json.dumps({"beta": fit.beta, "distance": fit.distance}, sort_keys=True))


_MEDIAN_COLS = ("p_median", "beta_median", "median")
_P25_COLS = ("p25", "beta25")
_P75_COLS = ("p75", "beta75")


def _pick(row, names):
    for n in names:
        if n in row:
            return float(row[n])
    raise InputError(f"missing column; expected one of {names}")


def read_curves_csv(path) -> list[Curve]:
    """Curves from a CSV with columns C, alpha and median/p25/p75 (fig1a or fig3a layout)."""
    data = defaultdict(lambda: ([], [], [], []))
    with open(path, newline="") as fh:
        try:
            for row in csv.DictReader(fh):
                cols = data[int(row["C"])]
                cols[0].append(float(row["alpha"]))
                cols[1].append(_pick(row, _MEDIAN_COLS))
                cols[2].append(_pick(row, _P25_COLS))
                cols[3].append(_pick(row, _P75_COLS))
        except (KeyError, ValueError) as exc:
            raise InputError(f"malformed curves file {path}: {exc}") from exc
    return [Curve(C, *cols) for C, cols in sorted(data.items())]


def cmd_collapse(args):
    boost = attach_power_law(data_collapse(read_curves_csv(args.curves), args.M0))
    lines = ["C,mu,mu_low,mu_high"] + [f"{c},{m!r},{lo!r},{hi!r}" for c, m, lo, hi in boost.as_rows()]
    _emit("\n".join(lines) + "\n", args.output)
    for note in boost.notes:
        print(f"note: {note}", file=sys.stderr)


def cmd_power_law(args):
    C, mu = [], []
    with open(args.boosts, newline="") as fh:
        try:
            for row in csv.DictReader(fh):
                C.append(int(row["C"]))
                mu.append(float(row["mu"]))
        except (KeyError, ValueError) as exc:
            raise InputError(f"malformed boosts file {args.boosts}: {exc}") from exc
    fit = fit_power_law(C, mu)
    print(json.dumps({"eta": None if fit.degenerate else fit.eta,
                      "eta_err": None if fit.degenerate or not np.isfinite(fit.eta_err) else fit.eta_err,
                      "n_points": fit.n_points, "degenerate": fit.degenerate}, sort_keys=True))


def _run(args, fn):
    config = load_config(args.config, output=args.output)
    result = fn(config, workers=args.workers)
    print(json.dumps(result.summary, sort_keys=True))


def cmd_export(args):
    print(export_csv(args.run_dir, args.figure, args.output))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nqac", description="Nested quantum annealing correction simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="nest a logical problem")
    p.add_argument("problem")
    p.add_argument("-C", type=int, required=True)
    p.add_argument("-g", "--gamma", type=float, default=1.0)
    p.add_argument("--rescale", action="store_true", help="divide uniformly to fit the ranges")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("embed", help="random balanced clique embedding")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("-m", type=int, help="clique size")
    g.add_argument("--problem", help="take the clique size from a problem file")
    _add_graph(p)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("validate-embedding", help="check chains are disjoint, connected and coupled")
    p.add_argument("embedding")
    p.add_argument("--problem", help="check a coupler exists for every edge of this problem")
    p.add_argument("--allow-unbalanced", action="store_true")
    p.set_defaults(func=cmd_validate_embedding)

    p = sub.add_parser("sample", help="draw reads from a problem")
    p.add_argument("problem")
    p.add_argument("--backend", choices=("exact", "mcmc", "nqac"), default="exact")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("-C", type=int, default=1)
    p.add_argument("-g", "--gamma", type=float, default=1.0)
    p.add_argument("--chain-penalty", type=float, default=1.0)
    p.add_argument("--embedding")
    p.add_argument("--embedding-seed", type=int)
    _add_graph(p)
    _add_device(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("decode", help="chain and code majority vote")
    p.add_argument("reads")
    p.add_argument("-C", type=int, required=True)
    p.add_argument("--embedding", help="physical reads: vote over chains first")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("fit-beta", help="effective inverse temperature of decoded reads")
    p.add_argument("reads")
    p.add_argument("--problem", required=True)
    p.add_argument("--beta-range", type=float, nargs=2, default=(0.0, 20.0))
    p.set_defaults(func=cmd_fit_beta)

    p = sub.add_parser("collapse", help="energy boosts from a curves CSV")
    p.add_argument("curves")
    p.add_argument("--M0", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser("power-law", help="fit mu_C = C^eta from a CSV with C, mu columns")
    p.add_argument("boosts")
    p.set_defaults(func=cmd_power_law)

    for name, fn, text in (("run-opt", run_optimization_experiment, "success-probability experiment"),
                           ("run-sampling", run_sampling_experiment, "effective-temperature experiment")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="YAML experiment config")
        p.add_argument("--workers", type=int, help="overrides NQAC_WORKERS")
        p.add_argument("-o", "--output", help="overrides the config output directory")
        p.set_defaults(func=lambda a, fn=fn: _run(a, fn))

    p = sub.add_parser("export", help="write one figure table from a run directory")
    p.add_argument("run_dir")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

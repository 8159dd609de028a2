"""Command-line interface.

Subcommands mirror the library: generate / perturb / solve for single
instances, sweep / threshold / sk-study for experiments, lowerbound for the
impossibility games, ingest for real datasets, info for inspecting an
instance file.  Every stochastic command takes --seed and is fully
deterministic given it.  Exit codes: 0 success, 2 bad parameters (the
message names the flag), 1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, lowerbounds
from .algorithms import estimated_sq_distances, naive_nns, svd_split_nns
from .errors import ParameterError, SnnsError
from .harness import Algorithm, SweepConfig, SyntheticFamily
from .ingest import load_glove, load_mnist_idx, preprocess
from .model import (
    LatentInstance,
    NoisyInstance,
    generate_synthetic,
    instance_sk,
    perturb,
    read_instance,
    write_instance,
)
from .thresholds import classify_regime, theorem_sigma_cap

_ALGO_NAMES = {"svd": Algorithm.SVD_SPLIT, "naive": Algorithm.NAIVE}


def _parse_spectrum(text: str, k: int) -> tuple[float, ...]:
    parts = [p for p in text.split(",") if p]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ParameterError(f"--spectrum: could not parse {text!r}") from None
    if len(values) == 1:
        values = values * k
    if len(values) != k:
        raise ParameterError(f"--spectrum: expected 1 or k={k} values, got {len(values)}")
    return tuple(values)


def _parse_sigma_grid(text: str) -> tuple[float, ...]:
    """Grid syntax: start:stop:kind:count with kind geometric or linear."""
    parts = text.split(":")
    if len(parts) != 4:
        raise ParameterError(
            f"--sigma-grid: expected start:stop:kind:count, got {text!r}"
        )
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[3])
    except ValueError:
        raise ParameterError(f"--sigma-grid: could not parse {text!r}") from None
    kind = parts[2]
    if count < 2:
        raise ParameterError(f"--sigma-grid: count must be >= 2, got {count}")
    if not 0 <= start < stop:
        raise ParameterError(f"--sigma-grid: need 0 <= start < stop, got {start}:{stop}")
    if kind == "geometric":
        if start <= 0:
            raise ParameterError("--sigma-grid: geometric grids need start > 0")
        return tuple(float(s) for s in np.geomspace(start, stop, count))
    if kind == "linear":
        return tuple(float(s) for s in np.linspace(start, stop, count))
    raise ParameterError(f"--sigma-grid: kind must be geometric or linear, got {kind!r}")


def _parse_floats(text: str, flag: str) -> tuple[float, ...]:
    try:
        values = tuple(float(p) for p in text.split(",") if p)
    except ValueError:
        raise ParameterError(f"{flag}: could not parse {text!r}") from None
    if not values:
        raise ParameterError(f"{flag}: no values given")
    return values


def _load(path) -> tuple[LatentInstance, NoisyInstance | None]:
    try:
        return read_instance(path)
    except FileNotFoundError:
        raise SnnsError(f"no such file: {path}") from None


def _cmd_generate(args) -> int:
    spectrum = _parse_spectrum(args.spectrum, args.k)
    inst = generate_synthetic(args.n, args.d, args.k, spectrum, args.eps, args.seed)
    write_instance(args.output, inst)
    print(f"wrote {args.output} (n={inst.n}, d={inst.d}, k={inst.k}, nn_index={inst.nn_index})")
    return 0


def _cmd_perturb(args) -> int:
    inst, _ = _load(args.input)
    noisy = perturb(inst, args.sigma, args.seed)
    write_instance(args.output, inst, noisy)
    print(f"wrote {args.output} (sigma={args.sigma:g}, seed={args.seed})")
    return 0


def _cmd_solve(args) -> int:
    inst, noisy = _load(args.input)
    A = noisy.A if noisy is not None else inst.B
    k = args.k if args.k is not None else inst.k
    if args.algo == "svd":
        answer = svd_split_nns(A, k)
    else:
        answer = naive_nns(A)
    print(f"index {answer.index}")
    if args.sigma is not None:
        for j, est in enumerate(estimated_sq_distances(A, k, args.sigma), start=1):
            print(f"{j} {float(est)!r}")
    return 0


def _instances_from_files(paths) -> list[LatentInstance]:
    return [_load(p)[0] for p in paths]


def _cmd_sweep(args) -> int:
    grid = _parse_sigma_grid(args.sigma_grid)
    instances = _instances_from_files(args.inputs)
    records = []
    for name in args.algo:
        config = SweepConfig(
            algorithm=_ALGO_NAMES[name],
            sigma_grid=grid,
            trials_per_point=args.trials,
            seed=args.seed,
            instance_source=",".join(str(p) for p in args.inputs),
        )
        if len(instances) == 1:
            records.extend(harness.sweep(config, instances[0], threads=args.threads))
        else:
            for i, sigma in enumerate(grid):
                records.append(
                    harness.success_probability_over_instances(
                        config.algorithm,
                        instances,
                        sigma,
                        seed=harness.derive_seed(args.seed, i),
                        trials_per_instance=args.trials,
                    )
                )
    harness.emit_csv(records, args.output)
    print(f"wrote {args.output} ({len(records)} rows)")
    if args.plot is not None:
        harness.emit_plot(records, args.plot)
        print(f"wrote {args.plot}")
    return 0


def _cmd_threshold(args) -> int:
    grid = _parse_sigma_grid(args.sigma_grid)
    inst, _ = _load(args.input)
    config = SweepConfig(
        algorithm=_ALGO_NAMES[args.algo],
        sigma_grid=grid,
        trials_per_point=args.trials,
        seed=args.seed,
        instance_source=str(args.input),
    )
    print(f"threshold {harness.noise_threshold(config, inst, threads=args.threads)!r}")
    return 0


def _cmd_sk_study(args) -> int:
    spectrum = _parse_spectrum(args.spectrum, args.k)
    multipliers = _parse_floats(args.multipliers, "--multipliers")
    family = SyntheticFamily(
        n=args.n, d=args.d, k=args.k, spectrum=spectrum, epsilon=args.eps, seed=args.seed
    )
    config = SweepConfig(
        algorithm=_ALGO_NAMES[args.algo],
        sigma_grid=_parse_sigma_grid(args.sigma_grid),
        trials_per_point=args.trials,
        seed=args.seed,
        instance_source=f"synthetic n={args.n} d={args.d} k={args.k} eps={args.eps}",
    )
    result = harness.sk_dependence_study(family, multipliers, config, threads=args.threads)
    for sk, th in zip(result.s_k_values, result.thresholds):
        print(f"s_k {sk!r} threshold {th!r}")
    print(f"slope {result.slope!r}")
    print(f"intercept {result.intercept!r}")
    print(f"pearson_r {result.pearson_r!r}")
    return 0


def _cmd_lowerbound(args) -> int:
    sigmas = _parse_floats(args.sigma, "--sigma")
    ks = tuple(int(v) for v in _parse_floats(args.k, "--k"))
    results = []
    if args.game == "variance":
        for k in ks:
            for sigma in sigmas:
                results.append(
                    lowerbounds.swap_test_experiment_k(k, sigma, args.trials, args.seed)
                )
    else:
        if args.eps is None:
            raise ParameterError("--eps is required for the shift game")
        epsilons = _parse_floats(args.eps, "--eps")
        for k in ks:
            for sigma in sigmas:
                for eps in epsilons:
                    results.append(
                        lowerbounds.swap_test_experiment_eps(
                            k, sigma, eps, args.trials, args.seed
                        )
                    )
    lines = [lowerbounds.CSV_HEADER] + [lowerbounds.csv_row(r) for r in results]
    text = "\n".join(lines) + "\n"
    if args.output is not None:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
        print(f"wrote {args.output} ({len(results)} rows)")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_ingest(args) -> int:
    if args.format == "glove":
        raw = load_glove(args.data)
        query_source = None
    else:
        raw = load_mnist_idx(args.data, limit=args.limit)
        if args.queries is None:
            raise ParameterError("--queries: the mnist format requires a separate query file")
        query_source = load_mnist_idx(args.queries)
    instances = preprocess(
        raw, args.n, args.k, args.eps, args.count, args.seed, query_source=query_source
    )
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    for i, inst in enumerate(instances):
        path = outdir / f"{raw.name}_q{i:03d}.snns"
        write_instance(path, inst)
        print(f"wrote {path}")
    return 0


def _cmd_info(args) -> int:
    inst, noisy = _load(args.input)
    print(f"d {inst.d}")
    print(f"n {inst.n}")
    print(f"k {inst.k}")
    print(f"epsilon {inst.epsilon!r}")
    print(f"nn_index {inst.nn_index}")
    print(f"s_k {instance_sk(inst)!r}")
    report = theorem_sigma_cap(inst)
    print(f"threshold_report {report.to_json()}")
    sigma = noisy.sigma if noisy is not None else args.sigma
    if noisy is not None:
        print(f"noisy sigma={noisy.sigma!r} seed={noisy.seed}")
    if sigma is not None:
        print(f"regime {classify_regime(sigma, inst.d, inst.k).value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snns",
        description="Nearest-neighbor search on noisy low-rank data via split-half SVD.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic instance file")
    p.add_argument("--n", type=int, required=True, help="number of data points (even)")
    p.add_argument("--d", type=int, required=True, help="ambient dimension")
    p.add_argument("--k", type=int, required=True, help="latent subspace dimension")
    p.add_argument("--eps", type=float, required=True, help="distance gap parameter")
    p.add_argument("--spectrum", default="1", help="singular values: one value or k comma-separated")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("perturb", help="add Gaussian noise to an instance file")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("input")
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("solve", help="run a search algorithm on an instance file")
    p.add_argument("--algo", choices=sorted(_ALGO_NAMES), required=True)
    p.add_argument("--k", type=int, default=None, help="override the instance's k")
    p.add_argument("--sigma", type=float, default=None,
                   help="also print bias-corrected squared distance estimates")
    p.add_argument("input")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="success-rate sweep over a sigma grid")
    p.add_argument("--algo", choices=sorted(_ALGO_NAMES), action="append", required=True)
    p.add_argument("--sigma-grid", required=True, help="start:stop:{geometric|linear}:count")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="worker cap for grid points")
    p.add_argument("-o", "--output", required=True, help="CSV output path")
    p.add_argument("--plot", default=None, help="also write an SVG plot here")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("threshold", help="locate the 90%% success threshold")
    p.add_argument("--algo", choices=sorted(_ALGO_NAMES), required=True)
    p.add_argument("--sigma-grid", required=True, help="start:stop:{geometric|linear}:count")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("input")
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("sk-study", help="threshold dependence on the k-th singular value")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--spectrum", default="1")
    p.add_argument("--multipliers", default="1,2,4,8")
    p.add_argument("--algo", choices=sorted(_ALGO_NAMES), default="svd")
    p.add_argument("--sigma-grid", required=True, help="start:stop:{geometric|linear}:count")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_sk_study)

    p = sub.add_parser("lowerbound", help="Monte-Carlo pair-distinguishing games")
    p.add_argument("--game", choices=("variance", "shift"), required=True)
    p.add_argument("--k", default="1", help="comma-separated dimensions")
    p.add_argument("--sigma", required=True, help="comma-separated noise levels")
    p.add_argument("--eps", default=None, help="comma-separated shifts (shift game)")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None, help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_lowerbound)

    p = sub.add_parser("ingest", help="build instances from a real dataset")
    p.add_argument("--format", choices=("glove", "mnist"), required=True)
    p.add_argument("--data", required=True, help="GloVe text file or IDX3 image file")
    p.add_argument("--queries", default=None, help="IDX3 file for query candidates (mnist)")
    p.add_argument("--limit", type=int, default=None, help="cap on images read (mnist)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--count", type=int, required=True, help="number of query instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("info", help="summarize an instance file")
    p.add_argument("--sigma", type=float, default=None, help="classify this noise level")
    p.add_argument("input")
    p.set_defaults(func=_cmd_info)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"snns: parameter error: {exc}", file=sys.stderr)
        return 2
    except SnnsError as exc:
        print(f"snns: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"snns: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

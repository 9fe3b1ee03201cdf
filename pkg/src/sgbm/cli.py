"""Command-line entry point.

Subcommands: generate, cluster, spectrum, sweep, validate.  One flat
config file (key = value lines, # comments) drives any subcommand; the
key namespaces are model.*, kernel_in.*, kernel_out.*, run.*.  Unknown
keys are rejected before any work starts.

Exit codes: 0 ok, 2 config problem, 3 degenerate model (mu_in = mu_out),
4 numeric failure (eigensolver breakdown or a failed validation check).
"""

import argparse
import os
import sys
import time

import numpy as np

from . import harness, kernels, model, spectral, theory

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_NUMERIC = 4

_RUN_KEYS = {
    "seed", "seeds", "algorithm", "preset", "graph", "labels", "out",
    "n", "n_list", "r_in", "r_out", "r_in_grid", "mode", "grid",
    "fixed_out", "s", "q", "K", "threshold", "window", "workers",
    "li_iterate",
}


class ConfigError(ValueError):
    pass


def parse_config(path):
    """Flat 'section.key = value' file into nested dicts, strictly."""
    sections = {"model": {}, "kernel_in": {}, "kernel_out": {}, "run": {}}
    if path is None:
        return sections
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if "." not in key:
            raise ConfigError(f"{path}:{lineno}: keys are namespaced, e.g. model.n")
        section, name = key.split(".", 1)
        if section not in sections:
            raise ConfigError(f"{path}:{lineno}: unknown section {section!r}")
        if section == "model" and name not in ("n", "d"):
            raise ConfigError(f"{path}:{lineno}: unknown model key {name!r}")
        if section == "run" and name not in _RUN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown run key {name!r}")
        if name in sections[section]:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        sections[section][name] = value
    return sections


def _int(section, name, value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{section}.{name} must be an integer, got {value!r}")


def _float(section, name, value):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{section}.{name} must be a number, got {value!r}")


def _int_list(section, name, value):
    """Comma list '1,2,3' or range 'a:b' (half-open)."""
    value = value.strip()
    if ":" in value:
        lo, hi = value.split(":", 1)
        return list(range(_int(section, name, lo), _int(section, name, hi)))
    return [_int(section, name, part) for part in value.split(",") if part.strip()]


def _float_list(section, name, value):
    return [_float(section, name, part) for part in value.split(",") if part.strip()]


def build_params(config, seed_override=None):
    """SgbmParams from the model/kernel sections."""
    mdl = config["model"]
    if "n" not in mdl:
        raise ConfigError("model.n is required")
    n = _int("model", "n", mdl["n"])
    d = _int("model", "d", mdl.get("d", "1"))
    if n < 2 or n % 2:
        raise ConfigError(f"model.n = {n}: balanced blocks need an even n >= 2")
    if not config["kernel_in"] or not config["kernel_out"]:
        raise ConfigError("kernel_in.* and kernel_out.* blocks are required")
    try:
        f_in = kernels.kernel_from_config(config["kernel_in"], d)
        f_out = kernels.kernel_from_config(config["kernel_out"], d)
    except ValueError as exc:
        raise ConfigError(str(exc))
    seed = seed_override
    if seed is None:
        seed = _int("run", "seed", config["run"].get("seed", "0"))
    try:
        return model.SgbmParams(n=n, d=d, f_in=f_in, f_out=f_out, seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _say(args, message):
    if not args.quiet:
        print(message)


def cmd_generate(args, config):
    params = build_params(config, args.seed)
    graph, labels, positions = model.sample_graph(params)
    os.makedirs(args.out, exist_ok=True)
    model.write_graph(os.path.join(args.out, "edges.txt"), graph, params.d, params.seed)
    model.write_labels(os.path.join(args.out, "labels.txt"), labels)
    model.write_positions(os.path.join(args.out, "positions.csv"), positions)
    _say(args, f"wrote edges.txt, labels.txt, positions.csv under {args.out} "
               f"(n={params.n}, edges={graph.edge_count()})")
    return EXIT_OK


def cmd_cluster(args, config):
    run = config["run"]
    algorithm = run.get("algorithm", "hosc")
    if algorithm not in ("hosc", "hosc_li"):
        raise ConfigError(f"run.algorithm must be hosc or hosc_li, got {algorithm!r}")
    truth = None
    if "graph" in run:
        if not os.path.exists(run["graph"]):
            raise ConfigError(f"graph file not found: {run['graph']}")
        try:
            graph, d, _ = model.read_graph(run["graph"])
        except (ValueError, OSError) as exc:
            raise ConfigError(f"bad graph file: {exc}")
        if not config["kernel_in"] or not config["kernel_out"]:
            raise ConfigError("clustering a graph file still needs kernel blocks "
                              "(they define mu_in and mu_out)")
        try:
            f_in = kernels.kernel_from_config(config["kernel_in"], d)
            f_out = kernels.kernel_from_config(config["kernel_out"], d)
        except ValueError as exc:
            raise ConfigError(str(exc))
        if "labels" in run:
            if not os.path.exists(run["labels"]):
                raise ConfigError(f"labels file not found: {run['labels']}")
            try:
                truth = model.read_labels(run["labels"])
            except (ValueError, OSError) as exc:
                raise ConfigError(f"bad labels file: {exc}")
            if len(truth) != graph.n:
                raise ConfigError("truth labels length does not match the graph")
    else:
        params = build_params(config, args.seed)
        graph, truth, _ = model.sample_graph(params)
        f_in, f_out = params.f_in, params.f_out

    mu_in = kernels.edge_density(f_in)
    mu_out = kernels.edge_density(f_out)
    predicted, report = spectral.hosc(graph, mu_in, mu_out)
    if algorithm == "hosc_li":
        iterate = run.get("li_iterate", "false").lower() == "true"
        predicted = spectral.local_improvement(graph, predicted, iterate=iterate)

    os.makedirs(args.out, exist_ok=True)
    model.write_labels(os.path.join(args.out, "predicted.labels"), predicted)
    spectrum = spectral.eigendecompose(graph)
    profile = (spectral.per_eigenvector_accuracy(spectrum, truth)
               if truth is not None else [(rank + 1, None) for rank in range(graph.n)])
    with open(os.path.join(args.out, "selection.csv"), "w") as fh:
        fh.write("rank,eigenvalue,accuracy,selected\n")
        for rank, acc in profile:
            acc_cell = f"{acc:.6f}" if acc is not None else ""
            sel = 1 if rank == report.selected_index else 0
            fh.write(f"{rank},{spectrum.eigenvalues[rank - 1]:.9g},{acc_cell},{sel}\n")
    _say(args, f"selected rank {report.selected_index} "
               f"(lambda*={report.lambda_star:.4f}, lambda={report.lambda_selected:.4f})")
    if truth is not None:
        _say(args, f"accuracy {spectral.accuracy(truth, predicted):.4f}")
    return EXIT_OK


def cmd_spectrum(args, config):
    params = build_params(config, args.seed)
    run = config["run"]
    report, measure = harness.spectrum_experiment(
        params,
        K=_int("run", "K", run.get("K", "64")),
        threshold=_float("run", "threshold", run.get("threshold", "0.02")),
        window=_float("run", "window", run.get("window", "0.02")),
        out=args.out,
    )
    _say(args, f"eigenvalues above threshold: {len(report.entries)}, "
               f"outliers beyond window: {report.outlier_count}, "
               f"max distance: {report.max_distance:.5f}, "
               f"truncation tail bound: {measure.tail_bound:.2e}")
    return EXIT_OK


def cmd_sweep(args, config):
    run = config["run"]
    preset = run.get("preset")
    if preset not in ("fig3", "fig4", "waxman"):
        raise ConfigError("run.preset must be one of fig3, fig4, waxman")
    if "seeds" in run:
        seeds = _int_list("run", "seeds", run["seeds"])
        if not seeds:
            raise ConfigError("run.seeds is empty")
        if any(not 0 <= s < 2**32 for s in seeds):
            raise ConfigError("run.seeds entries must fit in 32 unsigned bits")
    else:
        seeds = None
    master = args.seed if args.seed is not None else _int("run", "seed", run.get("seed", "0"))
    if not 0 <= master < 2**64:
        raise ConfigError("run.seed must fit in 64 unsigned bits")
    workers = _int("run", "workers", run.get("workers", "1"))
    if workers < 1:
        raise ConfigError("run.workers must be >= 1")

    common = dict(master_seed=master, out=args.out, workers=workers)
    if preset == "fig3":
        kw = dict(common)
        if seeds is not None:
            kw["seeds"] = seeds
        if "n_list" in run:
            kw["n_list"] = _int_list("run", "n_list", run["n_list"])
        if "r_in" in run:
            kw["r_in"] = _float("run", "r_in", run["r_in"])
        if "r_out" in run:
            kw["r_out"] = _float("run", "r_out", run["r_out"])
        rows, table = harness.fig3_sweep(**kw)
    elif preset == "fig4":
        kw = dict(common)
        if seeds is not None:
            kw["seeds"] = seeds
        if "n" in run:
            kw["n"] = _int("run", "n", run["n"])
        if "r_in_grid" in run:
            kw["r_in_grid"] = _float_list("run", "r_in_grid", run["r_in_grid"])
        if "r_out" in run:
            kw["r_out"] = _float("run", "r_out", run["r_out"])
        try:
            rows, table = harness.fig4_sweep(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc))
    else:
        kw = dict(common)
        if seeds is not None:
            kw["seeds"] = seeds
        if "mode" in run:
            kw["mode"] = run["mode"]
        if "grid" in run:
            kw["grid"] = _float_list("run", "grid", run["grid"])
        if "fixed_out" in run:
            kw["fixed_out"] = _float("run", "fixed_out", run["fixed_out"])
        if "s" in run:
            kw["s"] = _float("run", "s", run["s"])
        if "q" in run:
            kw["q"] = _float("run", "q", run["q"])
        if "n_list" in run:
            kw["n_list"] = _int_list("run", "n_list", run["n_list"])
        try:
            rows, table, dips = harness.waxman_sweep(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc))

    os.makedirs(args.out, exist_ok=True)
    harness.write_results(os.path.join(args.out, "results.csv"), rows)
    harness.write_timings(os.path.join(args.out, "timings.csv"), rows)
    echo = {f"{section}.{key}": value
            for section, block in config.items() for key, value in block.items()}
    echo["cli.preset"] = preset
    echo["cli.master_seed"] = master
    harness.write_meta(os.path.join(args.out, "meta.txt"), echo)
    errors = sum(1 for row in rows if row.note.startswith("error:"))
    _say(args, f"wrote {len(rows)} rows to {args.out}/results.csv"
               + (f" ({errors} error rows)" if errors else ""))
    return EXIT_OK


def _validate_checks(run):
    """The property-oracle suite behind the validate subcommand."""
    checks = []

    def fourier_agreement():
        worst = 0.0
        for d in (1, 2):
            kern = kernels.Indicator(0.17, d=d)
            axis = np.arange(-50, 51)
            ks = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
            analytic = theory.coefficient_table(kern, ks)
            quad = kernels.fourier_coeff_grid(kern, ks, 256)
            worst = max(worst, float(np.max(np.abs(analytic - quad))))
        return worst <= 1e-10, f"max |analytic - quadrature| = {worst:.2e} (allowed 1e-10)"

    def convolution_identity():
        grid_n = 4096
        worst = 0.0
        for kern, m, cutoff in (
            (kernels.Indicator(1024.5 / grid_n), 2, 1_000_000),
            (kernels.Indicator(1024.5 / grid_n), 3, 500),
            (kernels.Indicator(409.5 / grid_n), 4, 500),
            (kernels.Waxman(0.9, 4.0), 2, 500),
        ):
            ks = np.arange(-cutoff, cutoff + 1).reshape(-1, 1)
            coeff = theory.coefficient_table(kern, ks)
            lattice = float(np.sum(coeff**m))
            oracle = kernels.convolution_at_zero([kern] * m, grid_n)
            worst = max(worst, abs(oracle - lattice))
        return worst <= 1e-6, f"max |oracle - lattice sum| = {worst:.2e} (allowed 1e-6)"

    def trace_lipschitz():
        rng = np.random.default_rng(7)
        failures = 0
        for _ in range(200):
            n = 30
            m = int(rng.integers(1, 6))
            a = (rng.random((n, n)) < 0.3).astype(np.uint8)
            b = (rng.random((n, n)) < 0.3).astype(np.uint8)
            for mat in (a, b):
                mat &= ~np.eye(n, dtype=bool)
                mat |= mat.T
            lhs, rhs = theory.trace_lipschitz_check(
                model.Graph(n=n, adjacency=a), model.Graph(n=n, adjacency=b), m)
            if lhs > rhs + 1e-9:
                failures += 1
        return failures == 0, f"{200 - failures}/200 trials satisfied the bound"

    def degree_concentration():
        f_in = kernels.Indicator(0.2)
        f_out = kernels.Indicator(0.05)
        mu = kernels.edge_density(f_in) + kernels.edge_density(f_out)
        n, bad_runs = 2000, 0
        for seed in range(20):
            params = model.SgbmParams(n=n, d=1, f_in=f_in, f_out=f_out, seed=seed)
            graph, labels, _ = model.sample_graph(params)
            stats = model.degree_stats(graph, labels)
            floor = np.sqrt(2.0 * mu * n * np.log(n))
            if np.any(stats.z_in - stats.z_out < floor):
                bad_runs += 1
        return bad_runs <= 5, f"{bad_runs}/20 runs had a node below the floor (allowed 5)"

    def angle_bound():
        violations = 0
        for seed in range(10):
            params = model.SgbmParams(n=500, d=1, f_in=kernels.Constant(0.9),
                                      f_out=kernels.Constant(0.1), seed=seed)
            graph, labels, _ = model.sample_graph(params)
            spectrum = spectral.eigendecompose(graph)
            planted = np.where(np.asarray(labels) == 1, 1.0, -1.0) / np.sqrt(graph.n)
            report = theory.rayleigh_bound(graph, planted, spectrum)
            if report.actual_sine > report.sine_bound + 1e-12:
                violations += 1
        return violations == 0, f"{10 - violations}/10 instances satisfied the bound"

    checks = [
        ("fourier quadrature agreement", fourier_agreement),
        ("convolution identity", convolution_identity),
        ("trace lipschitz", trace_lipschitz),
        ("degree concentration", degree_concentration),
        ("rayleigh angle bound", angle_bound),
    ]
    return checks


def cmd_validate(args, config):
    results = []
    for name, check in _validate_checks(config["run"]):
        start = time.perf_counter()
        ok, detail = check()
        elapsed = time.perf_counter() - start
        results.append((name, ok, detail, elapsed))
    width = max(len(name) for name, *_ in results)
    for name, ok, detail, elapsed in results:
        status = "PASS" if ok else "FAIL"
        _say(args, f"{name.ljust(width)}  {status}  {detail}  [{elapsed:.1f}s]")
    if all(ok for _, ok, _, _ in results):
        _say(args, "all checks passed")
        return EXIT_OK
    return EXIT_NUMERIC


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sgbm",
        description="Sample block-model graphs on the torus, cluster them "
                    "spectrally, and check the spectrum against theory.")
    parser.add_argument("command", choices=["generate", "cluster", "spectrum",
                                            "sweep", "validate"])
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--out", default="sgbm_out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    handlers = {
        "generate": cmd_generate,
        "cluster": cmd_cluster,
        "spectrum": cmd_spectrum,
        "sweep": cmd_sweep,
        "validate": cmd_validate,
    }
    try:
        if args.seed is not None and not (0 <= args.seed < 2**64):
            raise ConfigError("--seed must fit in 64 unsigned bits")
        config = parse_config(args.config)
        if args.command != "validate" and args.config is None:
            raise ConfigError(f"{args.command} needs --config")
        return handlers[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except spectral.DegenerateModelError as exc:
        print(f"degenerate model: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except spectral.EigendecompositionError as exc:
        print(f"eigensolver failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

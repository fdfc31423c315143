"""Command-line entry point.

Subcommands: ``forward``, ``adjoint``, ``generate``, ``reconstruct``,
``verify``. Every run writes CSV artifacts plus a ``metadata.json`` with
the version, the normalized configuration echo, seeds and wall time.
CSV bodies are deterministic for a fixed configuration; timestamps appear
only in the metadata.

Exit codes: 0 success, 1 usage or configuration error, 2 solver failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .adjoint import MeasurementFunctional, adjoint_pulse_demo, adjoint_solve
from .config import (
    RunConfig,
    load_config_file,
    merge_configs,
    parse_config,
    resolve_eta,
    resolve_source,
    resolve_tanh_params,
)
from .data import generate_dataset, load_dataset, make_bank, save_dataset
from .errors import ConfigError, DatasetFormatError, PhonrecError, SolverBlowupError
from .grid import coarse_grid, make_grid
from .inverse import TanhParams, run_reconstruction
from .oracle import (
    conservation_probe,
    convexity_sweep,
    equilibrium_residual,
    gradient_check,
    monotonicity_check,
    selfadjoint_probe,
)
from .physics import make_table
from .presets import preset_config
from .transport import BoundarySource, forward_solve, max_principle_check

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3


def _fmt(value) -> str:
    return format(float(value), ".17g")


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with the config error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def _write_rows(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_matrix(path: Path, row_name: str, row_values, col_values, matrix) -> None:
    header = row_name + "," + ",".join(_fmt(c) for c in col_values)
    rows = (
        [_fmt(rv)] + [_fmt(v) for v in matrix[r]]
        for r, rv in enumerate(row_values)
    )
    _write_rows(path, header, rows)


def _write_metadata(outdir: Path, command: str, config: RunConfig, started: float, extra: dict):
    payload = {
        "version": __version__,
        "command": command,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "wall_time_s": time.perf_counter() - started,
        "config": config.to_dict(),
        **extra,
    }
    with open(outdir / "metadata.json", "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _field_snapshots(outdir: Path, grid, snapshots: dict, tag: str):
    """Write omega-integrated (x, mu) and mu-integrated (x, omega) matrices."""
    for node in sorted(snapshots):
        field = snapshots[node]
        t_label = f"{node * grid.dt:g}"
        xmu = field @ grid.w_omega  # integrate over omega
        xomega = np.einsum("jkl,k->jl", field, grid.w_mu)
        _write_matrix(outdir / f"{tag}_xmu_t{t_label}.csv", "x", grid.x, grid.mu, xmu)
        _write_matrix(
            outdir / f"{tag}_xomega_t{t_label}.csv", "x", grid.x, grid.omega, xomega
        )


def _resolve_run_config(args) -> RunConfig:
    config = RunConfig(sections={})
    if args.preset:
        config = preset_config(args.preset)
    if args.config:
        config = merge_configs(config, load_config_file(args.config))
    overrides: dict = {}
    if args.seed_data is not None:
        overrides.setdefault("experiment", {})["seed"] = args.seed_data
    if args.seed_sgd is not None:
        overrides.setdefault("inversion", {})["seed"] = args.seed_sgd
    if overrides:
        config = merge_configs(config, parse_config(overrides))
    return config


def _outdir(config: RunConfig, args) -> Path:
    path = Path(config.output_dir(args.out))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _build_bank(config: RunConfig, grid):
    exp = config.experiment()
    n_injections = exp.get("n_injections") or grid.n_omega
    n_measurements = exp["n_measurements"]
    seed = exp["seed"]
    return make_bank(
        grid,
        n_injections,
        n_measurements,
        measurement_window=tuple(exp["measurement_window"]),
        seed=[seed, 0] if n_measurements > 1 else None,
    )


# -- subcommands ---------------------------------------------------------------


def cmd_forward(config: RunConfig, args) -> int:
    started = time.perf_counter()
    outdir = _outdir(config, args)
    grid = config.build_grid()
    table = make_table(grid)
    block = config.block("forward")
    eta = resolve_eta(block.get("eta", {"tanh": {"a": 1.5, "b": 1.0}}), grid)
    phi = resolve_source(block.get("source", {"kronecker_omega": 1.5}), grid, table)
    snapshot_times = [float(t) for t in block.get("snapshot_times", [])]

    solution = forward_solve(
        grid,
        table,
        eta,
        phi,
        store_trajectory=bool(block.get("store_trajectory", False)),
        snapshot_times=snapshot_times,
    )
    _write_rows(
        outdir / "deltaT.csv",
        "t,delta_t",
        ([_fmt(t)] + [_fmt(v)] for t, v in zip(grid.t, solution.surface_delta_t)),
    )
    if solution.snapshots:
        _field_snapshots(outdir, grid, solution.snapshots, "snapshot")
    report = max_principle_check(solution)
    print(f"max |g| / max |phi| = {report.ratio:.6g}")
    _write_metadata(
        outdir,
        "forward",
        config,
        started,
        {"bound_ratio": report.ratio, "min_value": solution.min_value},
    )
    return EXIT_OK


def cmd_adjoint(config: RunConfig, args) -> int:
    started = time.perf_counter()
    outdir = _outdir(config, args)
    grid = config.build_grid()
    table = make_table(grid)
    block = config.block("adjoint")
    kind = block.get("kind", "measurement")
    snapshot_times = [float(t) for t in block.get("snapshot_times", [])]

    if kind == "pulse":
        solution = adjoint_pulse_demo(grid, table, snapshot_times=snapshot_times)
    elif kind == "measurement":
        eta = resolve_eta(block.get("eta", {"tanh": {"a": 1.5, "b": 1.0}}), grid)
        psi = MeasurementFunctional.kronecker_time(grid, block.get("measurement_time"))
        solution = adjoint_solve(grid, table, eta, psi, snapshot_times=snapshot_times)
    else:
        raise ConfigError(f"unknown kind {kind!r} (pulse or measurement)", field="adjoint.kind")

    if solution.snapshots:
        _field_snapshots(outdir, grid, solution.snapshots, "snapshot")
    print(f"max |h| = {solution.max_abs:.6g}")
    _write_metadata(outdir, "adjoint", config, started, {"max_abs": solution.max_abs})
    return EXIT_OK


def cmd_generate(config: RunConfig, args) -> int:
    started = time.perf_counter()
    outdir = _outdir(config, args)
    grid = config.build_grid()
    table = make_table(grid)
    exp = config.experiment()
    if "truth" not in exp:
        raise ConfigError("data generation needs a truth reflectivity", field="experiment.truth")
    eta_truth = resolve_eta(exp["truth"], grid)
    bank = _build_bank(config, grid)
    dataset = generate_dataset(
        grid,
        table,
        bank,
        eta_truth,
        noise_level=exp["noise_level"],
        noise_kind=exp["noise_kind"],
        seed=exp["seed"] if exp["noise_level"] > 0 else None,
        jobs=args.jobs,
    )
    digest = save_dataset(dataset, outdir / "dataset.csv")
    print(f"wrote dataset.csv ({dataset.n_injections}x{dataset.n_measurements}, sha256 {digest[:12]})")
    _write_metadata(
        outdir,
        "generate",
        config,
        started,
        {
            "dataset_hash": digest,
            "measurement_nodes": bank.psi_nodes.tolist(),
        },
    )
    return EXIT_OK


def _initial_guesses(config: RunConfig, grid):
    inv = config.inversion()
    mode = inv.get("mode")
    if mode not in ("parametrized", "free"):
        raise ConfigError("mode must be 'parametrized' or 'free'", field="inversion.mode")
    spec = inv.get("initial_guess")
    if spec is None:
        raise ConfigError("missing initial guess", field="inversion.initial_guess")
    if mode == "parametrized":
        specs = spec if isinstance(spec, list) else [spec]
        return [resolve_tanh_params(s) for s in specs]
    if isinstance(spec, list):
        raise ConfigError("free mode takes a single guess", field="inversion.initial_guess")
    return [resolve_eta(spec, grid)]


def cmd_reconstruct(config: RunConfig, args) -> int:
    started = time.perf_counter()
    outdir = _outdir(config, args)
    grid = config.build_grid()
    table = make_table(grid)
    exp = config.experiment()
    inv = config.inversion()
    bank = _build_bank(config, grid)

    eta_ref = resolve_eta(exp["truth"], grid) if "truth" in exp else None
    if inv.get("dataset"):
        dataset = load_dataset(inv["dataset"])
        expected = (bank.n_injections, bank.n_measurements)
        if dataset.values.shape != expected:
            raise ConfigError(
                f"dataset shape {dataset.values.shape} does not match the "
                f"experiment bank {expected}",
                field="inversion.dataset",
            )
    else:
        if eta_ref is None:
            raise ConfigError(
                "need either a dataset path or a truth reflectivity",
                field="inversion.dataset",
            )
        dataset = generate_dataset(
            grid,
            table,
            bank,
            eta_ref,
            noise_level=exp["noise_level"],
            noise_kind=exp["noise_kind"],
            seed=exp["seed"] if exp["noise_level"] > 0 else None,
            jobs=args.jobs,
        )

    alpha = inv["alpha"]
    alpha = None if alpha == "auto" else float(alpha)
    guesses = _initial_guesses(config, grid)
    runs_meta = []
    for k, guess in enumerate(guesses):
        result = run_reconstruction(
            grid,
            table,
            bank,
            dataset,
            init=guess,
            seed=inv["seed"],
            alpha=alpha,
            step_target=inv["step_target"],
            step_limit=inv["step_limit"],
            decay_iterations=inv["decay_iterations"],
            max_iterations=inv["max_iterations"],
            stop_tol=inv["stop_tol"],
            eta_ref=eta_ref,
            snapshot_iterations=inv["snapshot_iterations"],
        )
        state = result.state
        columns = ["n", "i", "j", "sample_loss"]
        if eta_ref is not None:
            columns.append("error")
        if state.mode == "tanh":
            columns += ["a", "b"]
        rows = []
        for n in range(result.iterations):
            row = [
                str(n + 1),
                str(state.gamma_history[n][0]),
                str(state.gamma_history[n][1]),
                _fmt(result.loss_history[n]),
            ]
            if eta_ref is not None:
                row.append(_fmt(result.error_history[n]))
            if state.mode == "tanh":
                row += [_fmt(result.param_history[n][0]), _fmt(result.param_history[n][1])]
            rows.append(row)
        _write_rows(outdir / f"history_{k}.csv", ",".join(columns), rows)
        _write_rows(
            outdir / f"eta_final_{k}.csv",
            "omega,eta",
            ([_fmt(w)] + [_fmt(v)] for w, v in zip(grid.omega, result.eta)),
        )
        for n, snapshot in sorted(result.eta_snapshots.items()):
            _write_rows(
                outdir / f"eta_iter{n}_{k}.csv",
                "omega,eta",
                ([_fmt(w)] + [_fmt(v)] for w, v in zip(grid.omega, snapshot)),
            )
        summary = {
            "guess_index": k,
            "alpha": result.alpha,
            "iterations": result.iterations,
            "stop_reason": result.stop_reason,
            "rejected_steps": state.rejected_steps,
        }
        if state.mode == "tanh":
            summary["final_params"] = [result.params.a, result.params.b]
        if eta_ref is not None and result.error_history.size:
            summary["final_error"] = float(result.error_history[-1])
        runs_meta.append(summary)
        line = f"run {k}: alpha={result.alpha:.6g} iters={result.iterations}"
        if "final_error" in summary:
            line += f" error={summary['final_error']:.6g}"
        print(line)

    _write_metadata(
        outdir,
        "reconstruct",
        config,
        started,
        {
            "dataset_hash": dataset.content_hash(),
            "seed_sgd": inv["seed"],
            "seed_data": exp["seed"],
            "runs": runs_meta,
        },
    )
    return EXIT_OK


def _verify_grid(config: RunConfig):
    if config.sections.get("grid"):
        return config.build_grid()
    return coarse_grid()


def cmd_verify(config: RunConfig, args) -> int:
    started = time.perf_counter()
    outdir = _outdir(config, args)
    opts = config.verify()
    grid = _verify_grid(config)
    table = make_table(grid)
    truth = TanhParams(1.5, 1.0).to_eta(grid)
    idx = int(np.argmin(np.abs(grid.omega - 1.5)))
    phi = BoundarySource.kronecker_index(grid, idx)
    psi = MeasurementFunctional.kronecker_time(grid)
    rows = []

    def probe(name, value, threshold, larger_ok=False):
        ok = value >= threshold if larger_ok else value <= threshold
        rows.append((name, value, threshold, ok))
        flag = "pass" if ok else "FAIL"
        print(f"{name:<22} {value: .3e}  (threshold {threshold:.3e})  {flag}")

    probe(
        "conservation",
        conservation_probe(grid, table, trials=opts["trials"], seed=opts["seed"]),
        1e-12,
    )
    probe("equilibrium", equilibrium_residual(grid, table), 1e-12)
    probe(
        "self_adjoint",
        selfadjoint_probe(grid, table, trials=opts["trials"], seed=opts["seed"]),
        1e-12,
    )

    init = np.broadcast_to(table.kernel, (grid.n_x, grid.n_mu, grid.n_omega)).copy()
    steady = forward_solve(
        grid, table, 1.0, BoundarySource.equilibrium(grid, table), init=init,
        store_trajectory=True,
    )
    probe("steady_state", float(np.abs(steady.trajectory - table.kernel).max()), 1e-12)

    wave = forward_solve(grid, table, truth, phi)
    probe("positivity", wave.min_value, -1e-12, larger_ok=True)

    rng = np.random.default_rng(opts["seed"])
    low = rng.uniform(0.0, 0.45, grid.n_omega)
    high = low + rng.uniform(0.0, 0.5, grid.n_omega)
    probe("monotonicity", monotonicity_check(grid, table, phi, high, low), -1e-12,
          larger_ok=True)
    probe(
        "convexity",
        convexity_sweep(grid, table, phi, high, low).worst_margin,
        -1e-10,
        larger_ok=True,
    )

    check = gradient_check(grid, table, truth, phi, psi, step=opts["fd_step"], jobs=args.jobs)
    probe("gradient_fd", check.rel_l2_error, opts["gradient_rtol"])
    if opts["refine"]:
        fine = make_grid(
            x_max=grid.x_max,
            dx=grid.dx / 2,
            t_max=grid.t_max,
            dt=grid.dt / 2,
            dmu=grid.dmu / 2,
            omega_min=grid.omega_min,
            omega_max=grid.omega_max,
            domega=grid.domega / 2,
        )
        fine_table = make_table(fine)
        fine_truth = TanhParams(1.5, 1.0).to_eta(fine)
        fine_idx = int(np.argmin(np.abs(fine.omega - 1.5)))
        fine_check = gradient_check(
            fine,
            fine_table,
            fine_truth,
            BoundarySource.kronecker_index(fine, fine_idx),
            MeasurementFunctional.kronecker_time(fine),
            step=opts["fd_step"],
            jobs=args.jobs,
        )
        ratio = fine_check.rel_l2_error / check.rel_l2_error if check.rel_l2_error else 0.0
        probe("gradient_refinement", ratio, opts["refinement_ratio"])

    _write_rows(
        outdir / "verify.csv",
        "probe,value,threshold,passed",
        ([name, _fmt(v), _fmt(t), str(ok).lower()] for name, v, t, ok in rows),
    )
    failed = [name for name, _, _, ok in rows if not ok]
    _write_metadata(outdir, "verify", config, started, {"failed": failed})
    if failed:
        print(f"FAILED probes: {', '.join(failed)}")
        return EXIT_VERIFY
    print("all probes passed")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="phonrec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"phonrec {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--preset", help="named built-in configuration")
    common.add_argument("--out", help="output directory (default from config)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--seed-sgd", type=int, default=None, dest="seed_sgd",
                        help="override the descent sampling seed")
    common.add_argument("--seed-data", type=int, default=None, dest="seed_data",
                        help="override the experiment/data seed")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    handlers = {
        "forward": cmd_forward,
        "adjoint": cmd_adjoint,
        "generate": cmd_generate,
        "reconstruct": cmd_reconstruct,
        "verify": cmd_verify,
    }
    descriptions = {
        "forward": "solve the forward problem and export the surface trace",
        "adjoint": "solve the adjoint problem and export snapshots",
        "generate": "synthesize a measurement dataset",
        "reconstruct": "run the stochastic reflectivity reconstruction",
        "verify": "run the verification probe battery",
    }
    for name, handler in handlers.items():
        p = sub.add_parser(name, parents=[common], help=descriptions[name],
                           description=descriptions[name])
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _resolve_run_config(args)
        return args.handler(config, args)
    except (ConfigError, DatasetFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverBlowupError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PhonrecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its measured numbers.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines.
The reconstruction criteria run the full 3000-iteration budget on the
desk-scale verification grid, so the whole module takes a few minutes.
"""

import time

import numpy as np
import pytest
import yaml

from phonrec import (
    BoundarySource,
    MeasurementFunctional,
    TanhParams,
    collide,
    compute_measurements,
    convexity_sweep,
    forward_solve,
    generate_dataset,
    gradient_check,
    make_bank,
    make_grid,
    make_table,
    monotonicity_check,
    reconstruction_error,
    run_reconstruction,
    selfadjoint_probe,
)
from phonrec.cli import main as cli_main


def _report(number, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {number:2d}] {name}: {status} ({detail})")
    assert ok, f"criterion {number} {name}: {detail}"


@pytest.fixture(scope="module")
def acceptance():
    """Verification grid, truth reflectivity and the clean dataset."""
    grid = make_grid(x_max=0.5, n_x=10, t_max=5.0, n_t=250, n_mu=20, n_omega=20)
    table = make_table(grid)
    truth = TanhParams(1.5, 1.0)
    eta_ref = truth.to_eta(grid)
    bank = make_bank(grid, grid.n_omega, 1)
    clean = generate_dataset(grid, table, bank, eta_ref)
    return grid, table, truth, eta_ref, bank, clean


def test_criterion_01_conservation(acceptance):
    grid, table, *_ = acceptance
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        g = rng.standard_normal((grid.n_mu, grid.n_omega))
        worst = max(worst, abs(grid.bracket(collide(g, table))) / np.abs(g).max())
    elapsed = time.perf_counter() - started
    _report(
        1, "discrete conservation", worst <= 1e-12,
        f"max |<Lg>|/||g|| = {worst:.2e} <= 1e-12, {elapsed:.2f}s",
    )


def test_criterion_02_equilibrium_fixed_point(acceptance):
    grid, table, *_ = acceptance
    started = time.perf_counter()
    init = np.broadcast_to(table.kernel, (grid.n_x, grid.n_mu, grid.n_omega)).copy()
    solution = forward_solve(
        grid, table, 1.0, BoundarySource.equilibrium(grid, table),
        init=init, store_trajectory=True,
    )
    drift = float(np.abs(solution.trajectory - table.kernel).max())
    elapsed = time.perf_counter() - started
    _report(
        2, "equilibrium fixed point", drift <= 1e-12,
        f"max |g(t) - g_eq| = {drift:.2e} <= 1e-12, {elapsed:.2f}s",
    )


def test_criterion_03_self_adjointness(acceptance):
    grid, table, *_ = acceptance
    started = time.perf_counter()
    worst = selfadjoint_probe(grid, table, trials=100, seed=303)
    elapsed = time.perf_counter() - started
    _report(
        3, "collision self-adjointness", worst <= 1e-12,
        f"max normalized discrepancy = {worst:.2e} <= 1e-12, {elapsed:.2f}s",
    )


def test_criterion_04_gradient_correctness(acceptance):
    grid, table, truth, eta_ref, bank, _ = acceptance
    started = time.perf_counter()
    idx = int(np.argmin(np.abs(grid.omega - 1.5)))
    psi = MeasurementFunctional.kronecker_time(grid)
    coarse_report = gradient_check(grid, table, eta_ref, bank.phis[idx], psi)

    fine = make_grid(x_max=0.5, n_x=20, t_max=5.0, n_t=500, n_mu=40, n_omega=39)
    fine_table = make_table(fine)
    fine_idx = int(np.argmin(np.abs(fine.omega - 1.5)))
    fine_report = gradient_check(
        fine, fine_table, truth.to_eta(fine),
        BoundarySource.kronecker_index(fine, fine_idx),
        MeasurementFunctional.kronecker_time(fine),
    )
    ratio = fine_report.rel_l2_error / coarse_report.rel_l2_error
    elapsed = time.perf_counter() - started
    _report(
        4, "adjoint gradient vs finite differences",
        coarse_report.rel_l2_error <= 0.02 and ratio <= 0.6,
        f"rel l2 = {coarse_report.rel_l2_error:.2e} <= 2%, refinement ratio "
        f"= {ratio:.3f} <= 0.6, {elapsed:.1f}s",
    )


def test_criterion_05_monotonicity_and_convexity(acceptance):
    grid, table, *_ = acceptance
    started = time.perf_counter()
    idx = int(np.argmin(np.abs(grid.omega - 1.5)))
    phi = BoundarySource.kronecker_index(grid, idx)
    rng = np.random.default_rng(505)
    alphas = np.arange(1, 10) / 10.0
    worst_mono = np.inf
    worst_margin = np.inf
    for _ in range(20):
        low = rng.uniform(0.0, 0.5, grid.n_omega)
        high = np.clip(low + rng.uniform(0.0, 0.5, grid.n_omega), 0.0, 1.0)
        worst_mono = min(worst_mono, monotonicity_check(grid, table, phi, high, low))
        sweep = convexity_sweep(grid, table, phi, high, low, alphas=alphas)
        worst_margin = min(worst_margin, sweep.worst_margin)
    elapsed = time.perf_counter() - started
    _report(
        5, "monotonicity and midpoint convexity",
        worst_mono >= -1e-12 and worst_margin >= -1e-10,
        f"min(g_hi - g_lo) = {worst_mono:.2e} >= -1e-12, worst convexity "
        f"margin = {worst_margin:.2e} >= -1e-10, {elapsed:.1f}s",
    )


def test_criterion_06_parametrized_reconstruction(acceptance):
    grid, table, truth, eta_ref, bank, clean = acceptance
    started = time.perf_counter()
    details = []
    ok = True
    for guess in (TanhParams(1.0, 1.5), TanhParams(2.0, 0.4), TanhParams(2.0, 1.5)):
        result = run_reconstruction(
            grid, table, bank, clean, init=guess, seed=7,
            max_iterations=3000, eta_ref=eta_ref,
        )
        err0 = reconstruction_error(guess.to_eta(grid), eta_ref)
        err_final = float(result.error_history[-1])
        good = (
            abs(result.params.a - 1.5) <= 0.05
            and abs(result.params.b - 1.0) <= 0.05
            and err_final <= 0.1 * err0
        )
        ok = ok and good
        details.append(
            f"({guess.a},{guess.b})->({result.params.a:.3f},{result.params.b:.3f}) "
            f"err {err0:.3f}->{err_final:.4f}"
        )
    elapsed = time.perf_counter() - started
    _report(6, "two-parameter reconstruction", ok,
            "; ".join(details) + f", {elapsed:.0f}s")


def test_criterion_07_free_reconstruction(acceptance):
    grid, table, truth, eta_ref, bank, clean = acceptance
    started = time.perf_counter()
    eta0 = np.full(grid.n_omega, 0.5)
    result = run_reconstruction(
        grid, table, bank, clean, init=eta0, seed=11,
        max_iterations=3000, eta_ref=eta_ref,
    )
    err = result.error_history
    err0 = reconstruction_error(eta0, eta_ref)
    saturation = abs(err[-1] - err[2499]) / err[2499]
    elapsed = time.perf_counter() - started
    _report(
        7, "free per-node reconstruction",
        err[-1] <= 0.2 * err0 and saturation <= 0.05,
        f"err {err0:.3f}->{err[-1]:.4f} (<= {0.2 * err0:.3f}), last-500 "
        f"relative change {saturation:.3f} <= 0.05, {elapsed:.0f}s",
    )


def test_criterion_08_noisy_reconstruction(acceptance):
    grid, table, truth, eta_ref, *_ = acceptance
    started = time.perf_counter()
    bank = make_bank(grid, grid.n_omega, 50, measurement_window=(4.5, 5.0), seed=3)
    noisy = generate_dataset(
        grid, table, bank, eta_ref, noise_level=0.025, seed=21
    )
    eta0 = np.full(grid.n_omega, 0.5)
    err0 = reconstruction_error(eta0, eta_ref)
    ok = True
    details = []
    for seed in (1, 2, 3):
        result = run_reconstruction(
            grid, table, bank, noisy, init=eta0, seed=seed,
            max_iterations=3000, eta_ref=eta_ref,
        )
        err = result.error_history
        final = float(err[-1])
        mid = float(np.mean(err[1000:1500]))
        late = float(np.mean(err[2500:]))
        decayed = mid <= 0.5 * err0
        saturated = late >= 0.5 * mid  # plateau: no continuing strong decay
        good = final <= 0.5 * err0 and decayed and saturated
        ok = ok and good
        details.append(f"seed {seed}: {err0:.3f}->{final:.4f} (plateau {late:.3f})")
    elapsed = time.perf_counter() - started
    _report(8, "noisy-data reconstruction", ok,
            "; ".join(details) + f" (all <= {0.5 * err0:.3f}), {elapsed:.0f}s")


def test_criterion_09_loss_landscape(acceptance):
    grid, table, truth, eta_ref, bank, clean = acceptance
    started = time.perf_counter()
    a_values = np.round(np.arange(1.0, 2.0 + 1e-9, 0.1), 10)
    b_values = np.round(np.arange(0.5, 1.5 + 1e-9, 0.1), 10)
    landscape = np.empty((a_values.size, b_values.size))
    for ia, a in enumerate(a_values):
        for ib, b in enumerate(b_values):
            eta = TanhParams(float(a), float(b)).to_eta(grid)
            values = compute_measurements(grid, table, bank, eta)
            landscape[ia, ib] = float(np.mean((values - clean.values) ** 2))
    ia, ib = np.unravel_index(np.argmin(landscape), landscape.shape)
    minimizer = (float(a_values[ia]), float(b_values[ib]))
    elapsed = time.perf_counter() - started
    _report(
        9, "loss landscape minimum", minimizer == (1.5, 1.0),
        f"argmin = {minimizer} == (1.5, 1.0), {elapsed:.0f}s",
    )


def test_criterion_10_cli_determinism(tmp_path):
    started = time.perf_counter()
    sections = {
        "grid": {"x_max": 0.5, "n_x": 10, "t_max": 5.0, "n_t": 250, "n_mu": 20,
                 "n_omega": 20},
        "experiment": {
            "n_injections": 20,
            "truth": {"tanh": {"a": 1.5, "b": 1.0}},
            "noise_level": 0.025,
            "n_measurements": 10,
            "seed": 5,
        },
        "inversion": {
            "mode": "free",
            "initial_guess": {"constant": 0.5},
            "max_iterations": 200,
            "seed": 11,
            "snapshot_iterations": [100],
        },
    }
    cfg = tmp_path / "run.yaml"
    with open(cfg, "w") as fh:
        yaml.safe_dump(sections, fh)
    bodies = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert cli_main(["reconstruct", "--config", str(cfg), "--out", str(out)]) == 0
        bodies.append({
            name: (out / name).read_bytes()
            for name in ("history_0.csv", "eta_final_0.csv", "eta_iter100_0.csv")
        })
    identical = bodies[0] == bodies[1]
    elapsed = time.perf_counter() - started
    _report(
        10, "repeatable command-line runs", identical,
        f"CSV bodies byte-identical across reruns, {elapsed:.0f}s",
    )

"""Independent verification probes for the solvers and the gradient.

Everything here deliberately avoids the adjoint path: finite differences
drive extra forward solves, the algebraic probes draw random fields and
evaluate the collision operator directly. The probes are deterministic
under their seeds.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .adjoint import MeasurementFunctional, adjoint_gradient, adjoint_solve
from .grid import PhaseGrid
from .physics import MaxwellianTable, collide
from .transport import BoundarySource, as_reflectivity, forward_solve

__all__ = [
    "central_differences",
    "fd_gradient",
    "GradientCheckReport",
    "gradient_check",
    "ConvexityReport",
    "convexity_sweep",
    "monotonicity_check",
    "selfadjoint_probe",
    "conservation_probe",
    "equilibrium_residual",
]


def _measure(grid, table, eta, phi, psi) -> float:
    solution = forward_solve(grid, table, eta, phi)
    return psi.apply(solution.surface_delta_t)


def central_differences(fn, x, *, step: float) -> np.ndarray:
    """Plain central-difference gradient of a scalar function of a vector.

    Exact (up to rounding) for affine ``fn``; the building block the
    reflectivity-specific :func:`fd_gradient` refines with bound handling.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.size)
    for l in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[l] += step
        xm[l] -= step
        out[l] = (fn(xp) - fn(xm)) / (2.0 * step)
    return out


def _fd_component(args):
    grid, table, eta, phi, psi, l, step = args
    room = min(float(eta[l]), 1.0 - float(eta[l]))
    h = min(step, room)
    if h > 1e-9:
        ep = eta.copy()
        em = eta.copy()
        ep[l] += h
        em[l] -= h
        return (_measure(grid, table, ep, phi, psi) - _measure(grid, table, em, phi, psi)) / (2 * h)
    # iterate sits on a bound: one-sided difference into the feasible side
    sign = 1.0 if eta[l] < 0.5 else -1.0
    e1 = eta.copy()
    e1[l] += sign * step
    return sign * (_measure(grid, table, e1, phi, psi) - _measure(grid, table, eta, phi, psi)) / step


def fd_gradient(
    grid: PhaseGrid,
    table: MaxwellianTable,
    eta,
    phi: BoundarySource,
    psi: MeasurementFunctional,
    *,
    step: float = 1e-3,
    jobs: int = 1,
) -> np.ndarray:
    """Central-difference derivative of one measurement per omega node.

    Costs two forward solves per node. The step shrinks where eta sits
    close to the [0, 1] bounds, falling back to a one-sided difference at a
    bound. Components parallelize across processes with ``jobs > 1``.
    """
    if step <= 0:
        raise ValueError(f"fd step must be positive, got {step}")
    eta = as_reflectivity(grid, eta)
    tasks = [(grid, table, eta, phi, psi, l, step) for l in range(grid.n_omega)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_fd_component, tasks))
    else:
        out = [_fd_component(t) for t in tasks]
    return np.asarray(out)


@dataclass(frozen=True)
class GradientCheckReport:
    """Adjoint-vs-finite-difference comparison for one measurement.

    The adjoint density is converted to per-component derivatives (times
    the omega weight) before comparison, to match what the finite
    differences measure.
    """

    adjoint_density: np.ndarray
    adjoint_per_component: np.ndarray
    fd_per_component: np.ndarray
    rel_l2_error: float
    fd_step: float
    grid_shape: tuple

    def passed(self, rtol: float) -> bool:
        return self.rel_l2_error <= rtol


def gradient_check(
    grid: PhaseGrid,
    table: MaxwellianTable,
    eta,
    phi: BoundarySource,
    psi: MeasurementFunctional,
    *,
    step: float = 1e-3,
    jobs: int = 1,
) -> GradientCheckReport:
    """Compare the adjoint gradient of one measurement against finite
    differences; the relative error is in the l2 norm over omega nodes."""
    eta = as_reflectivity(grid, eta)
    fd = fd_gradient(grid, table, eta, phi, psi, step=step, jobs=jobs)
    forward = forward_solve(grid, table, eta, phi)
    adj = adjoint_solve(grid, table, eta, psi)
    density = adjoint_gradient(table, forward, adj)
    per_component = density * grid.domega
    denom = np.linalg.norm(fd)
    rel = float(np.linalg.norm(per_component - fd) / denom) if denom > 0 else float(
        np.linalg.norm(per_component)
    )
    return GradientCheckReport(
        adjoint_density=density,
        adjoint_per_component=per_component,
        fd_per_component=fd,
        rel_l2_error=rel,
        fd_step=step,
        grid_shape=(grid.n_x, grid.n_mu, grid.n_omega, grid.n_steps),
    )


@dataclass(frozen=True)
class ConvexityReport:
    """Worst surface-temperature convexity margin over blend weights."""

    alphas: np.ndarray
    margins: np.ndarray
    worst_margin: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.worst_margin >= -self.tol


def convexity_sweep(
    grid: PhaseGrid,
    table: MaxwellianTable,
    phi: BoundarySource,
    eta_high,
    eta_low,
    alphas=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    *,
    tol: float = 1e-10,
) -> ConvexityReport:
    """Check midpoint convexity of the surface temperature in the
    reflectivity: for ordered eta_high >= eta_low and every blend weight,
    ``a*dT_high + (1-a)*dT_low >= dT_blend`` at every time level.

    The margin reported per weight is the minimum over time of the left
    side minus the right side.
    """
    eta_high = as_reflectivity(grid, eta_high)
    eta_low = as_reflectivity(grid, eta_low)
    if np.any(eta_high < eta_low):
        raise ValueError("requires eta_high >= eta_low pointwise")
    dt_high = forward_solve(grid, table, eta_high, phi).surface_delta_t
    dt_low = forward_solve(grid, table, eta_low, phi).surface_delta_t
    alphas = np.asarray(alphas, dtype=np.float64)
    margins = np.empty(alphas.size)
    for n, a in enumerate(alphas):
        blend = forward_solve(grid, table, a * eta_high + (1 - a) * eta_low, phi)
        margins[n] = float(
            np.min(a * dt_high + (1 - a) * dt_low - blend.surface_delta_t)
        )
    return ConvexityReport(
        alphas=alphas,
        margins=margins,
        worst_margin=float(margins.min()),
        tol=tol,
    )


def monotonicity_check(
    grid: PhaseGrid,
    table: MaxwellianTable,
    phi: BoundarySource,
    eta_high,
    eta_low,
) -> float:
    """Minimum of ``g_high - g_low`` over the whole trajectory.

    For nonnegative inflow and ordered reflectivities the difference
    should stay nonnegative everywhere.
    """
    eta_high = as_reflectivity(grid, eta_high)
    eta_low = as_reflectivity(grid, eta_low)
    if np.any(eta_high < eta_low):
        raise ValueError("requires eta_high >= eta_low pointwise")
    sol_high = forward_solve(grid, table, eta_high, phi, store_trajectory=True)
    sol_low = forward_solve(grid, table, eta_low, phi, store_trajectory=True)
    return float(np.min(sol_high.trajectory - sol_low.trajectory))


def selfadjoint_probe(
    grid: PhaseGrid,
    table: MaxwellianTable,
    *,
    trials: int = 100,
    seed: int = 0,
) -> float:
    """Largest normalized violation of collision self-adjointness.

    For random field pairs (g, h) on the (mu, omega) nodes, compares
    ``<Lg * h / kernel>`` with ``<Lh * g / kernel>``, normalized by the
    product of the max norms.
    """
    rng = np.random.default_rng(seed)
    shape = (grid.n_mu, grid.n_omega)
    worst = 0.0
    for _ in range(trials):
        g = rng.standard_normal(shape)
        h = rng.standard_normal(shape)
        lhs = grid.bracket(collide(g, table) * h / table.kernel)
        rhs = grid.bracket(collide(h, table) * g / table.kernel)
        scale = np.abs(g).max() * np.abs(h).max()
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def conservation_probe(
    grid: PhaseGrid,
    table: MaxwellianTable,
    *,
    trials: int = 100,
    seed: int = 0,
) -> float:
    """Largest ``|<Lg>| / ||g||_inf`` over random fields (should vanish)."""
    rng = np.random.default_rng(seed)
    shape = (grid.n_mu, grid.n_omega)
    worst = 0.0
    for _ in range(trials):
        g = rng.standard_normal(shape)
        moment = grid.bracket(collide(g, table))
        worst = max(worst, abs(moment) / np.abs(g).max())
    return worst


def equilibrium_residual(grid: PhaseGrid, table: MaxwellianTable) -> float:
    """Max norm of the collision operator applied to the equilibrium kernel."""
    g = np.broadcast_to(table.kernel, (grid.n_mu, grid.n_omega))
    return float(np.abs(collide(g, table)).max())

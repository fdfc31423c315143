"""Explicit upwind / discrete-ordinates marching for the forward problem.

Kinetic fields are plain float64 arrays of shape (n_x, n_mu, n_omega); the
axes always mean (cell, velocity node, frequency node) in grid order.

One time step combines first-order upwind transport per (mu, omega) ordinate
with an explicit Euler treatment of the relaxation collision operator, in a
single unsplit update. Boundary values live in ghost cells: the heated
surface at x = 0 supplies the inflow for mu > 0, and the interface at
x = x_max returns ``eta(omega) * g(x_max, -mu, omega)`` to the ordinates with
mu < 0, using the same-time-level outgoing value. Surface temperature and
the outgoing interface trace are recorded at every time level; the full
trajectory is kept only on request.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernel import march
from .errors import ShapeError, SolverBlowupError
from .grid import PhaseGrid
from .physics import MaxwellianTable

__all__ = [
    "BoundarySource",
    "ForwardSolution",
    "MaxPrincipleReport",
    "as_reflectivity",
    "forward_solve",
    "max_principle_check",
]


def as_reflectivity(grid: PhaseGrid, eta) -> np.ndarray:
    """Validate a per-frequency reflection coefficient against a grid.

    Accepts a scalar (broadcast to all omega nodes) or a vector over the
    omega nodes; every entry must lie in [0, 1].
    """
    eta = np.asarray(eta, dtype=np.float64)
    if eta.ndim == 0:
        eta = np.full(grid.n_omega, float(eta))
    if eta.shape != (grid.n_omega,):
        raise ShapeError(
            f"reflectivity must have shape ({grid.n_omega},), got {eta.shape}"
        )
    if not np.all(np.isfinite(eta)):
        raise ValueError("reflectivity contains non-finite entries")
    if eta.min() < 0.0 or eta.max() > 1.0:
        raise ValueError(
            f"reflectivity must lie in [0, 1], got range "
            f"[{eta.min():.6g}, {eta.max():.6g}]"
        )
    return eta


@dataclass(frozen=True)
class BoundarySource:
    """Inflow data at the heated surface, defined on the mu > 0 nodes.

    ``values`` is either (n_mu/2, n_omega) for time-constant sources or
    (n_t + 1, n_mu/2, n_omega) for time-dependent ones.
    """

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        h, n_om = self.grid.n_mu_half, self.grid.n_omega
        if values.shape not in ((h, n_om), (self.grid.n_steps + 1, h, n_om)):
            raise ShapeError(
                f"boundary source must have shape ({h}, {n_om}) or "
                f"({self.grid.n_steps + 1}, {h}, {n_om}), got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("boundary source contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def is_static(self) -> bool:
        return self.values.ndim == 2

    def value_at(self, step: int) -> np.ndarray:
        return self.values if self.is_static else self.values[step]

    @property
    def norm_inf(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, grid: PhaseGrid) -> "BoundarySource":
        return cls(grid, np.zeros((grid.n_mu_half, grid.n_omega)))

    @classmethod
    def kronecker_omega(cls, grid: PhaseGrid, omega: float, amplitude: float = 1.0):
        """Single-frequency injection: ``amplitude`` at the node nearest omega.

        The target frequency must sit within half a spacing of a node.
        """
        idx = int(np.argmin(np.abs(grid.omega - omega)))
        if abs(grid.omega[idx] - omega) > 0.5 * grid.domega + 1e-12:
            raise ValueError(
                f"omega={omega} is not on the frequency grid "
                f"(nearest node {grid.omega[idx]:.6g})"
            )
        values = np.zeros((grid.n_mu_half, grid.n_omega))
        values[:, idx] = amplitude
        return cls(grid, values)

    @classmethod
    def kronecker_index(cls, grid: PhaseGrid, index: int, amplitude: float = 1.0):
        """Single-frequency injection at omega node ``index``."""
        if not 0 <= index < grid.n_omega:
            raise ValueError(f"omega index {index} out of range [0, {grid.n_omega})")
        values = np.zeros((grid.n_mu_half, grid.n_omega))
        values[:, index] = amplitude
        return cls(grid, values)

    @classmethod
    def equilibrium(cls, grid: PhaseGrid, table: MaxwellianTable):
        """Inflow equal to the equilibrium kernel (steady-state driver)."""
        values = np.broadcast_to(table.kernel, (grid.n_mu_half, grid.n_omega))
        return cls(grid, np.array(values))


@dataclass
class ForwardSolution:
    """Outputs of one forward solve.

    ``surface_delta_t[m]`` is the surface temperature at time level m,
    computed from the composite boundary value at x = 0 (prescribed inflow
    for mu > 0, outgoing first-cell value for mu < 0).
    ``interface_outgoing[m]`` is g at the last cell restricted to mu > 0,
    exactly the trace the reflectivity gradient needs.
    """

    grid: PhaseGrid
    surface_delta_t: np.ndarray
    interface_outgoing: np.ndarray
    min_value: float
    max_abs: float
    inflow_norm: float
    trajectory: np.ndarray | None = None
    snapshots: dict[int, np.ndarray] | None = None


def _snapshot_nodes(grid: PhaseGrid, snapshot_times) -> list[int]:
    nodes = []
    for t_req in snapshot_times:
        node = int(round(float(t_req) / grid.dt))
        if not 0 <= node <= grid.n_steps:
            raise ValueError(f"snapshot time {t_req} outside [0, {grid.t_max}]")
        nodes.append(node)
    return nodes


def _march(
    grid: PhaseGrid,
    table: MaxwellianTable,
    eta: np.ndarray,
    inflow: np.ndarray,
    *,
    init: np.ndarray | None,
    guard_scale: float,
    record_surface: bool,
    store_trajectory: bool,
    snapshot_nodes: list[int],
    blowup_factor: float,
    interface: np.ndarray | None = None,
):
    """Run the jitted marching kernel; returns recorded arrays and extrema.

    ``inflow`` holds the x = 0 ghost values for mu > 0, with leading time
    axis of size 1 (static) or n_steps + 1. ``interface``, when given,
    prescribes the x = x_max ghost for mu < 0 the same way instead of the
    reflective closure.
    """
    n_x, n_mu, n_om = grid.n_x, grid.n_mu, grid.n_omega
    h = grid.n_mu_half
    n_steps = grid.n_steps
    dt = grid.dt

    omega = grid.omega
    abs_mu = np.abs(grid.mu)
    carry = (dt / grid.dx) * abs_mu[:, None] * omega[None, :]
    stay = 1.0 - carry - dt * omega[None, :]
    gain = dt * table.maxwellian
    quad = grid.w_mu[:, None] * (grid.w_omega * omega)[None, :]
    surf_w = grid.dmu * grid.w_omega * omega

    g = np.zeros((n_x, n_mu, n_om)) if init is None else np.array(init, dtype=np.float64)
    if g.shape != (n_x, n_mu, n_om):
        raise ShapeError(f"initial field must have shape {(n_x, n_mu, n_om)}, got {g.shape}")
    if inflow.ndim == 2:
        inflow = inflow[None, :, :]

    surface = np.zeros(n_steps + 1 if record_surface else 1)
    trace = np.empty((n_steps + 1, h, n_om))
    trajectory = np.empty((n_steps + 1, n_x, n_mu, n_om) if store_trajectory else (1, 1, 1, 1))
    nodes = np.asarray(sorted(set(snapshot_nodes)), dtype=np.int64)
    snap_buf = np.empty((nodes.size, n_x, n_mu, n_om) if nodes.size else (0, 1, 1, 1))
    if interface is None:
        use_interface = False
        interface_arr = np.zeros((1, h, n_om))
    else:
        use_interface = True
        interface_arr = interface[None, :, :] if interface.ndim == 2 else interface

    guard = blowup_factor * max(guard_scale, 1e-300)
    status, step, min_value, max_value = march(
        np.ascontiguousarray(g),
        n_steps,
        np.ascontiguousarray(inflow),
        np.ascontiguousarray(interface_arr),
        use_interface,
        np.ascontiguousarray(eta),
        stay,
        carry,
        gain,
        quad,
        surf_w,
        table.flux_norm,
        record_surface,
        surface,
        trace,
        store_trajectory,
        trajectory,
        nodes,
        snap_buf,
        guard,
    )
    if status != 0:
        raise SolverBlowupError(
            f"field magnitude exceeded {guard:.3g} at t={step * dt:.6g}"
        )
    snapshots = {int(node): snap_buf[i] for i, node in enumerate(nodes)} if nodes.size else None
    return (
        surface if record_surface else None,
        trace,
        trajectory if store_trajectory else None,
        snapshots,
        float(min_value),
        float(max(abs(min_value), abs(max_value))),
    )


def forward_solve(
    grid: PhaseGrid,
    table: MaxwellianTable,
    eta,
    phi: BoundarySource,
    *,
    init: np.ndarray | None = None,
    store_trajectory: bool = False,
    snapshot_times=(),
    blowup_factor: float = 1e6,
) -> ForwardSolution:
    """March the forward initial-boundary-value problem from t = 0 to t_max.

    The initial field defaults to zero. Raises
    :class:`~phonrec.errors.SolverBlowupError` if the field exceeds
    ``blowup_factor`` times the inflow size.
    """
    eta = as_reflectivity(grid, eta)
    if phi.grid is not grid and phi.values.shape[-2:] != (grid.n_mu_half, grid.n_omega):
        raise ShapeError("boundary source was built for a different grid")
    guard_scale = phi.norm_inf
    if init is not None:
        guard_scale = max(guard_scale, float(np.abs(init).max()))
    surface, trace, trajectory, snapshots, min_value, max_abs = _march(
        grid,
        table,
        eta,
        phi.values,
        init=init,
        guard_scale=guard_scale,
        record_surface=True,
        store_trajectory=store_trajectory,
        snapshot_nodes=_snapshot_nodes(grid, snapshot_times),
        blowup_factor=blowup_factor,
    )
    return ForwardSolution(
        grid=grid,
        surface_delta_t=surface,
        interface_outgoing=trace,
        min_value=min_value,
        max_abs=max_abs,
        inflow_norm=phi.norm_inf,
        trajectory=trajectory,
        snapshots=snapshots,
    )


@dataclass(frozen=True)
class MaxPrincipleReport:
    """Boundedness and sign diagnostics for a completed forward solve."""

    ratio: float
    bound: float | None
    passed: bool
    min_value: float
    nonneg_ok: bool
    trivial: bool


def max_principle_check(
    solution: ForwardSolution,
    *,
    bound: float | None = None,
    nonneg_tol: float = 1e-12,
) -> MaxPrincipleReport:
    """Check ``||g||_inf <= C * ||phi||_inf`` and sign preservation.

    Uses the stored trajectory when available, otherwise the running
    extrema tracked during marching. A zero inflow is reported as a
    trivial pass.
    """
    if solution.trajectory is not None:
        max_abs = float(np.abs(solution.trajectory).max())
        min_value = float(solution.trajectory.min())
    elif solution.max_abs is not None:
        max_abs = solution.max_abs
        min_value = solution.min_value
    else:
        raise ValueError("solution carries neither trajectory nor marching extrema")

    if solution.inflow_norm == 0.0:
        return MaxPrincipleReport(
            ratio=0.0,
            bound=bound,
            passed=True,
            min_value=min_value,
            nonneg_ok=min_value >= -nonneg_tol,
            trivial=True,
        )
    ratio = max_abs / solution.inflow_norm
    nonneg_ok = min_value >= -nonneg_tol * max(solution.inflow_norm, 1.0)
    passed = (bound is None or ratio <= bound) and nonneg_ok
    return MaxPrincipleReport(
        ratio=ratio,
        bound=bound,
        passed=passed,
        min_value=min_value,
        nonneg_ok=nonneg_ok,
        trivial=False,
    )

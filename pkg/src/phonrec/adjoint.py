"""Backward-in-time adjoint transport and the measurement gradient.

The adjoint problem runs the transport equation backward from a zero state
at t_max, with the measurement functional entering through the surface
boundary: ``h(x=0, mu<0, t) = psi(t) * kernel(omega) / mu``. Substituting
s = t_max - t and mirroring the velocity axis turns it into exactly the
forward marching problem, so the same upwind/Euler kernel discretizes both;
all flips are contained here and every public array uses forward time order
and the original velocity labels.

Pairing the adjoint interface trace with the forward one yields the
derivative of a measurement with respect to the reflectivity, one value per
frequency node. The returned vector is a density against the omega
quadrature: multiplying by the omega weight gives the partial derivative
with respect to a single nodal reflectivity value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .grid import PhaseGrid
from .physics import MaxwellianTable
from .transport import ForwardSolution, _march, _snapshot_nodes, as_reflectivity

__all__ = [
    "MeasurementFunctional",
    "AdjointSolution",
    "adjoint_solve",
    "adjoint_gradient",
    "adjoint_pulse_demo",
]


@dataclass(frozen=True)
class MeasurementFunctional:
    """Test function in time applied to the surface temperature at x = 0."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.n_steps + 1,):
            raise ShapeError(
                f"measurement functional must have shape "
                f"({self.grid.n_steps + 1},), got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("measurement functional contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def kronecker_time(cls, grid: PhaseGrid, t: float | None = None):
        """Point measurement at the node nearest ``t`` (default t_max).

        Realized as 1/dt at a single node so the discrete time integral of
        the functional is 1.
        """
        node = grid.n_steps if t is None else int(round(float(t) / grid.dt))
        if not 0 <= node <= grid.n_steps:
            raise ValueError(f"measurement time {t} outside [0, {grid.t_max}]")
        values = np.zeros(grid.n_steps + 1)
        values[node] = 1.0 / grid.dt
        return cls(grid, values)

    @classmethod
    def zero(cls, grid: PhaseGrid):
        return cls(grid, np.zeros(grid.n_steps + 1))

    def apply(self, surface_delta_t: np.ndarray) -> float:
        """Time integral of the functional against a surface trace."""
        return float(np.dot(self.values, surface_delta_t) * self.grid.dt)


@dataclass
class AdjointSolution:
    """Outputs of one adjoint solve, in forward time order.

    ``interface_trace[m]`` holds the adjoint field at the last cell
    restricted to mu < 0 (ascending mu), the half entering the gradient.
    """

    grid: PhaseGrid
    interface_trace: np.ndarray
    min_value: float
    max_abs: float
    trajectory: np.ndarray | None = None
    snapshots: dict[int, np.ndarray] | None = None


def _mollified_inverse_mu(grid: PhaseGrid, width: float) -> np.ndarray:
    """Gaussian smoothing of the 1/mu boundary profile over the mu < 0 nodes."""
    mu = grid.mu_neg
    profile = 1.0 / mu
    kern = np.exp(-0.5 * ((mu[:, None] - mu[None, :]) / width) ** 2)
    return (kern @ (profile * grid.w_mu[: grid.n_mu_half])) / (
        kern @ grid.w_mu[: grid.n_mu_half]
    )


def adjoint_solve(
    grid: PhaseGrid,
    table: MaxwellianTable,
    eta,
    psi: MeasurementFunctional,
    *,
    mollify_mu_width: float | None = None,
    store_trajectory: bool = False,
    snapshot_times=(),
    blowup_factor: float = 1e6,
) -> AdjointSolution:
    """Solve the adjoint problem for one measurement functional.

    ``mollify_mu_width`` optionally smooths the singular 1/mu factor of the
    boundary datum with a Gaussian of that width in mu; by default the raw
    nodal values are used (finite because mu = 0 is never a node).
    """
    eta = as_reflectivity(grid, eta)
    h = grid.n_mu_half
    n_steps = grid.n_steps

    if mollify_mu_width is not None:
        inv_mu_neg = _mollified_inverse_mu(grid, float(mollify_mu_width))
    else:
        inv_mu_neg = 1.0 / grid.mu_neg
    # mirrored onto the mu > 0 slots used by the reversed march
    inv_mu = inv_mu_neg[::-1]
    psi_rev = psi.values[::-1]
    inflow = psi_rev[:, None, None] * (inv_mu[:, None] * table.kernel[None, :])

    surface, trace, trajectory, snapshots, min_value, max_abs = _march(
        grid,
        table,
        eta,
        inflow,
        init=None,
        guard_scale=float(np.abs(inflow).max()),
        record_surface=False,
        store_trajectory=store_trajectory,
        snapshot_nodes=[n_steps - n for n in _snapshot_nodes(grid, snapshot_times)],
        blowup_factor=blowup_factor,
    )

    interface_trace = trace[::-1, ::-1, :].copy()
    if trajectory is not None:
        trajectory = trajectory[::-1, :, ::-1, :].copy()
    if snapshots is not None:
        snapshots = {n_steps - m: field[:, ::-1, :].copy() for m, field in snapshots.items()}
    return AdjointSolution(
        grid=grid,
        interface_trace=interface_trace,
        min_value=min_value,
        max_abs=max_abs,
        trajectory=trajectory,
        snapshots=snapshots,
    )


def adjoint_gradient(
    table: MaxwellianTable,
    forward: ForwardSolution,
    adjoint: AdjointSolution,
) -> np.ndarray:
    """Measurement derivative with respect to the reflectivity, per omega node.

    Pairs the outgoing forward trace with the adjoint trace at the
    interface:

        grad(omega) = (1 / <omega*kernel>) * sum_{t, mu<0}
            mu * omega * h(x_if, mu, omega, t) * g(x_if, -mu, omega, t)
            / kernel(omega) * w_mu * dt

    Both solves must come from the same grid and the same reflectivity.
    The result is a density against the omega quadrature (see module
    docstring).
    """
    grid = forward.grid
    if adjoint.grid is not grid and adjoint.interface_trace.shape != forward.interface_outgoing.shape:
        raise ShapeError("forward and adjoint traces come from different grids")
    if adjoint.interface_trace.shape != forward.interface_outgoing.shape:
        raise ShapeError(
            f"trace shapes differ: {adjoint.interface_trace.shape} vs "
            f"{forward.interface_outgoing.shape}"
        )
    g_mirrored = forward.interface_outgoing[:, ::-1, :]
    pairing = np.einsum(
        "q,mql,mql->l", grid.mu_neg, adjoint.interface_trace, g_mirrored
    )
    return (grid.dmu * grid.dt / table.flux_norm) * grid.omega * pairing / table.kernel


def adjoint_pulse_demo(
    grid: PhaseGrid,
    table: MaxwellianTable,
    *,
    store_trajectory: bool = False,
    snapshot_times=(),
) -> AdjointSolution:
    """Adjoint-equation showcase driven by an interface pulse at t_max.

    Instead of the measurement boundary condition at x = 0, the interface
    ghost value is prescribed as ``W(omega) / (mu * omega * dt)`` at the
    final time only, with ``W(omega) = (10 omega)^3 e^{10 omega} /
    (e^{10 omega} - 1)^2``, and the surface inflow is zero. Viewed backward
    in time the pulse propagates from the interface toward the surface.
    """
    n_steps = grid.n_steps
    y = 10.0 * grid.omega
    weight = y**3 * np.exp(-y) / np.expm1(-y) ** 2
    pulse = weight[None, :] / (grid.mu_neg[:, None] * grid.omega[None, :] * grid.dt)
    interface = np.zeros((n_steps + 1, grid.n_mu_half, grid.n_omega))
    interface[0] = pulse
    zero_inflow = np.zeros((grid.n_mu_half, grid.n_omega))

    surface, trace, trajectory, snapshots, min_value, max_abs = _march(
        grid,
        table,
        as_reflectivity(grid, 0.0),
        zero_inflow,
        init=None,
        guard_scale=float(np.abs(pulse).max()),
        record_surface=False,
        store_trajectory=store_trajectory,
        snapshot_nodes=[n_steps - n for n in _snapshot_nodes(grid, snapshot_times)],
        blowup_factor=1e6,
        interface=interface,
    )
    interface_trace = trace[::-1, ::-1, :].copy()
    if trajectory is not None:
        trajectory = trajectory[::-1, :, ::-1, :].copy()
    if snapshots is not None:
        snapshots = {n_steps - m: field[:, ::-1, :].copy() for m, field in snapshots.items()}
    return AdjointSolution(
        grid=grid,
        interface_trace=interface_trace,
        min_value=min_value,
        max_abs=max_abs,
        trajectory=trajectory,
        snapshots=snapshots,
    )

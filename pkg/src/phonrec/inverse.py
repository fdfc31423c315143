"""Loss functional, stochastic reconstruction loop and the two-parameter
reflectivity family.

One reconstruction iteration samples a single (injection, measurement) pair
uniformly, evaluates its residual with one forward solve and its
reflectivity gradient with one adjoint solve, and applies

    eta_{n+1} = clip( eta_n - 2 * alpha_n * residual * grad, 0, 1 ).

Gradients here are per-component partial derivatives with respect to the
nodal reflectivity values (the adjoint density times the omega quadrature
weight), so the update is plain gradient descent on the sampled squared
residual. In parametrized mode the same gradient is pushed through the
family's jacobian and the (a, b) pair is updated instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adjoint import MeasurementFunctional, adjoint_gradient, adjoint_solve
from .errors import ShapeError
from .grid import PhaseGrid
from .physics import MaxwellianTable
from .transport import BoundarySource, as_reflectivity, forward_solve

__all__ = [
    "TanhParams",
    "tanh_reflectivity",
    "tanh_reflectivity_jacobian",
    "measurement",
    "measurement_gradient",
    "residual",
    "loss",
    "reconstruction_error",
    "update_direction",
    "calibrate_step_size",
    "ReconstructionState",
    "ReconstructionResult",
    "sgd_step",
    "run_reconstruction",
]


# -- reflectivity family ----------------------------------------------------


def tanh_reflectivity(omega, a: float, b: float) -> np.ndarray:
    """Two-parameter family ``(tanh(10(w-a)) - tanh(2(w-b)))/4 + 1/2``.

    Lands strictly inside (0, 1) for any real (a, b).
    """
    omega = np.asarray(omega, dtype=np.float64)
    return (np.tanh(10.0 * (omega - a)) - np.tanh(2.0 * (omega - b))) / 4.0 + 0.5


def tanh_reflectivity_jacobian(omega, a: float, b: float):
    """Partial derivatives of the family with respect to (a, b)."""
    omega = np.asarray(omega, dtype=np.float64)
    d_a = -10.0 * (1.0 - np.tanh(10.0 * (omega - a)) ** 2) / 4.0
    d_b = 2.0 * (1.0 - np.tanh(2.0 * (omega - b)) ** 2) / 4.0
    return d_a, d_b


@dataclass(frozen=True)
class TanhParams:
    """Frequency shifts of the two tanh steps in the reflectivity family."""

    a: float
    b: float

    def to_eta(self, grid: PhaseGrid) -> np.ndarray:
        return tanh_reflectivity(grid.omega, self.a, self.b)


# -- measurements and loss ---------------------------------------------------


def measurement(
    grid: PhaseGrid,
    table: MaxwellianTable,
    eta,
    phi: BoundarySource,
    psi: MeasurementFunctional,
) -> float:
    """Time integral of the surface temperature against one test function."""
    solution = forward_solve(grid, table, eta, phi)
    return psi.apply(solution.surface_delta_t)


def measurement_gradient(
    grid: PhaseGrid,
    table: MaxwellianTable,
    eta,
    phi: BoundarySource,
    psi: MeasurementFunctional,
) -> np.ndarray:
    """Per-component derivative of one measurement w.r.t. nodal reflectivity."""
    forward = forward_solve(grid, table, eta, phi)
    adjoint = adjoint_solve(grid, table, eta, psi)
    return adjoint_gradient(table, forward, adjoint) * grid.domega


def residual(grid, table, eta, bank, dataset, i: int, j: int) -> float:
    """Sampled mismatch ``measurement_ij(eta) - d_ij``."""
    value = measurement(grid, table, eta, bank.phis[i], bank.psis[j])
    return value - dataset.value(i, j)


def loss(grid, table, eta, bank, dataset, *, jobs: int = 1) -> float:
    """Mean squared mismatch over the full (i, j) index set."""
    from .data import compute_measurements  # local import to avoid a cycle

    values = compute_measurements(grid, table, bank, eta, jobs=jobs)
    if values.size == 0:
        raise ValueError("empty dataset")
    return float(np.mean((values - dataset.values) ** 2))


def reconstruction_error(eta, eta_ref) -> float:
    """Plain (unweighted) l2 distance between two nodal reflectivities."""
    eta = np.asarray(eta, dtype=np.float64)
    eta_ref = np.asarray(eta_ref, dtype=np.float64)
    if eta.shape != eta_ref.shape:
        raise ShapeError(f"shape mismatch: {eta.shape} vs {eta_ref.shape}")
    return float(np.linalg.norm(eta - eta_ref))


def update_direction(residual_value: float, gradient: np.ndarray) -> np.ndarray:
    """Descent direction of the sampled squared residual: ``2 L grad``."""
    return 2.0 * residual_value * np.asarray(gradient)


# -- stochastic descent ------------------------------------------------------


@dataclass
class ReconstructionState:
    """Mutable iterate bookkeeping for the stochastic descent loop.

    ``alpha`` may start as None, in which case the first step calibrates it
    so that the first relative iterate change is about ``step_target``.
    Histories are append-only; ``loss_history[n]`` is the sampled squared
    residual at iteration n+1.
    """

    mode: str  # "free" or "tanh"
    eta: np.ndarray
    rng: np.random.Generator
    params: TanhParams | None = None
    alpha: float | None = None
    step_target: float = 0.01
    step_limit: float = 0.05
    decay_iterations: float | None = None
    iteration: int = 0
    last_change: float = np.inf
    rejected_steps: int = 0
    loss_history: list = field(default_factory=list)
    error_history: list = field(default_factory=list)
    param_history: list = field(default_factory=list)
    gamma_history: list = field(default_factory=list)

    @classmethod
    def free(cls, grid, eta0, *, seed, alpha=None, step_target=0.01, step_limit=0.05,
             decay_iterations=None):
        eta = as_reflectivity(grid, np.asarray(eta0, dtype=np.float64))
        return cls(
            mode="free",
            eta=eta.copy(),
            rng=np.random.default_rng(seed),
            alpha=alpha,
            step_target=step_target,
            step_limit=step_limit,
            decay_iterations=decay_iterations,
        )

    @classmethod
    def parametrized(cls, grid, params: TanhParams, *, seed, alpha=None, step_target=0.01,
                     step_limit=0.05, decay_iterations=None):
        return cls(
            mode="tanh",
            eta=params.to_eta(grid),
            rng=np.random.default_rng(seed),
            params=params,
            alpha=alpha,
            step_target=step_target,
            step_limit=step_limit,
            decay_iterations=decay_iterations,
        )

    def step_size(self) -> float:
        if self.alpha is None:
            raise ValueError("step size not calibrated yet")
        if self.decay_iterations is None:
            return self.alpha
        return self.alpha / (1.0 + self.iteration / self.decay_iterations)


def _calibrate_alpha(state: ReconstructionState, direction_norm: float, scale_norm: float):
    if direction_norm == 0.0 or not np.isfinite(direction_norm):
        state.alpha = 1.0
    else:
        state.alpha = state.step_target * max(scale_norm, 1e-12) / direction_norm


def calibrate_step_size(
    grid: PhaseGrid,
    table: MaxwellianTable,
    bank,
    dataset,
    init,
    *,
    seed: int,
    step_target: float = 0.01,
    probes: int = 8,
) -> float:
    """Pick a constant step size from a pre-run probe of sampled pairs.

    Draws ``probes`` (i, j) pairs from a stream derived from ``seed``
    (separate from the iteration stream), computes each pair's update
    direction at the initial iterate, and sizes alpha so that a step along
    the median-norm direction changes the iterate by about ``step_target``
    relative to its norm. The median is used because per-pair sensitivities
    span orders of magnitude. Returns 1.0 when every probe direction
    vanishes (already at the data).
    """
    rng = np.random.default_rng([int(seed), 0x5EED])
    if isinstance(init, TanhParams):
        eta0 = init.to_eta(grid)
        d_a, d_b = tanh_reflectivity_jacobian(grid.omega, init.a, init.b)
        scale = float(np.hypot(init.a, init.b))
    else:
        eta0 = as_reflectivity(grid, np.asarray(init, dtype=np.float64))
        scale = float(np.linalg.norm(eta0))
    norms = []
    for _ in range(max(1, probes)):
        i = int(rng.integers(len(bank.phis)))
        j = int(rng.integers(len(bank.psis)))
        value = measurement(grid, table, eta0, bank.phis[i], bank.psis[j])
        grad = measurement_gradient(grid, table, eta0, bank.phis[i], bank.psis[j])
        direction = update_direction(value - dataset.value(i, j), grad)
        if isinstance(init, TanhParams):
            norms.append(float(np.hypot(d_a @ direction, d_b @ direction)))
        else:
            norms.append(float(np.linalg.norm(direction)))
    med = float(np.median(norms))
    if med == 0.0 or not np.isfinite(med):
        return 1.0
    return step_target * max(scale, 1e-12) / med


def _limited_step(state: ReconstructionState, direction_norm: float, scale: float) -> float:
    """Step size for this iteration, clipped so one update cannot move the
    iterate by more than ``step_limit`` relative to its norm."""
    step = state.step_size()
    if direction_norm > 0.0 and state.step_limit is not None:
        cap = state.step_limit * max(scale, 1e-12)
        step = min(step, cap / direction_norm)
    return step


def sgd_step(
    state: ReconstructionState,
    grid: PhaseGrid,
    table: MaxwellianTable,
    bank,
    dataset,
    *,
    eta_ref=None,
) -> ReconstructionState:
    """One stochastic descent iteration; mutates and returns ``state``.

    Samples gamma = (i, j) uniformly with replacement from the state RNG,
    runs one forward and one adjoint solve, and applies the projected
    update, with the per-step change clipped to ``step_limit`` of the
    iterate norm. A non-finite residual or gradient rejects the step
    (iterate unchanged, counted in ``rejected_steps``).
    """
    n_phi = len(bank.phis)
    n_psi = len(bank.psis)
    i = int(state.rng.integers(n_phi))
    j = int(state.rng.integers(n_psi))

    phi, psi = bank.phis[i], bank.psis[j]
    forward = forward_solve(grid, table, state.eta, phi)
    value = psi.apply(forward.surface_delta_t)
    res = value - dataset.value(i, j)
    adjoint = adjoint_solve(grid, table, state.eta, psi)
    grad = adjoint_gradient(table, forward, adjoint) * grid.domega
    direction = update_direction(res, grad)

    ok = np.isfinite(res) and bool(np.all(np.isfinite(direction)))
    if state.mode == "tanh":
        d_a, d_b = tanh_reflectivity_jacobian(grid.omega, state.params.a, state.params.b)
        dir_ab = np.array([float(d_a @ direction), float(d_b @ direction)])
        ok = ok and bool(np.all(np.isfinite(dir_ab)))
        if ok:
            scale = float(np.hypot(state.params.a, state.params.b))
            if state.alpha is None:
                _calibrate_alpha(state, float(np.linalg.norm(dir_ab)), scale)
            step = _limited_step(state, float(np.linalg.norm(dir_ab)), scale)
            new_params = TanhParams(
                state.params.a - step * dir_ab[0], state.params.b - step * dir_ab[1]
            )
            new_eta = new_params.to_eta(grid)
    else:
        if ok:
            scale = float(np.linalg.norm(state.eta))
            if state.alpha is None:
                _calibrate_alpha(state, float(np.linalg.norm(direction)), scale)
            step = _limited_step(state, float(np.linalg.norm(direction)), scale)
            new_eta = np.clip(state.eta - step * direction, 0.0, 1.0)

    state.iteration += 1
    state.gamma_history.append((i, j))
    state.loss_history.append(res * res if np.isfinite(res) else np.nan)
    if ok:
        state.last_change = float(np.linalg.norm(new_eta - state.eta))
        state.eta = new_eta
        if state.mode == "tanh":
            state.params = new_params
    else:
        state.rejected_steps += 1
        state.last_change = np.nan
    if state.mode == "tanh":
        state.param_history.append((state.params.a, state.params.b))
    if eta_ref is not None:
        state.error_history.append(reconstruction_error(state.eta, eta_ref))
    return state


@dataclass
class ReconstructionResult:
    """Final iterate plus per-iteration records of one descent run."""

    state: ReconstructionState
    eta: np.ndarray
    params: TanhParams | None
    alpha: float
    iterations: int
    stop_reason: str
    loss_history: np.ndarray
    error_history: np.ndarray
    param_history: np.ndarray
    eta_snapshots: dict[int, np.ndarray]


def run_reconstruction(
    grid: PhaseGrid,
    table: MaxwellianTable,
    bank,
    dataset,
    *,
    init,
    seed: int,
    alpha: float | None = None,
    step_target: float = 0.01,
    step_limit: float = 0.05,
    decay_iterations: float | None = None,
    max_iterations: int = 3000,
    stop_tol: float = 0.0,
    eta_ref=None,
    snapshot_iterations=(),
) -> ReconstructionResult:
    """Run the stochastic descent loop until the iterate change drops to
    ``stop_tol`` or ``max_iterations`` is reached.

    ``init`` selects the mode: a :class:`TanhParams` runs the parametrized
    update, an array of nodal values runs the free per-node one. With
    ``alpha=None`` the step size comes from :func:`calibrate_step_size`.
    """
    if alpha is None:
        alpha = calibrate_step_size(
            grid, table, bank, dataset, init, seed=seed, step_target=step_target
        )
    if isinstance(init, TanhParams):
        state = ReconstructionState.parametrized(
            grid, init, seed=seed, alpha=alpha, step_target=step_target,
            step_limit=step_limit, decay_iterations=decay_iterations,
        )
    else:
        state = ReconstructionState.free(
            grid, init, seed=seed, alpha=alpha, step_target=step_target,
            step_limit=step_limit, decay_iterations=decay_iterations,
        )
    if eta_ref is not None:
        eta_ref = np.asarray(eta_ref, dtype=np.float64)

    wanted = set(int(n) for n in snapshot_iterations)
    snapshots: dict[int, np.ndarray] = {}
    if 0 in wanted:
        snapshots[0] = state.eta.copy()
    stop_reason = "max_iterations"
    for _ in range(max_iterations):
        sgd_step(state, grid, table, bank, dataset, eta_ref=eta_ref)
        if state.iteration in wanted:
            snapshots[state.iteration] = state.eta.copy()
        if np.isfinite(state.last_change) and state.last_change <= stop_tol:
            stop_reason = "tolerance"
            break
    return ReconstructionResult(
        state=state,
        eta=state.eta.copy(),
        params=state.params,
        alpha=state.alpha if state.alpha is not None else np.nan,
        iterations=state.iteration,
        stop_reason=stop_reason,
        loss_history=np.asarray(state.loss_history),
        error_history=np.asarray(state.error_history),
        param_history=np.asarray(state.param_history),
        eta_snapshots=snapshots,
    )

"""Phase-space and time discretization.

All integrals over (mu, omega) used anywhere in the package go through the
``bracket`` methods of :class:`PhaseGrid`, so every module shares one
quadrature convention: uniform midpoint weights ``dmu`` and ``domega``.

Conventions:

- x nodes are cell centers ``(j + 1/2) * dx`` on ``[0, x_max]``; the heated
  surface (x = 0) and the material interface (x = x_max) live in ghost cells.
- mu nodes are cell centers ``-1 + (k + 1/2) * dmu``, so the grid is exactly
  symmetric about 0 and never contains mu = 0.
- omega nodes start at ``omega_min`` with uniform spacing, staying inside
  ``[omega_min, omega_max]``.
- t nodes are the ``n_steps + 1`` time levels ``0, dt, ..., t_max``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError

__all__ = ["PhaseGrid", "make_grid", "paper_grid", "coarse_grid"]


@dataclass(frozen=True)
class PhaseGrid:
    """Immutable (x, mu, omega, t) lattice plus quadrature weights."""

    x: np.ndarray
    mu: np.ndarray
    omega: np.ndarray
    t: np.ndarray
    dx: float
    dmu: float
    domega: float
    dt: float
    x_max: float
    omega_min: float
    omega_max: float
    w_mu: np.ndarray = field(init=False)
    w_omega: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("x", "mu", "omega", "t"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        w_mu = np.full(self.mu.size, self.dmu)
        w_omega = np.full(self.omega.size, self.domega)
        w_mu.setflags(write=False)
        w_omega.setflags(write=False)
        object.__setattr__(self, "w_mu", w_mu)
        object.__setattr__(self, "w_omega", w_omega)

    # -- sizes ------------------------------------------------------------

    @property
    def n_x(self) -> int:
        return self.x.size

    @property
    def n_mu(self) -> int:
        return self.mu.size

    @property
    def n_omega(self) -> int:
        return self.omega.size

    @property
    def n_steps(self) -> int:
        """Number of time steps; there are ``n_steps + 1`` time levels."""
        return self.t.size - 1

    @property
    def n_mu_half(self) -> int:
        return self.mu.size // 2

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    # -- mu bookkeeping ----------------------------------------------------

    def mirror_mu(self, k):
        """Index of the node with velocity ``-mu[k]``."""
        return self.n_mu - 1 - k

    @property
    def mu_neg(self) -> np.ndarray:
        """Nodes with mu < 0 (the first half, ascending)."""
        return self.mu[: self.n_mu_half]

    @property
    def mu_pos(self) -> np.ndarray:
        """Nodes with mu > 0 (the second half, ascending)."""
        return self.mu[self.n_mu_half :]

    @property
    def cfl(self) -> float:
        """Courant number ``omega_max * dt / dx`` for the speed bound |mu| <= 1."""
        return self.omega_max * self.dt / self.dx

    # -- quadrature --------------------------------------------------------

    def _check_slice(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if values.ndim < 2 or values.shape[-2:] != (self.n_mu, self.n_omega):
            raise ShapeError(
                f"expected trailing axes (n_mu={self.n_mu}, n_omega={self.n_omega}), "
                f"got shape {values.shape}"
            )
        return values

    def bracket(self, values):
        """Quadrature of ``values`` over all (mu, omega) nodes.

        ``values`` must have trailing axes (n_mu, n_omega); leading axes are
        preserved, so a full (x, mu, omega) field yields one value per cell.
        Computed as the sum of the two half-range quadratures, so
        ``bracket == bracket_pos + bracket_neg`` holds exactly.
        """
        return self.bracket_pos(values) + self.bracket_neg(values)

    def bracket_pos(self, values):
        """Quadrature restricted to mu > 0."""
        values = self._check_slice(values)
        h = self.n_mu_half
        out = np.einsum("...kl,k,l->...", values[..., h:, :], self.w_mu[h:], self.w_omega)
        return float(out) if out.ndim == 0 else out

    def bracket_neg(self, values):
        """Quadrature restricted to mu < 0."""
        values = self._check_slice(values)
        h = self.n_mu_half
        out = np.einsum("...kl,k,l->...", values[..., :h, :], self.w_mu[:h], self.w_omega)
        return float(out) if out.ndim == 0 else out


def _resolve_count(total, spacing, count, *, spacing_name, count_name):
    if (spacing is None) == (count is None):
        raise ConfigError(f"give exactly one of {spacing_name} or {count_name}")
    if count is not None:
        count = int(count)
        if count < 1:
            raise ConfigError(f"{count_name} must be >= 1, got {count}")
        return count, total / count
    spacing = float(spacing)
    if spacing <= 0:
        raise ConfigError(f"{spacing_name} must be positive, got {spacing}")
    count = int(round(total / spacing))
    if count < 1 or abs(count * spacing - total) > 1e-9 * max(total, 1.0):
        raise ConfigError(
            f"{spacing_name}={spacing} does not evenly divide the extent {total}"
        )
    return count, spacing


def make_grid(
    *,
    x_max: float = 0.5,
    dx: float | None = None,
    n_x: int | None = None,
    t_max: float = 5.0,
    dt: float | None = None,
    n_t: int | None = None,
    dmu: float | None = None,
    n_mu: int | None = None,
    omega_min: float = 0.05,
    omega_max: float = 2.0,
    domega: float | None = None,
    n_omega: int | None = None,
) -> PhaseGrid:
    """Build a :class:`PhaseGrid`, validating every structural invariant.

    Each axis takes either a spacing or a node/step count. The omega axis
    accepts a spacing that does not exactly tile ``[omega_min, omega_max]``;
    nodes then stop at the last one inside the interval. Rejects grids that
    violate the explicit-marching stability bound ``omega_max * dt <= dx``.
    """
    x_max = float(x_max)
    t_max = float(t_max)
    omega_min = float(omega_min)
    omega_max = float(omega_max)
    if x_max <= 0:
        raise ConfigError(f"x_max must be positive, got {x_max}")
    if t_max <= 0:
        raise ConfigError(f"t_max must be positive, got {t_max}")
    if omega_min <= 0:
        raise ConfigError(f"omega_min must be positive, got {omega_min}")
    if omega_max <= omega_min:
        raise ConfigError(f"need omega_max > omega_min, got [{omega_min}, {omega_max}]")

    n_x_res, dx_res = _resolve_count(x_max, dx, n_x, spacing_name="dx", count_name="n_x")
    n_t_res, dt_res = _resolve_count(t_max, dt, n_t, spacing_name="dt", count_name="n_t")
    n_mu_res, dmu_res = _resolve_count(2.0, dmu, n_mu, spacing_name="dmu", count_name="n_mu")
    if n_mu_res % 2 != 0:
        raise ConfigError(
            f"n_mu must be even so the mu grid is symmetric and excludes 0, got {n_mu_res}"
        )

    if (domega is None) == (n_omega is None):
        raise ConfigError("give exactly one of domega or n_omega")
    if n_omega is not None:
        n_om = int(n_omega)
        if n_om < 2:
            raise ConfigError(f"n_omega must be >= 2, got {n_om}")
        dom = (omega_max - omega_min) / (n_om - 1)
    else:
        dom = float(domega)
        if dom <= 0:
            raise ConfigError(f"domega must be positive, got {dom}")
        n_om = int(np.floor((omega_max - omega_min) / dom + 1e-9)) + 1

    cfl = omega_max * dt_res / dx_res
    if cfl > 1.0 + 1e-12:
        raise ConfigError(
            f"unstable time step: omega_max*dt/dx = {cfl:.6g} > 1 "
            f"(omega_max={omega_max}, dt={dt_res}, dx={dx_res})"
        )

    x = (np.arange(n_x_res) + 0.5) * dx_res
    # build the positive half and mirror it so symmetry is bitwise exact
    mu_pos = (np.arange(n_mu_res // 2) + 0.5) * dmu_res
    mu = np.concatenate([-mu_pos[::-1], mu_pos])
    omega = omega_min + np.arange(n_om) * dom
    t = np.arange(n_t_res + 1) * dt_res
    return PhaseGrid(
        x=x,
        mu=mu,
        omega=omega,
        t=t,
        dx=dx_res,
        dmu=dmu_res,
        domega=dom,
        dt=dt_res,
        x_max=x_max,
        omega_min=omega_min,
        omega_max=omega_max,
    )


def paper_grid() -> PhaseGrid:
    """The production-resolution grid used in the reference experiments."""
    return make_grid(x_max=0.5, dx=0.02, t_max=5.0, dt=0.01, dmu=0.01, domega=0.05)


def coarse_grid(n_x=10, n_mu=20, n_omega=20, n_t=250, t_max=5.0) -> PhaseGrid:
    """A desk-scale grid; the default sizes keep one solve in milliseconds."""
    return make_grid(x_max=0.5, n_x=n_x, t_max=t_max, n_t=n_t, n_mu=n_mu, n_omega=n_omega)

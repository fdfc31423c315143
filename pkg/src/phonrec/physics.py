"""Closed-form kernels of the linearized transport model.

The model linearizes the Bose-Einstein equilibrium around the ambient
temperature. Its ingredients are the equilibrium kernel
``w(omega) = omega^2 e^omega / (e^omega - 1)^2`` (the temperature derivative
of the occupation after nondimensionalization), the normalized Maxwellian
``M = omega*w / <omega*w>``, the deviational temperature
``delta T = <omega*g> / <omega*w>`` and the relaxation collision operator
``L g = -omega*g + M <omega*g>``.

The Maxwellian is normalized with the *discrete* bracket, not the analytic
integral, so conservation (``<L g> = 0``) and equilibrium annihilation
(``L w = 0``) hold to rounding error on every grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import PhaseGrid

__all__ = [
    "equilibrium_kernel",
    "MaxwellianTable",
    "make_table",
    "delta_temperature",
    "collide",
    "maxwellian_comparison",
]


def equilibrium_kernel(omega):
    """Evaluate ``omega^2 e^omega / (e^omega - 1)^2`` for omega > 0.

    Uses the ``omega^2 e^{-omega} / expm1(-omega)^2`` form, which is stable
    for small omega (limit 1) and free of overflow for large omega.
    """
    omega_arr = np.asarray(omega, dtype=np.float64)
    if np.any(omega_arr <= 0):
        raise ValueError("equilibrium kernel requires omega > 0")
    den = np.expm1(-omega_arr)
    out = omega_arr**2 * np.exp(-omega_arr) / (den * den)
    return float(out) if np.isscalar(omega) else out


@dataclass(frozen=True)
class MaxwellianTable:
    """Per-omega equilibrium data tied to one grid's quadrature.

    ``kernel`` is the equilibrium kernel on the omega nodes, ``maxwellian``
    the discretely normalized Maxwellian and ``flux_norm`` the discrete
    bracket ``<omega * kernel>`` used to turn energy moments into
    temperatures.
    """

    grid: PhaseGrid
    kernel: np.ndarray = field(init=False)
    maxwellian: np.ndarray = field(init=False)
    flux_norm: float = field(init=False)

    def __post_init__(self):
        kernel = equilibrium_kernel(self.grid.omega)
        flux = self.grid.omega * kernel
        z = self.grid.bracket(np.broadcast_to(flux, (self.grid.n_mu, self.grid.n_omega)))
        maxwellian = flux / z
        kernel.setflags(write=False)
        maxwellian.setflags(write=False)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "maxwellian", maxwellian)
        object.__setattr__(self, "flux_norm", float(z))


def make_table(grid: PhaseGrid) -> MaxwellianTable:
    return MaxwellianTable(grid)


def delta_temperature(values, table: MaxwellianTable):
    """Deviational temperature ``<omega * g> / <omega * kernel>``.

    ``values`` must have trailing (mu, omega) axes; leading axes (if any)
    are preserved, so a full field yields one temperature per cell.
    """
    grid = table.grid
    weighted = np.asarray(values, dtype=np.float64) * grid.omega
    return grid.bracket(weighted) / table.flux_norm


def collide(values, table: MaxwellianTable):
    """Relaxation collision operator ``-omega*g + M <omega*g>``."""
    grid = table.grid
    values = np.asarray(values, dtype=np.float64)
    energy = np.asarray(grid.bracket(values * grid.omega))
    return -grid.omega * values + table.maxwellian * energy[..., np.newaxis, np.newaxis]


def maxwellian_comparison(grid: PhaseGrid) -> dict[str, np.ndarray]:
    """Maxwellian vs. the plain Bose-Einstein profile and its exponential tail.

    Each curve is rescaled to unit bracket so shapes are directly comparable.
    """
    table = make_table(grid)
    curves = {
        "maxwellian": table.maxwellian.copy(),
        "bose_einstein": 1.0 / np.expm1(grid.omega),
        "exponential": np.exp(-grid.omega),
    }
    shape = (grid.n_mu, grid.n_omega)
    for name, values in curves.items():
        curves[name] = values / grid.bracket(np.broadcast_to(values, shape))
    return curves

"""Independent reference implementations used only as test oracles.

Everything here is written as plain Python loops, sharing no code with the
package's solvers, so agreement is meaningful evidence of correctness.
"""

import numpy as np


def brute_bracket(grid, values):
    """Quadrature by explicit double loop."""
    total = 0.0
    for k in range(grid.n_mu):
        for l in range(grid.n_omega):
            total += values[k, l] * grid.w_mu[k] * grid.w_omega[l]
    return total


def reference_march(grid, table, eta, phi_values, *, init=None):
    """Loop-based upwind/Euler march with reflective interface.

    ``phi_values`` is a static (n_mu/2, n_omega) inflow. Returns the final
    field, the surface temperature trace and the outgoing interface trace.
    """
    nx, nmu, nom = grid.n_x, grid.n_mu, grid.n_omega
    h = nmu // 2
    dt, dx = grid.dt, grid.dx
    n_steps = grid.n_steps
    g = np.zeros((nx, nmu, nom)) if init is None else np.array(init, dtype=float)
    surface = np.zeros(n_steps + 1)
    trace = np.zeros((n_steps + 1, h, nom))

    def record(m):
        total = 0.0
        for p in range(h):
            for l in range(nom):
                total += phi_values[p, l] * grid.omega[l] * grid.w_omega[l] * grid.dmu
        for q in range(h):
            for l in range(nom):
                total += g[0, q, l] * grid.omega[l] * grid.w_omega[l] * grid.dmu
        surface[m] = total / table.flux_norm
        trace[m] = g[nx - 1, h:, :]

    record(0)
    for m in range(n_steps):
        g_new = np.zeros_like(g)
        energy = np.zeros(nx)
        for j in range(nx):
            s = 0.0
            for k in range(nmu):
                for l in range(nom):
                    s += g[j, k, l] * grid.w_mu[k] * grid.w_omega[l] * grid.omega[l]
            energy[j] = s
        for j in range(nx):
            for k in range(nmu):
                mu = grid.mu[k]
                for l in range(nom):
                    om = grid.omega[l]
                    if mu > 0:
                        upstream = phi_values[k - h, l] if j == 0 else g[j - 1, k, l]
                        advect = mu * om * (g[j, k, l] - upstream) / dx
                    else:
                        if j == nx - 1:
                            downstream = eta[l] * g[nx - 1, nmu - 1 - k, l]
                        else:
                            downstream = g[j + 1, k, l]
                        advect = mu * om * (downstream - g[j, k, l]) / dx
                    g_new[j, k, l] = g[j, k, l] + dt * (
                        -advect - om * g[j, k, l] + table.maxwellian[l] * energy[j]
                    )
        g = g_new
        record(m + 1)
    return g, surface, trace

"""Jitted time-marching kernel shared by the forward and adjoint solvers.

The kernel is deliberately dumb: plain nested loops over (cell, velocity,
frequency), no fastmath, fixed summation order, so results are bitwise
reproducible. All scheme coefficients arrive precomputed:

- ``stay[k, l]``  = 1 - |mu_k| omega_l dt/dx - omega_l dt   (value kept)
- ``carry[k, l]`` = |mu_k| omega_l dt/dx                    (upwind neighbor)
- ``gain[l]``     = dt * maxwellian[l]                      (collision gain)
- ``quad[k, l]``  = w_mu[k] w_omega[l] omega_l              (energy moment)

``inflow`` holds the x = 0 ghost values for mu > 0 with leading time axis of
size 1 (static) or n_steps + 1. ``interface`` optionally prescribes the
x = x_max ghost for mu < 0 the same way; otherwise the reflective ghost
``eta * g(x_max, -mu)`` at the same time level is used.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def march(
    g,
    n_steps,
    inflow,
    interface,
    use_interface,
    eta,
    stay,
    carry,
    gain,
    quad,
    surf_w,
    flux_norm,
    record_surface,
    surface,
    trace,
    store_trajectory,
    trajectory,
    snap_nodes,
    snapshots,
    guard,
):
    nx, nmu, nom = g.shape
    h = nmu // 2
    g_next = np.empty_like(g)
    min_val = np.inf
    max_val = -np.inf
    for j in range(nx):
        for k in range(nmu):
            for l in range(nom):
                v = g[j, k, l]
                if v < min_val:
                    min_val = v
                if v > max_val:
                    max_val = v

    for m in range(n_steps + 1):
        # record time level m
        for p in range(h):
            for l in range(nom):
                trace[m, p, l] = g[nx - 1, h + p, l]
        if record_surface:
            phi_m = inflow[m if inflow.shape[0] > 1 else 0]
            s = 0.0
            for p in range(h):
                for l in range(nom):
                    s += phi_m[p, l] * surf_w[l]
            for q in range(h):
                for l in range(nom):
                    s += g[0, q, l] * surf_w[l]
            surface[m] = s / flux_norm
        if store_trajectory:
            for j in range(nx):
                for k in range(nmu):
                    for l in range(nom):
                        trajectory[m, j, k, l] = g[j, k, l]
        for i in range(snap_nodes.shape[0]):
            if snap_nodes[i] == m:
                for j in range(nx):
                    for k in range(nmu):
                        for l in range(nom):
                            snapshots[i, j, k, l] = g[j, k, l]
        if m == n_steps:
            break

        phi_m = inflow[m if inflow.shape[0] > 1 else 0]
        if use_interface:
            ghost = interface[m if interface.shape[0] > 1 else 0]
        else:
            ghost = phi_m  # placeholder, never read when use_interface is False
        step_min = np.inf
        step_max = -np.inf
        for j in range(nx):
            energy = 0.0
            for k in range(nmu):
                for l in range(nom):
                    energy += g[j, k, l] * quad[k, l]
            for k in range(nmu):
                for l in range(nom):
                    if k >= h:
                        up = phi_m[k - h, l] if j == 0 else g[j - 1, k, l]
                    elif j == nx - 1:
                        if use_interface:
                            up = ghost[k, l]
                        else:
                            up = eta[l] * g[nx - 1, nmu - 1 - k, l]
                    else:
                        up = g[j + 1, k, l]
                    v = stay[k, l] * g[j, k, l] + carry[k, l] * up + gain[l] * energy
                    g_next[j, k, l] = v
                    if v < step_min:
                        step_min = v
                    if v > step_max:
                        step_max = v
        g, g_next = g_next, g
        if step_min < min_val:
            min_val = step_min
        if step_max > max_val:
            max_val = step_max
        bad = max(abs(step_min), abs(step_max))
        if not np.isfinite(bad) or bad > guard:
            return 1, m + 1, min_val, max_val

    return 0, n_steps, min_val, max_val

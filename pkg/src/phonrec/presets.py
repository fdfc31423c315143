"""Shipped run configurations.

``fig3`` and ``fig5`` reproduce the forward and adjoint demonstrations at
production resolution. The three ``example*`` presets run the
reconstruction studies at desk scale (a coarse grid where one solve takes
milliseconds); point them at a finer grid by overriding the grid block.
"""

from __future__ import annotations

import copy

from .config import RunConfig, parse_config
from .errors import ConfigError

__all__ = ["PRESETS", "preset_config"]

_COARSE_GRID = {
    "x_max": 0.5,
    "n_x": 10,
    "t_max": 5.0,
    "n_t": 250,
    "n_mu": 20,
    "n_omega": 20,
}

_TRUTH = {"tanh": {"a": 1.5, "b": 1.0}}

PRESETS: dict[str, dict] = {
    # forward wave demo: single-frequency injection, production grid
    "fig3": {
        "forward": {
            "eta": _TRUTH,
            "source": {"kronecker_omega": 1.5},
            "snapshot_times": [0.01, 0.5, 1.0, 3.0],
        },
    },
    # backward-in-time interface pulse demo, production grid
    "fig5": {
        "adjoint": {
            "kind": "pulse",
            "snapshot_times": [5.0, 4.0, 2.0, 0.01],
        },
    },
    # parametrized reconstruction from three initial guesses, clean data
    "example1": {
        "grid": dict(_COARSE_GRID),
        "experiment": {"n_injections": 20, "truth": copy.deepcopy(_TRUTH)},
        "inversion": {
            "mode": "parametrized",
            "initial_guess": [
                {"a": 1.0, "b": 1.5},
                {"a": 2.0, "b": 0.4},
                {"a": 2.0, "b": 1.5},
            ],
            "max_iterations": 3000,
            "seed": 7,
        },
    },
    # free per-node reconstruction from a flat initial guess, clean data
    "example2": {
        "grid": dict(_COARSE_GRID),
        "experiment": {"n_injections": 20, "truth": copy.deepcopy(_TRUTH)},
        "inversion": {
            "mode": "free",
            "initial_guess": {"constant": 0.5},
            "max_iterations": 3000,
            "seed": 11,
            "snapshot_iterations": [100, 200, 500, 3000],
        },
    },
    # free reconstruction against noisy data, many measurement times
    "example3": {
        "grid": dict(_COARSE_GRID),
        "experiment": {
            "n_injections": 20,
            "n_measurements": 50,
            "measurement_window": [4.5, 5.0],
            "noise_level": 0.025,
            "seed": 3,
            "truth": copy.deepcopy(_TRUTH),
        },
        "inversion": {
            "mode": "free",
            "initial_guess": {"constant": 0.5},
            "max_iterations": 3000,
            "seed": 1,
        },
    },
}


def preset_config(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (available: {sorted(PRESETS)})")
    return parse_config(copy.deepcopy(PRESETS[name]))

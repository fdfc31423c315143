"""Run configuration: schema validation and builders for the CLI.

A run configuration is a nested mapping with blocks ``grid``,
``experiment``, ``inversion``, ``forward``, ``adjoint``, ``verify`` and
``output``. Unknown keys are rejected with their dotted path. Reflectivity
and boundary-source specifications are small tagged mappings, e.g.
``{tanh: {a: 1.5, b: 1.0}}``, ``{constant: 0.5}``,
``{quadratic: [0.4891, 0.1]}`` or ``{kronecker_omega: 1.5}``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ConfigError
from .grid import PhaseGrid, make_grid
from .inverse import TanhParams, tanh_reflectivity
from .physics import MaxwellianTable
from .transport import BoundarySource, as_reflectivity

__all__ = ["RunConfig", "parse_config", "load_config_file", "merge_configs"]

_GRID_KEYS = {
    "x_max": float,
    "dx": float,
    "n_x": int,
    "t_max": float,
    "dt": float,
    "n_t": int,
    "dmu": float,
    "n_mu": int,
    "omega_min": float,
    "omega_max": float,
    "domega": float,
    "n_omega": int,
}

_EXPERIMENT_KEYS = {
    "n_injections": int,
    "n_measurements": int,
    "measurement_window": list,
    "noise_level": float,
    "noise_kind": str,
    "seed": int,
    "truth": dict,
}

_INVERSION_KEYS = {
    "mode": str,
    "initial_guess": (dict, list),
    "alpha": (str, float, int),
    "step_target": float,
    "step_limit": float,
    "decay_iterations": (float, int, type(None)),
    "max_iterations": int,
    "stop_tol": float,
    "seed": int,
    "snapshot_iterations": list,
    "dataset": str,
}

_FORWARD_KEYS = {
    "eta": dict,
    "source": (dict, str),
    "snapshot_times": list,
    "store_trajectory": bool,
}

_ADJOINT_KEYS = {
    "kind": str,
    "eta": dict,
    "measurement_time": (float, int, type(None)),
    "snapshot_times": list,
}

_VERIFY_KEYS = {
    "trials": int,
    "seed": int,
    "gradient_rtol": float,
    "refinement_ratio": float,
    "refine": bool,
    "fd_step": float,
}

_OUTPUT_KEYS = {
    "directory": str,
}

_BLOCKS = {
    "grid": _GRID_KEYS,
    "experiment": _EXPERIMENT_KEYS,
    "inversion": _INVERSION_KEYS,
    "forward": _FORWARD_KEYS,
    "adjoint": _ADJOINT_KEYS,
    "verify": _VERIFY_KEYS,
    "output": _OUTPUT_KEYS,
}

_GRID_DEFAULTS = {
    "x_max": 0.5,
    "t_max": 5.0,
    "omega_min": 0.05,
    "omega_max": 2.0,
}

_EXPERIMENT_DEFAULTS = {
    "n_measurements": 1,
    "measurement_window": [4.5, 5.0],
    "noise_level": 0.0,
    "noise_kind": "multiplicative",
    "seed": 0,
}

_INVERSION_DEFAULTS = {
    "alpha": "auto",
    "step_target": 0.01,
    "step_limit": 0.05,
    "decay_iterations": None,
    "max_iterations": 3000,
    "stop_tol": 0.0,
    "seed": 0,
    "snapshot_iterations": [],
}

_VERIFY_DEFAULTS = {
    "trials": 100,
    "seed": 0,
    "gradient_rtol": 0.02,
    "refinement_ratio": 0.6,
    "refine": True,
    "fd_step": 1e-3,
}


def _check_block(name: str, block, allowed: dict) -> dict:
    if block is None:
        return {}
    if not isinstance(block, dict):
        raise ConfigError("expected a mapping", field=name)
    out = {}
    for key, value in block.items():
        if key not in allowed:
            raise ConfigError(f"unknown key (allowed: {sorted(allowed)})", field=f"{name}.{key}")
        expected = allowed[key]
        if not isinstance(expected, tuple):
            expected = (expected,)
        if value is None and type(None) not in expected:
            raise ConfigError("must not be null", field=f"{name}.{key}")
        if value is not None:
            if float in expected and isinstance(value, (int, float)) and not isinstance(value, bool):
                value = float(value)
            elif int in expected and isinstance(value, bool):
                raise ConfigError("expected an integer", field=f"{name}.{key}")
            elif not isinstance(value, expected):
                raise ConfigError(
                    f"expected {'/'.join(t.__name__ for t in expected)}, "
                    f"got {type(value).__name__}",
                    field=f"{name}.{key}",
                )
        out[key] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; ``sections`` is the normalized mapping."""

    sections: dict

    def to_dict(self) -> dict:
        return copy.deepcopy(self.sections)

    def block(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.sections == other.sections

    # -- builders ----------------------------------------------------------

    def build_grid(self) -> PhaseGrid:
        block = {**_GRID_DEFAULTS, **self.block("grid")}
        spacing_or_count = {
            k: block.get(k)
            for k in ("dx", "n_x", "dt", "n_t", "dmu", "n_mu", "domega", "n_omega")
        }
        # paper-resolution spacings unless the config picks its own
        if spacing_or_count["dx"] is None and spacing_or_count["n_x"] is None:
            spacing_or_count["dx"] = 0.02
        if spacing_or_count["dt"] is None and spacing_or_count["n_t"] is None:
            spacing_or_count["dt"] = 0.01
        if spacing_or_count["dmu"] is None and spacing_or_count["n_mu"] is None:
            spacing_or_count["dmu"] = 0.01
        if spacing_or_count["domega"] is None and spacing_or_count["n_omega"] is None:
            spacing_or_count["domega"] = 0.05
        try:
            return make_grid(
                x_max=block["x_max"],
                t_max=block["t_max"],
                omega_min=block["omega_min"],
                omega_max=block["omega_max"],
                **spacing_or_count,
            )
        except ConfigError as exc:
            raise ConfigError(str(exc), field="grid") from None

    def experiment(self) -> dict:
        return {**_EXPERIMENT_DEFAULTS, **self.block("experiment")}

    def inversion(self) -> dict:
        return {**_INVERSION_DEFAULTS, **self.block("inversion")}

    def verify(self) -> dict:
        return {**_VERIFY_DEFAULTS, **self.block("verify")}

    def output_dir(self, override=None) -> str:
        if override:
            return str(override)
        return self.block("output").get("directory", "out")


def parse_config(raw: dict | None) -> RunConfig:
    """Validate a raw mapping into a :class:`RunConfig`."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    sections = {}
    for name, block in raw.items():
        if name not in _BLOCKS:
            raise ConfigError(f"unknown block (allowed: {sorted(_BLOCKS)})", field=name)
        sections[name] = _check_block(name, block, _BLOCKS[name])
    return RunConfig(sections=sections)


def load_config_file(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return parse_config(raw)


def merge_configs(base: RunConfig, override: RunConfig) -> RunConfig:
    """Deep-merge ``override`` into ``base`` (override wins per key)."""
    merged = base.to_dict()
    for name, block in override.sections.items():
        target = merged.setdefault(name, {})
        target.update(copy.deepcopy(block))
    return RunConfig(sections=merged)


# -- tagged value specifications ----------------------------------------------


def resolve_eta(spec, grid: PhaseGrid) -> np.ndarray:
    """Build a nodal reflectivity from a tagged mapping."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(
            "reflectivity spec must be a single-key mapping "
            "(tanh / constant / quadratic / values)"
        )
    (kind, value), = spec.items()
    if kind == "tanh":
        params = resolve_tanh_params(value)
        return params.to_eta(grid)
    if kind == "constant":
        return as_reflectivity(grid, float(value))
    if kind == "quadratic":
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ConfigError("quadratic spec needs [c0, c1]")
        c0, c1 = float(value[0]), float(value[1])
        return as_reflectivity(grid, c0 - c1 * (grid.omega - grid.omega_min) ** 2)
    if kind == "values":
        return as_reflectivity(grid, np.asarray(value, dtype=np.float64))
    raise ConfigError(f"unknown reflectivity spec kind {kind!r}")


def resolve_tanh_params(value) -> TanhParams:
    if isinstance(value, dict):
        extra = set(value) - {"a", "b"}
        if extra or set(value) != {"a", "b"}:
            raise ConfigError("tanh spec needs exactly the keys a and b")
        return TanhParams(float(value["a"]), float(value["b"]))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return TanhParams(float(value[0]), float(value[1]))
    raise ConfigError("tanh spec must be {a: .., b: ..} or [a, b]")


def resolve_source(spec, grid: PhaseGrid, table: MaxwellianTable) -> BoundarySource:
    """Build a boundary source from a tagged mapping or keyword."""
    if isinstance(spec, str):
        if spec == "zero":
            return BoundarySource.zero(grid)
        if spec == "equilibrium":
            return BoundarySource.equilibrium(grid, table)
        raise ConfigError(f"unknown source keyword {spec!r}")
    if isinstance(spec, dict) and len(spec) == 1:
        (kind, value), = spec.items()
        if kind == "kronecker_omega":
            if isinstance(value, dict):
                extra = set(value) - {"omega", "amplitude"}
                if extra or "omega" not in value:
                    raise ConfigError(
                        "kronecker_omega spec needs omega and optional amplitude"
                    )
                return BoundarySource.kronecker_omega(
                    grid, float(value["omega"]), float(value.get("amplitude", 1.0))
                )
            return BoundarySource.kronecker_omega(grid, float(value))
    raise ConfigError(
        "source spec must be 'zero', 'equilibrium' or {kronecker_omega: ...}"
    )

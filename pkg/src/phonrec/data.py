"""Synthetic experiment banks, dataset generation and persistence.

An experiment bank pairs single-frequency boundary injections (one per
omega node, lowest first) with point-in-time surface measurements. Datasets
hold the measured values for every (injection, measurement) pair, plus the
noise descriptor needed to regenerate them.

Dataset files are plain text: `# key=value` header lines (I, J, noise,
seed, schema), then one `i,j,value` row per pair in row-major order, with
floats printed to 17 significant digits so a save/load round trip is
bitwise exact.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adjoint import MeasurementFunctional
from .errors import ConfigError, DatasetFormatError
from .grid import PhaseGrid
from .physics import MaxwellianTable
from .transport import BoundarySource, forward_solve

__all__ = [
    "ExperimentBank",
    "Dataset",
    "make_bank",
    "compute_measurements",
    "generate_dataset",
    "save_dataset",
    "load_dataset",
]

_SCHEMA = 1


@dataclass(frozen=True)
class ExperimentBank:
    """Boundary injections and measurement functionals for one setup."""

    grid: PhaseGrid
    phis: list
    psis: list
    omega_indices: np.ndarray
    psi_nodes: np.ndarray
    window: tuple
    seed: int | None

    @property
    def n_injections(self) -> int:
        return len(self.phis)

    @property
    def n_measurements(self) -> int:
        return len(self.psis)


def make_bank(
    grid: PhaseGrid,
    n_injections: int,
    n_measurements: int = 1,
    *,
    measurement_window: tuple = (4.5, 5.0),
    seed: int | None = None,
) -> ExperimentBank:
    """Kronecker injections at the first ``n_injections`` omega nodes plus
    point measurements in time.

    A single measurement sits at t_max. For several, the node times are
    drawn uniformly from the window with the given seed: without
    replacement while the window holds enough distinct nodes, with
    replacement otherwise.
    """
    if n_injections < 1 or n_injections > grid.n_omega:
        raise ConfigError(
            f"n_injections must be in [1, {grid.n_omega}], got {n_injections}"
        )
    if n_measurements < 1:
        raise ConfigError(f"n_measurements must be >= 1, got {n_measurements}")

    omega_indices = np.arange(n_injections)
    phis = [BoundarySource.kronecker_index(grid, int(i)) for i in omega_indices]

    if n_measurements == 1:
        psi_nodes = np.array([grid.n_steps], dtype=np.int64)
    else:
        lo, hi = (float(measurement_window[0]), float(measurement_window[1]))
        if not 0.0 <= lo < hi <= grid.t_max + 1e-12:
            raise ConfigError(
                f"measurement window {measurement_window} outside [0, {grid.t_max}]"
            )
        if seed is None:
            raise ConfigError("random measurement times require a seed")
        nodes = np.arange(int(np.ceil(lo / grid.dt - 1e-9)), int(np.floor(hi / grid.dt + 1e-9)) + 1)
        rng = np.random.default_rng(seed)
        replace = nodes.size < n_measurements
        psi_nodes = np.sort(rng.choice(nodes, size=n_measurements, replace=replace))
    psis = [
        MeasurementFunctional.kronecker_time(grid, t=float(node * grid.dt))
        for node in psi_nodes
    ]
    return ExperimentBank(
        grid=grid,
        phis=phis,
        psis=psis,
        omega_indices=omega_indices,
        psi_nodes=psi_nodes,
        window=tuple(measurement_window),
        seed=seed,
    )


def _measurement_row(args):
    grid, table, eta, phi, psi_values_list, dt = args
    solution = forward_solve(grid, table, eta, phi)
    return [float(np.dot(v, solution.surface_delta_t) * dt) for v in psi_values_list]


def compute_measurements(
    grid: PhaseGrid,
    table: MaxwellianTable,
    bank: ExperimentBank,
    eta,
    *,
    jobs: int = 1,
) -> np.ndarray:
    """Measurement matrix M[i, j] for one reflectivity; one solve per row."""
    psi_values = [psi.values for psi in bank.psis]
    tasks = [(grid, table, eta, phi, psi_values, grid.dt) for phi in bank.phis]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_measurement_row, tasks))
    else:
        rows = [_measurement_row(t) for t in tasks]
    return np.asarray(rows, dtype=np.float64)


@dataclass(frozen=True)
class Dataset:
    """Measured values with their noise provenance.

    ``generator_eta`` (the truth the data was synthesized from) is kept for
    in-memory bookkeeping only and is not serialized.
    """

    values: np.ndarray
    noise_level: float = 0.0
    noise_kind: str = "multiplicative"
    seed: int | None = None
    generator_eta: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DatasetFormatError(f"values must be 2-d, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DatasetFormatError("dataset contains non-finite values")
        if self.noise_level < 0:
            raise ConfigError(f"noise level must be >= 0, got {self.noise_level}")
        if self.noise_kind not in ("multiplicative", "additive"):
            raise ConfigError(f"unknown noise kind {self.noise_kind!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_injections(self) -> int:
        return self.values.shape[0]

    @property
    def n_measurements(self) -> int:
        return self.values.shape[1]

    @property
    def is_noisy(self) -> bool:
        return self.noise_level > 0.0

    def value(self, i: int, j: int) -> float:
        try:
            return float(self.values[i, j])
        except IndexError:
            raise KeyError(f"no datum for pair ({i}, {j})") from None

    def serialize(self) -> str:
        lines = [
            f"# I={self.n_injections}",
            f"# J={self.n_measurements}",
            f"# noise={format(self.noise_level, '.17g')}",
            f"# seed={'none' if self.seed is None else self.seed}",
            f"# schema={_SCHEMA}",
        ]
        if self.noise_kind != "multiplicative":
            lines.append(f"# kind={self.noise_kind}")
        for i in range(self.n_injections):
            for j in range(self.n_measurements):
                lines.append(f"{i},{j},{format(self.values[i, j], '.17g')}")
        return "\n".join(lines) + "\n"

    def content_hash(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()


def generate_dataset(
    grid: PhaseGrid,
    table: MaxwellianTable,
    bank: ExperimentBank,
    eta_truth,
    *,
    noise_level: float = 0.0,
    seed: int | None = None,
    noise_kind: str = "multiplicative",
    jobs: int = 1,
    measurements: np.ndarray | None = None,
) -> Dataset:
    """Synthesize data at a truth reflectivity, optionally perturbed.

    Noise draws ``u ~ Uniform(-1, 1)`` i.i.d. per pair under ``seed`` and
    applies ``d = M * (1 + level * u)`` (multiplicative, the default) or
    ``d = M + level * u`` (additive). Clean data (level 0) carries no seed.
    Precomputed ``measurements`` skip the forward solves.
    """
    if noise_level < 0:
        raise ConfigError(f"noise level must be >= 0, got {noise_level}")
    if measurements is None:
        measurements = compute_measurements(grid, table, bank, eta_truth, jobs=jobs)
    values = np.asarray(measurements, dtype=np.float64)
    if noise_level > 0:
        if seed is None:
            raise ConfigError("noisy data generation requires a seed")
        rng = np.random.default_rng(seed)
        u = rng.uniform(-1.0, 1.0, size=values.shape)
        if noise_kind == "multiplicative":
            values = values * (1.0 + noise_level * u)
        elif noise_kind == "additive":
            values = values + noise_level * u
        else:
            raise ConfigError(f"unknown noise kind {noise_kind!r}")
        return Dataset(
            values=values,
            noise_level=noise_level,
            noise_kind=noise_kind,
            seed=seed,
            generator_eta=np.asarray(eta_truth, dtype=np.float64),
        )
    return Dataset(values=values, generator_eta=np.asarray(eta_truth, dtype=np.float64))


def save_dataset(dataset: Dataset, path) -> str:
    """Write a dataset file; returns its content hash."""
    text = dataset.serialize()
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


_REQUIRED_KEYS = ("I", "J", "noise", "seed", "schema")
_KNOWN_KEYS = _REQUIRED_KEYS + ("kind",)


def load_dataset(path) -> Dataset:
    """Parse a dataset file, validating headers, ordering and row count."""
    with open(path) as fh:
        raw_lines = fh.read().splitlines()

    header: dict[str, str] = {}
    data_start = 0
    for lineno, line in enumerate(raw_lines, start=1):
        stripped = line.strip()
        if not stripped.startswith("#"):
            data_start = lineno
            break
        body = stripped.lstrip("#").strip()
        if "=" not in body:
            raise DatasetFormatError(f"malformed header {stripped!r}", line=lineno)
        key, _, value = body.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise DatasetFormatError(f"unknown header key {key!r}", line=lineno)
        if key in header:
            raise DatasetFormatError(f"duplicate header key {key!r}", line=lineno)
        header[key] = value.strip()
    else:
        data_start = len(raw_lines) + 1

    for key in _REQUIRED_KEYS:
        if key not in header:
            raise DatasetFormatError(f"missing header key {key!r}", line=data_start)
    try:
        schema = int(header["schema"])
        n_i = int(header["I"])
        n_j = int(header["J"])
        noise = float(header["noise"])
    except ValueError as exc:
        raise DatasetFormatError(f"bad header value: {exc}", line=data_start) from None
    if schema != _SCHEMA:
        raise DatasetFormatError(f"unsupported schema version {schema}", line=data_start)
    if n_i < 1 or n_j < 1:
        raise DatasetFormatError(f"invalid sizes I={n_i}, J={n_j}", line=data_start)
    seed = None if header["seed"] == "none" else int(header["seed"])
    kind = header.get("kind", "multiplicative")

    values = np.empty((n_i, n_j))
    count = 0
    last_line = data_start - 1
    for lineno in range(data_start, len(raw_lines) + 1):
        line = raw_lines[lineno - 1].strip()
        if not line:
            continue
        last_line = lineno
        fields = line.split(",")
        if len(fields) != 3:
            raise DatasetFormatError(
                f"expected 3 comma-separated fields, got {len(fields)}", line=lineno
            )
        try:
            i, j, v = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError as exc:
            raise DatasetFormatError(str(exc), line=lineno) from None
        if count >= n_i * n_j:
            raise DatasetFormatError(
                f"more data rows than the I*J={n_i * n_j} declared", line=lineno
            )
        exp_i, exp_j = divmod(count, n_j)
        if (i, j) != (exp_i, exp_j):
            raise DatasetFormatError(
                f"row out of order: expected ({exp_i},{exp_j}), got ({i},{j})",
                line=lineno,
            )
        values[i, j] = v
        count += 1
    if count != n_i * n_j:
        raise DatasetFormatError(
            f"expected {n_i * n_j} data rows, found {count}", line=last_line
        )
    if noise > 0:
        return Dataset(values=values, noise_level=noise, noise_kind=kind, seed=seed)
    return Dataset(values=values)

"""Experiments, campaign persistence, z-score normalization and fold construction."""
from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .sensors import (
    BOOLEAN_MASK,
    CSV_COLUMNS,
    N_SENSORS,
    NUMERIC_NAMES,
    SENSOR_NAMES,
    SENSOR_SPECS,
    Observation,
    ProximityBand,
    ScenarioLabel,
)

log = logging.getLogger(__name__)

N_DOORS = 3
META_COLUMNS = ("experiment_id", "scenario", "proximity", "door_start", "door_end")
HEADER = META_COLUMNS + CSV_COLUMNS


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Experiment:
    id: int
    scenario: ScenarioLabel
    proximity: ProximityBand
    door_start: int
    door_end: int
    times: np.ndarray
    values: np.ndarray  # (n_obs, 15); booleans stored as 0/1

    def __post_init__(self):
        object.__setattr__(self, "scenario", ScenarioLabel(self.scenario))
        object.__setattr__(self, "proximity", ProximityBand(self.proximity))
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or len(times) == 0:
            raise ValueError(f"experiment {self.id}: needs at least one observation")
        if values.shape != (len(times), N_SENSORS):
            raise ValueError(f"experiment {self.id}: values must be ({len(times)}, {N_SENSORS})")
        if np.any(np.diff(times) <= 0):
            raise ValueError(f"experiment {self.id}: timestamps must strictly increase")
        if self.door_start == self.door_end:
            raise ValueError(f"experiment {self.id}: start and end door coincide")
        for door in (self.door_start, self.door_end):
            if not 0 <= door < N_DOORS:
                raise ValueError(f"experiment {self.id}: door index {door} out of range")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def condition(self) -> tuple[int, int]:
        return int(self.scenario), int(self.proximity)

    @property
    def n_observations(self) -> int:
        return len(self.times)

    @property
    def observations(self) -> list[Observation]:
        return [Observation.from_values(t, row) for t, row in zip(self.times, self.values)]

    def __eq__(self, other):
        if not isinstance(other, Experiment):
            return NotImplemented
        return (
            (self.id, self.scenario, self.proximity, self.door_start, self.door_end)
            == (other.id, other.scenario, other.proximity, other.door_start, other.door_end)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class Dataset:
    experiments: tuple[Experiment, ...]
    seed: int | None = None
    config_digest: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "experiments", tuple(self.experiments))
        ids = [e.id for e in self.experiments]
        if len(set(ids)) != len(ids):
            raise ValueError("experiment ids must be unique")

    def __len__(self):
        return len(self.experiments)

    def __iter__(self):
        return iter(self.experiments)

    def by_id(self, ids: Iterable[int]) -> list[Experiment]:
        wanted = set(ids)
        return [e for e in self.experiments if e.id in wanted]

    def subset(self, scenarios: Sequence[int]) -> "Dataset":
        keep = tuple(e for e in self.experiments if int(e.scenario) in set(scenarios))
        return Dataset(keep, self.seed, self.config_digest)


def stack_observations(experiments: Sequence[Experiment]):
    """Feature matrix, per-row scenario labels and per-row experiment ids."""
    if not experiments:
        return np.empty((0, N_SENSORS)), np.empty(0, dtype=int), np.empty(0, dtype=int)
    X = np.vstack([e.values for e in experiments])
    y = np.concatenate([np.full(e.n_observations, int(e.scenario)) for e in experiments])
    ids = np.concatenate([np.full(e.n_observations, e.id) for e in experiments])
    return X, y, ids


# --- persistence -----------------------------------------------------------------

def _format(value: float, col: int) -> str:
    # col indexes SENSOR_SPECS; -1 means the timestamp
    if col < 0:
        return repr(float(value))
    spec = SENSOR_SPECS[col]
    if spec.kind == "temperature":
        return repr(float(value))
    return str(int(value))


def dumps_dataset(dataset: Dataset) -> str:
    buf = io.StringIO()
    if dataset.seed is not None:
        buf.write(f"# seed={dataset.seed}\n")
    if dataset.config_digest is not None:
        buf.write(f"# config_digest={dataset.config_digest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for e in dataset.experiments:
        meta = [e.id, int(e.scenario), e.proximity.label, e.door_start, e.door_end]
        for t, row in zip(e.times, e.values):
            writer.writerow(meta + [_format(t, -1)] + [_format(v, j) for j, v in enumerate(row)])
    return buf.getvalue()


def save_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text(dumps_dataset(dataset))


def loads_dataset(text: str) -> Dataset:
    lines = text.splitlines()
    provenance = {}
    start = 0
    while start < len(lines) and lines[start].startswith("#"):
        key, _, value = lines[start][1:].strip().partition("=")
        provenance[key.strip()] = value.strip()
        start += 1
    if start >= len(lines):
        raise DatasetFormatError("missing header row")
    reader = csv.reader(lines[start:])
    header = tuple(next(reader))
    if header != HEADER:
        raise DatasetFormatError(
            f"header mismatch: expected {len(HEADER)} columns {','.join(HEADER)}; got {','.join(header)}"
        )

    meta: dict[int, tuple] = {}
    rows: dict[int, list] = defaultdict(list)
    for offset, row in enumerate(reader):
        lineno = start + 2 + offset
        if len(row) != len(HEADER):
            raise DatasetFormatError(f"line {lineno}: expected {len(HEADER)} fields, got {len(row)}")
        try:
            exp_id = int(row[0])
            m = (int(row[1]), ProximityBand.from_label(row[2]), int(row[3]), int(row[4]))
            nums = [float(v) for v in row[5:]]
        except ValueError as exc:
            raise DatasetFormatError(f"line {lineno}: {exc}") from None
        if exp_id in meta and meta[exp_id] != m:
            raise DatasetFormatError(f"line {lineno}: labels for experiment {exp_id} change mid-file")
        meta.setdefault(exp_id, m)
        rows[exp_id].append(nums)

    experiments = []
    for exp_id, m in meta.items():
        data = np.array(rows[exp_id])
        experiments.append(Experiment(exp_id, m[0], m[1], m[2], m[3], data[:, 0], data[:, 1:]))
    seed = provenance.get("seed")
    return Dataset(tuple(experiments), None if seed is None else int(seed), provenance.get("config_digest"))


def load_dataset(path) -> Dataset:
    return loads_dataset(Path(path).read_text())


# --- normalization ---------------------------------------------------------------

_NUMERIC_COLS = np.flatnonzero(~BOOLEAN_MASK)


@dataclass(frozen=True)
class NormalizationStats:
    names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    constant: tuple[str, ...] = field(default=())


def _as_matrix(observations) -> np.ndarray:
    if len(observations) and isinstance(observations[0], Observation):
        return np.vstack([o.values() for o in observations])
    return np.asarray(observations, dtype=float)


def compute_stats(observations) -> NormalizationStats:
    """Per-variable sample mean and standard deviation (n - 1 denominator) of the numeric channels."""
    X = _as_matrix(observations)
    if X.ndim != 2 or X.shape[1] != N_SENSORS or X.shape[0] < 2:
        raise ValueError("need at least 2 observations of all 15 variables")
    numeric = X[:, _NUMERIC_COLS]
    mean = numeric.mean(axis=0)
    std = numeric.std(axis=0, ddof=1)
    constant = tuple(NUMERIC_NAMES[i] for i in np.flatnonzero(std == 0))
    if constant:
        log.debug("constant training variables: %s", ", ".join(constant))
    return NormalizationStats(NUMERIC_NAMES, mean, std, constant)


def normalize(x, stats: NormalizationStats) -> np.ndarray:
    """Z-score numeric channels; booleans pass through as 0/1; zero-variance channels map to 0."""
    x = np.array(x, dtype=float)
    cols = x[..., _NUMERIC_COLS]
    safe = np.where(stats.std > 0, stats.std, 1.0)
    x[..., _NUMERIC_COLS] = np.where(stats.std > 0, (cols - stats.mean) / safe, 0.0)
    return x


def denormalize(z, stats: NormalizationStats) -> np.ndarray:
    z = np.array(z, dtype=float)
    z[..., _NUMERIC_COLS] = z[..., _NUMERIC_COLS] * stats.std + stats.mean
    return z


# --- folds -----------------------------------------------------------------------

@dataclass(frozen=True)
class Fold:
    validation: frozenset
    training: frozenset


@dataclass(frozen=True)
class FoldPlan:
    k: int
    folds: tuple[Fold, ...]

    def restrict(self, ids: Iterable[int]) -> "FoldPlan":
        """The same partition limited to a subset of experiments (used by the two-class task)."""
        keep = frozenset(ids)
        return FoldPlan(self.k, tuple(Fold(f.validation & keep, f.training & keep) for f in self.folds))

    def to_csv(self) -> str:
        lines = ["fold,experiment_id"]
        for i, fold in enumerate(self.folds):
            lines.extend(f"{i},{exp_id}" for exp_id in sorted(fold.validation))
        return "\n".join(lines) + "\n"


def make_folds(dataset: Dataset, k: int = 10, rng=None) -> FoldPlan:
    """Deal each condition's shuffled experiments evenly across the k folds.

    With the default campaign (10 runs per condition) and k = 10 every fold
    validates on exactly one run of each condition.
    """
    if k < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(rng)
    by_condition: dict[tuple[int, int], list[int]] = defaultdict(list)
    for e in dataset.experiments:
        by_condition[e.condition].append(e.id)
    uneven = {c: len(ids) for c, ids in by_condition.items() if len(ids) % k}
    if uneven:
        raise ValueError(f"every condition needs a multiple of {k} experiments; got {uneven}")

    validation: list[set] = [set() for _ in range(k)]
    for condition in sorted(by_condition):
        ids = sorted(by_condition[condition])
        for pos, idx in enumerate(rng.permutation(len(ids))):
            validation[pos % k].add(ids[idx])
    everything = frozenset(e.id for e in dataset.experiments)
    folds = tuple(Fold(frozenset(v), everything - frozenset(v)) for v in validation)
    return FoldPlan(k, folds)


__all__ = [
    "DatasetFormatError", "Experiment", "Dataset", "stack_observations",
    "save_dataset", "load_dataset", "dumps_dataset", "loads_dataset",
    "NormalizationStats", "compute_stats", "normalize", "denormalize",
    "Fold", "FoldPlan", "make_folds", "SENSOR_NAMES",
]

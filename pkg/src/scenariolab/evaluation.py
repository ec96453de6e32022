"""Cross-validation, majority voting, null models, binary metrics and sweeps."""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .dataset import Dataset, FoldPlan, compute_stats, normalize, stack_observations
from .logreg import FitParams, LogRegModel, Penalty, fit_logreg
from .sensors import SENSOR_NAMES
from .trees import BoostEnsemble, Forest, TreeParams, fit_forest, fit_samme, variable_importance

MODES = ("3class", "2class")
BINARY_SCENARIOS = (1, 2)
POSITIVE_SCENARIO = 2

DEFAULT_PARAMS: dict[str, dict] = {
    "forest": {"n_trees": 100, "m_try": 4, "max_depth": None, "min_samples_split": 2},
    "samme": {"rounds": 100, "max_depth": 3},
    "logreg": {"penalty": "l2", "lam": 1e-4, "max_iter": 5000},
    "trivial": {},
    "random": {},
}
CLASSIFIER_KINDS = tuple(DEFAULT_PARAMS)

# first axis selects the curve, second is the x-axis
DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "forest": {"n_trees": [1, 5, 10, 25, 50, 100, 150], "m_try": list(range(1, 16))},
    "samme": {"max_depth": [1, 3], "rounds": [1, 5, 10, 25, 50, 100, 150]},
    "logreg": {"penalty": ["l1", "l2"], "lam": [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2]},
}


class FoldError(RuntimeError):
    def __init__(self, fold: int, cause: Exception):
        super().__init__(f"fold {fold}: {cause}")
        self.fold = fold


class SweepError(RuntimeError):
    def __init__(self, point: Mapping, cause: Exception):
        super().__init__(f"grid point {dict(point)}: {cause}")
        self.point = dict(point)


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DEFAULT_PARAMS:
            raise ValueError(f"unknown classifier {self.kind!r}; expected one of {', '.join(CLASSIFIER_KINDS)}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.kind])
        if unknown:
            raise ValueError(f"{self.kind} does not take {', '.join(sorted(unknown))}")
        merged = {**DEFAULT_PARAMS[self.kind], **self.params}
        if self.kind == "forest":
            if merged["n_trees"] < 1 or not 1 <= merged["m_try"] <= len(SENSOR_NAMES):
                raise ValueError("forest needs n_trees >= 1 and 1 <= m_try <= 15")
        elif self.kind == "samme":
            if merged["rounds"] < 1:
                raise ValueError("samme needs rounds >= 1")
        elif self.kind == "logreg":
            Penalty(merged["penalty"], merged["lam"])
        object.__setattr__(self, "params", merged)

    def with_params(self, **params) -> "ClassifierSpec":
        return ClassifierSpec(self.kind, {**self.params, **params})


# --- null models -----------------------------------------------------------------

def _modal(labels) -> int:
    values, counts = np.unique(np.asarray(labels), return_counts=True)
    return int(values[np.argmax(counts)])  # unique() sorts, so ties go to the lowest label


def null_trivial(train_labels, validation) -> np.ndarray:
    """Every validation row gets the most frequent training label."""
    if len(train_labels) == 0:
        raise ValueError("empty training set")
    n = validation if isinstance(validation, (int, np.integer)) else len(validation)
    return np.full(n, _modal(train_labels))


def null_random(train_labels, validation, rng) -> np.ndarray:
    """Labels drawn i.i.d. with the training class frequencies."""
    if len(train_labels) == 0:
        raise ValueError("empty training set")
    n = validation if isinstance(validation, (int, np.integer)) else len(validation)
    values, counts = np.unique(np.asarray(train_labels), return_counts=True)
    return np.random.default_rng(rng).choice(values, size=n, p=counts / counts.sum())


@dataclass(frozen=True)
class _ConstantModel:
    label: int

    def predict(self, X):
        return null_trivial([self.label], len(X))


@dataclass
class _FrequencyModel:
    train_labels: np.ndarray
    rng: np.random.Generator

    def predict(self, X):
        return null_random(self.train_labels, len(X), self.rng)


# --- scoring ---------------------------------------------------------------------

def experiment_vote(predictions) -> int:
    """Plurality label; ties go to the lowest label."""
    predictions = np.asarray(predictions, dtype=int)
    if predictions.size == 0:
        raise ValueError("cannot vote over an empty experiment")
    return int(np.argmax(np.bincount(predictions)))


def misclassification_error(predictions, labels) -> float:
    predictions, labels = np.asarray(predictions), np.asarray(labels)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise ValueError("predictions and labels must be non-empty and of equal length")
    return float(np.mean(predictions != labels))


def t_confidence_interval(values, level: float = 0.95) -> tuple[float, float]:
    """Mean and t-distribution half-width from per-fold values."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2:
        raise ValueError("need at least two folds")
    mean = float(values.mean())
    s = float(values.std(ddof=1))
    return mean, float(sps.t.ppf(0.5 + level / 2.0, n - 1) * s / np.sqrt(n))


@dataclass(frozen=True)
class BinaryMetrics:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n

    @property
    def f1(self) -> float | None:
        denom = 2 * self.tp + self.fp + self.fn
        return None if denom == 0 else 2 * self.tp / denom

    @property
    def mcc(self) -> float | None:
        """None when a confusion-matrix margin is empty (the coefficient divides by zero)."""
        tp, tn, fp, fn = self.tp, self.tn, self.fp, self.fn
        denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
        if denom == 0:
            return None
        return (tp * tn - fp * fn) / np.sqrt(float(denom))


def binary_metrics(predictions, labels, positive: int = POSITIVE_SCENARIO) -> BinaryMetrics:
    p = np.asarray(predictions) == positive
    t = np.asarray(labels) == positive
    if p.shape != t.shape or p.size == 0:
        raise ValueError("predictions and labels must be non-empty and of equal length")
    return BinaryMetrics(int(np.sum(p & t)), int(np.sum(~p & ~t)), int(np.sum(p & ~t)), int(np.sum(~p & t)))


# --- cross-validation -------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    mean: float
    half_width: float

    def __str__(self):
        return f"{self.mean:.3f} ± {self.half_width:.3f}"


def _interval(values) -> Interval | None:
    if any(v is None for v in values):
        return None
    return Interval(*t_confidence_interval(values))


@dataclass(eq=False)
class FoldResult:
    fold: int
    obs_predictions: np.ndarray
    obs_labels: np.ndarray
    obs_experiments: np.ndarray
    experiment_ids: np.ndarray
    exp_predictions: np.ndarray
    exp_labels: np.ndarray
    obs_error: float
    exp_error: float
    model: object = None
    obs_binary: BinaryMetrics | None = None
    exp_binary: BinaryMetrics | None = None
    importance: np.ndarray | None = None


@dataclass(eq=False)
class MetricReport:
    classifier: str
    mode: str
    n_folds: int
    obs_error: Interval
    exp_error: Interval
    # level -> metric -> Interval, None when undefined in some fold
    binary: dict = field(default_factory=dict)
    importance: "Importance | None" = None


@dataclass(eq=False)
class CrossValidation:
    spec: ClassifierSpec
    folds: list[FoldResult]
    report: MetricReport


def fit_classifier(spec: ClassifierSpec, X, y, rng, n_classes: int):
    """Fit on class indices ``0..n_classes-1``; returns an object with ``predict``."""
    p = spec.params
    if spec.kind == "forest":
        params = TreeParams(p["max_depth"], p["min_samples_split"])
        return fit_forest(X, y, p["n_trees"], p["m_try"], rng, params, n_classes=n_classes)
    if spec.kind == "samme":
        return fit_samme(X, y, p["rounds"], TreeParams(max_depth=p["max_depth"]), rng, n_classes=n_classes)
    if spec.kind == "logreg":
        return fit_logreg(X, y, Penalty(p["penalty"], p["lam"]), FitParams(max_iter=p["max_iter"]),
                          n_classes=n_classes)
    if spec.kind == "trivial":
        return _ConstantModel(_modal(y))
    return _FrequencyModel(np.asarray(y), rng)


def _task(dataset: Dataset, foldplan: FoldPlan, mode: str):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "2class":
        dataset = dataset.subset(BINARY_SCENARIOS)
        foldplan = foldplan.restrict(e.id for e in dataset.experiments)
    return dataset, foldplan


def cross_validate(dataset: Dataset, spec: ClassifierSpec, foldplan: FoldPlan, mode: str = "3class",
                   seed: int = 0, keep_models: bool = True) -> CrossValidation:
    """Per fold: training-set z-scores, fit, predict each validation observation, vote per experiment.

    In 2class mode only walk-across (negative) and walk-around (positive)
    experiments take part.  Fold ``i`` draws its randomness from
    ``SeedSequence([seed, i])``.
    """
    dataset, foldplan = _task(dataset, foldplan, mode)
    results = []
    for i, fold in enumerate(foldplan.folds):
        try:
            results.append(_run_fold(dataset, spec, fold, i, mode, seed, keep_models))
        except Exception as exc:
            raise FoldError(i, exc) from exc
    report = _summarize(spec, mode, results)
    return CrossValidation(spec, results, report)


def _run_fold(dataset, spec, fold, i, mode, seed, keep_models) -> FoldResult:
    X_tr, y_tr, _ = stack_observations(dataset.by_id(fold.training))
    X_va, y_va, ids_va = stack_observations(dataset.by_id(fold.validation))
    stats = compute_stats(X_tr)
    Z_tr, Z_va = normalize(X_tr, stats), normalize(X_va, stats)

    classes = np.unique(y_tr)
    encoded = np.searchsorted(classes, y_tr)
    rng = np.random.default_rng([seed, i])
    model = fit_classifier(spec, Z_tr, encoded, rng, len(classes))
    obs_pred = classes[np.asarray(model.predict(Z_va), dtype=int)]

    exp_ids = np.unique(ids_va)
    exp_pred = np.array([experiment_vote(obs_pred[ids_va == e]) for e in exp_ids])
    exp_lab = np.array([y_va[ids_va == e][0] for e in exp_ids])
    result = FoldResult(
        fold=i, obs_predictions=obs_pred, obs_labels=y_va, obs_experiments=ids_va,
        experiment_ids=exp_ids, exp_predictions=exp_pred, exp_labels=exp_lab,
        obs_error=misclassification_error(obs_pred, y_va),
        exp_error=misclassification_error(exp_pred, exp_lab),
        model=model if keep_models else None,
        importance=_fold_importance(model),
    )
    if mode == "2class":
        result.obs_binary = binary_metrics(obs_pred, y_va)
        result.exp_binary = binary_metrics(exp_pred, exp_lab)
    return result


def _summarize(spec, mode, results) -> MetricReport:
    report = MetricReport(
        classifier=spec.kind, mode=mode, n_folds=len(results),
        obs_error=_interval([r.obs_error for r in results]),
        exp_error=_interval([r.exp_error for r in results]),
    )
    if mode == "2class":
        for level in ("observation", "experiment"):
            ms = [r.obs_binary if level == "observation" else r.exp_binary for r in results]
            report.binary[level] = {
                "accuracy": _interval([m.accuracy for m in ms]),
                "f1": _interval([m.f1 for m in ms]),
                "mcc": _interval([m.mcc for m in ms]),
            }
    if spec.kind in ("forest", "samme", "logreg"):
        report.importance = aggregate_importance(results)
    return report


# --- importance ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Importance:
    """Per-variable importances; a (classes, 15) table of mean |coefficient| for logistic regression."""
    names: tuple[str, ...]
    values: np.ndarray
    classes: tuple[int, ...] | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.values.ndim == 1:
            writer.writerow(["variable", "importance"])
            for name, v in zip(self.names, self.values):
                writer.writerow([name, f"{v:.6f}"])
        else:
            writer.writerow(["variable"] + [f"scenario_{c}" for c in self.classes])
            for j, name in enumerate(self.names):
                writer.writerow([name] + [f"{v:.6f}" for v in self.values[:, j]])
        return buf.getvalue()


def _fold_importance(model):
    if isinstance(model, (Forest, BoostEnsemble)):
        return variable_importance(model)
    if isinstance(model, LogRegModel):
        return np.abs(model.coef)
    return None


def aggregate_importance(fold_results: Sequence[FoldResult]) -> Importance:
    """Mean over folds of tree importances, or of absolute logistic coefficients."""
    per_fold = [r.importance for r in fold_results]
    if not per_fold or any(v is None for v in per_fold):
        raise ValueError("every fold needs an importance-capable model")
    values = np.mean(per_fold, axis=0)
    classes = None
    if values.ndim == 2:
        classes = tuple(int(c) for c in np.unique(fold_results[0].obs_labels))
        if len(classes) != values.shape[0]:
            classes = tuple(range(values.shape[0]))
    return Importance(SENSOR_NAMES, values, classes)


# --- sweeps ----------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    params: dict
    obs_error: Interval
    exp_error: Interval


def sweep(dataset: Dataset, spec: ClassifierSpec, grid: Mapping[str, Sequence], foldplan: FoldPlan,
          mode: str = "3class", seed: int = 0) -> list[SweepRow]:
    """Full cross-validation at every point of the grid (axes in the given order)."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("sweep grid must be non-empty")
    axes = list(grid)
    rows = []
    for point in itertools.product(*(grid[a] for a in axes)):
        params = dict(zip(axes, point))
        try:
            cv = cross_validate(dataset, spec.with_params(**params), foldplan, mode, seed, keep_models=False)
        except Exception as exc:
            raise SweepError(params, exc) from exc
        rows.append(SweepRow(params, cv.report.obs_error, cv.report.exp_error))
    return rows


# --- tables ----------------------------------------------------------------------

def _fmt(interval: Interval | None) -> str:
    return "---" if interval is None else str(interval)


def report_csv(reports: Sequence[MetricReport]) -> str:
    """Table-shaped CSV: obs/exp error for 3class; accuracy, F1, MCC per level for 2class."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    modes = {r.mode for r in reports}
    if len(modes) != 1:
        raise ValueError("reports must share one mode")
    if modes == {"3class"}:
        writer.writerow(["classifier", "obs_error", "exp_error"])
        for r in reports:
            writer.writerow([r.classifier, _fmt(r.obs_error), _fmt(r.exp_error)])
    else:
        writer.writerow(["classifier", "level", "accuracy", "f1", "mcc"])
        for r in reports:
            for level, m in r.binary.items():
                writer.writerow([r.classifier, level, _fmt(m["accuracy"]), _fmt(m["f1"]), _fmt(m["mcc"])])
    return buf.getvalue()


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    axes = list(rows[0].params)
    writer.writerow(axes + ["obs_error", "obs_error_hw", "exp_error", "exp_error_hw"])
    for row in rows:
        writer.writerow([row.params[a] for a in axes] + [
            f"{row.obs_error.mean:.6f}", f"{row.obs_error.half_width:.6f}",
            f"{row.exp_error.mean:.6f}", f"{row.exp_error.half_width:.6f}"])
    return buf.getvalue()

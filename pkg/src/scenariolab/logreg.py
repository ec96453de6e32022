"""One-vs-rest logistic regression with an L1 or L2 penalty on the weights.

Each class gets a binary model fit by minimizing the mean negative
log-likelihood plus ``strength * penalty(w)``; the intercept is never
penalized.  Both penalties are fit by proximal gradient steps with
backtracking (soft-thresholding for L1, shrinkage for L2).  Each accepted
step lowers the objective, so the recorded history never increases.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Penalty:
    kind: str = "l2"
    strength: float = 1e-4

    def __post_init__(self):
        if self.kind not in ("l1", "l2"):
            raise ValueError(f"penalty kind must be 'l1' or 'l2', not {self.kind!r}")
        if not self.strength > 0:
            raise ValueError("penalty strength must be positive")

    def value(self, w: np.ndarray) -> float:
        if self.kind == "l1":
            return self.strength * float(np.abs(w).sum())
        return self.strength * float(w @ w)


@dataclass(frozen=True)
class FitParams:
    max_iter: int = 5000
    tol: float = 1e-8
    initial_step: float = 1.0


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def nll(theta: np.ndarray, X: np.ndarray, y01: np.ndarray) -> float:
    """Mean negative log-likelihood; ``theta`` is (intercept, weights...)."""
    z = theta[0] + X @ theta[1:]
    return float(np.mean(np.logaddexp(0.0, z) - y01 * z))


def smooth_loss_grad(theta: np.ndarray, X: np.ndarray, y01: np.ndarray, l2: float = 0.0):
    """Value and gradient of the mean NLL plus ``l2 * ||w||^2`` (intercept excluded)."""
    z = theta[0] + X @ theta[1:]
    r = (_sigmoid(z) - y01) / len(y01)
    w = theta[1:]
    value = float(np.mean(np.logaddexp(0.0, z) - y01 * z)) + l2 * float(w @ w)
    grad = np.empty_like(theta)
    grad[0] = r.sum()
    grad[1:] = X.T @ r + 2.0 * l2 * w
    return value, grad


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _prox(kind: str, w: np.ndarray, t: float) -> np.ndarray:
    """Proximal map of ``t * penalty`` for strength-scaled ``t``."""
    if kind == "l1":
        return soft_threshold(w, t)
    return w / (1.0 + 2.0 * t)


def _fit(X, y01, penalty: Penalty, params: FitParams):
    """Proximal gradient with backtracking on the unpenalized NLL.

    Keeping the penalty out of the step-size search means a huge strength
    cannot stall the intercept.
    """
    lam = penalty.strength
    theta = np.zeros(X.shape[1] + 1)
    g_val, grad = smooth_loss_grad(theta, X, y01)
    F = g_val + penalty.value(theta[1:])
    history = [F]
    step = params.initial_step
    converged = False
    for _ in range(params.max_iter):
        while True:
            cand = theta - step * grad
            cand[1:] = _prox(penalty.kind, cand[1:], step * lam)
            d = cand - theta
            g_new, grad_new = smooth_loss_grad(cand, X, y01)
            if g_new <= g_val + float(grad @ d) + float(d @ d) / (2.0 * step) or step < 1e-20:
                break
            step *= 0.5
        F_new = g_new + penalty.value(cand[1:])
        if F_new > F:
            converged = True
            break
        decrease = F - F_new
        theta, g_val, grad, F = cand, g_new, grad_new, F_new
        history.append(F)
        step *= 2.0
        if decrease < params.tol:
            converged = True
            break
    return theta, history, converged


@dataclass(frozen=True, eq=False)
class LogRegModel:
    coef: np.ndarray        # (K, p)
    intercept: np.ndarray   # (K,)
    penalty: Penalty
    n_iter: tuple[int, ...] = ()
    histories: tuple[tuple[float, ...], ...] = ()
    converged: bool = True

    @property
    def n_classes(self) -> int:
        return self.coef.shape[0]

    @property
    def final_objective(self) -> tuple[float, ...]:
        return tuple(h[-1] for h in self.histories)

    def scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return _sigmoid(X @ self.coef.T + self.intercept)

    def predict_proba(self, X) -> np.ndarray:
        s = self.scores(X)
        return s / s.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def fit_logreg(X, y, penalty: Penalty = Penalty(), params: FitParams = FitParams(),
               n_classes: int | None = None) -> LogRegModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    K = int(y.max()) + 1 if n_classes is None else n_classes
    if len(np.unique(y)) < 2:
        raise ValueError("logistic regression needs at least two classes in the training data")
    coef = np.zeros((K, X.shape[1]))
    intercept = np.zeros(K)
    n_iter, histories, converged = [], [], True
    for c in range(K):
        theta, history, ok = _fit(X, (y == c).astype(float), penalty, params)
        intercept[c], coef[c] = theta[0], theta[1:]
        n_iter.append(len(history) - 1)
        histories.append(tuple(history))
        converged &= ok
    if not converged:
        log.warning("logistic regression hit the iteration cap (%d) before converging", params.max_iter)
    return LogRegModel(coef, intercept, penalty, tuple(n_iter), tuple(histories), converged)


def predict_proba(model: LogRegModel, x) -> np.ndarray:
    return model.predict_proba(x)


def coefficient_report(model: LogRegModel, feature_names=None) -> tuple[list[str], np.ndarray]:
    """Column names and the (K, p + 1) coefficient table; the last column is the intercept."""
    p = model.coef.shape[1]
    names = list(feature_names) if feature_names is not None else [f"x{i}" for i in range(p)]
    if len(names) != p:
        raise ValueError("one name per feature required")
    return names + ["intercept"], np.column_stack([model.coef, model.intercept])

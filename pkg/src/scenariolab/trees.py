"""Gini decision trees, bootstrap random forests and SAMME boosting.

Labels are class indices ``0..K-1``.  Every fitted model exposes
``predict(X)`` and can be turned into plain dicts for JSON export.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _treekernels as _k

SAMME_ERR_FLOOR = 1e-12


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _kernel_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**32 - 1))


def gini(class_counts) -> float:
    counts = np.asarray(class_counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("class counts must be non-negative")
    n = counts.sum()
    if n == 0:
        raise ValueError("gini of an empty node is undefined")
    return float(1.0 - np.sum((counts / n) ** 2))


def _prepare(X, y, weights=None, n_classes=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ValueError("X must be (n, p) with one label per row, n >= 1")
    if np.any(y < 0):
        raise ValueError("labels must be class indices 0..K-1")
    w = np.ones(len(y)) if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
    if w.shape != y.shape or np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be non-negative, one per row, not all zero")
    K = int(y.max()) + 1 if n_classes is None else int(n_classes)
    return X, y, w, K


def best_split(X, y, weights=None, candidates=None, n_classes=None):
    """Split minimizing the weighted mean child Gini impurity, or None.

    Thresholds are midpoints between consecutive distinct values and samples
    with ``x <= threshold`` go left.  Ties go to the lowest feature index, then
    the lowest threshold.  None when the node is pure or nothing lowers the
    impurity.
    """
    X, y, w, K = _prepare(X, y, weights, n_classes)
    if candidates is None:
        candidates = range(X.shape[1])
    cands = np.array(sorted(set(int(c) for c in candidates)), dtype=np.int64)
    if len(cands) == 0:
        raise ValueError("candidate feature set is empty")
    idx = np.flatnonzero(w > 0)
    f, t, _ = _k.best_split_kernel(X, y, w, idx, 0, len(idx), cands, K)
    return None if f < 0 else (int(f), float(t))


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2
    m_try: int | None = None  # None: every feature is a candidate

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_split < 1:
            raise ValueError("min_samples_split must be >= 1")
        if self.m_try is not None and self.m_try < 1:
            raise ValueError("m_try must be >= 1")


@dataclass(frozen=True, eq=False)
class DecisionTree:
    feature: np.ndarray     # -1 on leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    fraction: np.ndarray    # share of the training weight reaching each node
    counts: np.ndarray      # (n_nodes, K) weighted class counts
    n_features: int

    @property
    def n_classes(self) -> int:
        return self.counts.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _k.apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.counts, axis=1)[self.apply(X)]

    def split_fractions(self) -> np.ndarray:
        """Per-feature sum of the training fractions of the nodes splitting on it."""
        out = np.zeros(self.n_features)
        internal = ~self.is_leaf
        np.add.at(out, self.feature[internal], self.fraction[internal])
        return out

    def to_dict(self) -> dict:
        nodes = []
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                nodes.append({"id": i, "feature": int(self.feature[i]), "threshold": float(self.threshold[i]),
                              "left": int(self.left[i]), "right": int(self.right[i]),
                              "fraction": float(self.fraction[i])})
            else:
                nodes.append({"id": i, "label": int(np.argmax(self.counts[i])),
                              "counts": [float(c) for c in self.counts[i]],
                              "fraction": float(self.fraction[i])})
        return {"kind": "tree", "n_features": self.n_features, "n_classes": self.n_classes, "nodes": nodes}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        nodes = d["nodes"]
        n = len(nodes)
        feature = np.full(n, -1, dtype=np.int64)
        threshold = np.zeros(n)
        left = np.full(n, -1, dtype=np.int64)
        right = np.full(n, -1, dtype=np.int64)
        fraction = np.zeros(n)
        counts = np.zeros((n, d["n_classes"]))
        for node in nodes:
            i = node["id"]
            fraction[i] = node["fraction"]
            if "feature" in node:
                feature[i], threshold[i] = node["feature"], node["threshold"]
                left[i], right[i] = node["left"], node["right"]
            else:
                counts[i] = node["counts"]
        # internal counts are not serialized; rebuild them bottom-up
        for i in range(n - 1, -1, -1):
            if feature[i] >= 0:
                counts[i] = counts[left[i]] + counts[right[i]]
        return cls(feature, threshold, left, right, fraction, counts, d["n_features"])


def fit_tree(X, y, weights=None, params: TreeParams = TreeParams(), rng=None, n_classes=None) -> DecisionTree:
    """Grow a tree greedily until nodes are pure, too small, or at ``max_depth``.

    With ``m_try`` below the feature count, each node considers only ``m_try``
    features drawn without replacement.  Leaves predict the weighted majority
    class, ties to the lowest index.
    """
    X, y, w, K = _prepare(X, y, weights, n_classes)
    p = X.shape[1]
    m_try = p if params.m_try is None else params.m_try
    if m_try > p:
        raise ValueError(f"m_try={m_try} exceeds the {p} available features")
    max_depth = -1 if params.max_depth is None else params.max_depth
    seed = _kernel_seed(_rng(rng))
    feature, threshold, left, right, weight, counts = _k.grow_tree(
        X, y, w, K, max_depth, params.min_samples_split, m_try, seed)
    return DecisionTree(feature, threshold, left, right, weight / weight[0], counts, p)


def _vote(votes: np.ndarray) -> np.ndarray:
    # argmax keeps the first maximum: ties go to the lowest class index
    return np.argmax(votes, axis=1)


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple[DecisionTree, ...]
    m_try: int
    seeds: tuple[int, ...]

    def __post_init__(self):
        if len(self.trees) < 1:
            raise ValueError("a forest needs at least one tree")

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_classes(self) -> int:
        return self.trees[0].n_classes

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        votes = np.zeros((len(X), self.n_classes))
        rows = np.arange(len(X))
        for tree in self.trees:
            votes[rows, tree.predict(X)] += 1
        return _vote(votes)

    def to_dict(self) -> dict:
        return {"kind": "forest", "m_try": self.m_try, "seeds": list(self.seeds),
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        return cls(tuple(DecisionTree.from_dict(t) for t in d["trees"]), d["m_try"], tuple(d["seeds"]))


def fit_forest(X, y, n_trees: int = 100, m_try: int | None = None, rng=None,
               params: TreeParams = TreeParams(), bootstrap: bool = True, n_classes=None) -> Forest:
    """Random forest: each tree sees a bootstrap resample of size n and ``m_try`` features per split.

    Each tree draws its bootstrap and feature subsets from its own generator,
    seeded from ``rng``; the seeds are kept on the model.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X, y, _, K = _prepare(X, y, None, n_classes)
    n, p = X.shape
    m_try = p if m_try is None else m_try
    tree_params = TreeParams(params.max_depth, params.min_samples_split, m_try)
    seeds = tuple(int(s) for s in _rng(rng).integers(0, 2**63 - 1, size=n_trees))
    trees = []
    for seed in seeds:
        tree_rng = np.random.default_rng(seed)
        if bootstrap:
            weights = np.bincount(tree_rng.integers(0, n, size=n), minlength=n).astype(float)
        else:
            weights = None
        trees.append(fit_tree(X, y, weights, tree_params, tree_rng, K))
    return Forest(tuple(trees), m_try, seeds)


def samme_alpha(err: float, n_classes: int) -> float:
    """Round weight ln((1 - err) / err) + ln(K - 1), capped for a perfect round."""
    cap = math.log(1e12 * (n_classes - 1))
    if err <= 0:
        return cap
    return min(math.log((1.0 - err) / err) + math.log(n_classes - 1), cap)


@dataclass(frozen=True, eq=False)
class BoostEnsemble:
    trees: tuple[DecisionTree, ...]
    alphas: np.ndarray
    n_classes: int
    errors: np.ndarray  # weighted training error of each retained round

    def __post_init__(self):
        if np.any(np.asarray(self.alphas) <= 0):
            raise ValueError("retained rounds need positive weights")

    @property
    def n_rounds(self) -> int:
        return len(self.trees)

    def decision_scores(self, X, rounds: int | None = None) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        scores = np.zeros((len(X), self.n_classes))
        rows = np.arange(len(X))
        for tree, alpha in list(zip(self.trees, self.alphas))[:rounds]:
            scores[rows, tree.predict(X)] += alpha
        return scores

    def predict(self, X, rounds: int | None = None) -> np.ndarray:
        return _vote(self.decision_scores(X, rounds))

    def to_dict(self) -> dict:
        return {"kind": "samme", "n_classes": self.n_classes, "alphas": [float(a) for a in self.alphas],
                "errors": [float(e) for e in self.errors], "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "BoostEnsemble":
        return cls(tuple(DecisionTree.from_dict(t) for t in d["trees"]), np.array(d["alphas"]),
                   d["n_classes"], np.array(d["errors"]))


def fit_samme(X, y, rounds: int = 100, params: TreeParams = TreeParams(max_depth=3), rng=None,
              n_classes=None) -> BoostEnsemble:
    """Multiclass AdaBoost (SAMME) over weighted Gini trees.

    A round whose weighted error reaches 1 - 1/K is discarded and ends the
    loop; a perfect round is kept with the capped weight and also ends it.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    X, y, _, K = _prepare(X, y, None, n_classes)
    if K < 2:
        raise ValueError("boosting needs at least two classes")
    rng = _rng(rng)
    n = len(y)
    w = np.full(n, 1.0 / n)
    trees, alphas, errors = [], [], []
    for _ in range(rounds):
        tree = fit_tree(X, y, w, params, rng, K)
        miss = tree.predict(X) != y
        err = float(w[miss].sum() / w.sum())
        if err >= 1.0 - 1.0 / K - SAMME_ERR_FLOOR:
            break
        alpha = samme_alpha(err, K)
        trees.append(tree)
        alphas.append(alpha)
        errors.append(err)
        if err <= 0:
            break
        w = w * np.exp(alpha * miss)
        w /= w.sum()
    if not trees:
        raise ValueError("first weak learner is no better than chance")
    return BoostEnsemble(tuple(trees), np.array(alphas), K, np.array(errors))


def variable_importance(model) -> np.ndarray:
    """Share of training observations routed through splits on each feature.

    Per tree, each feature collects the training fractions of the nodes that
    split on it; trees are weighted uniformly (forest) or by their round weight
    (boosting); the total is normalized to 1.  A model without any split gets
    all zeros.
    """
    if isinstance(model, DecisionTree):
        parts, weights = [model], [1.0]
    elif isinstance(model, Forest):
        parts, weights = model.trees, [1.0] * model.n_trees
    elif isinstance(model, BoostEnsemble):
        parts, weights = model.trees, list(model.alphas)
    else:
        raise TypeError(f"no tree importances for {type(model).__name__}")
    total = sum(wt * t.split_fractions() for t, wt in zip(parts, weights))
    s = total.sum()
    return total / s if s > 0 else total


def dumps_model(model) -> str:
    return json.dumps(model.to_dict(), indent=1)


def loads_model(text: str):
    d = json.loads(text)
    kinds = {"tree": DecisionTree, "forest": Forest, "samme": BoostEnsemble}
    return kinds[d["kind"]].from_dict(d)

"""Gradient-boosted decision trees with histogram split finding.

Small, deterministic and fully serializable so that a trained selector
bundle has no dependency on an external learner. Trees test ``x <= t``
against real-valued thresholds taken from the bin edges, which makes the
persisted model independent of the training-time binning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateData

_HESS_FLOOR = 1e-16


@dataclass(frozen=True)
class GBDTConfig:
    n_trees: int = 100
    max_depth: int = 6
    learning_rate: float = 0.1
    min_leaf: int = 5
    n_bins: int = 32
    l2: float = 1e-6
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "min_leaf": self.min_leaf,
            "n_bins": self.n_bins,
            "l2": self.l2,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GBDTConfig":
        return cls(**doc)


@dataclass
class Tree:
    """Flat array-of-nodes tree; feature == -1 marks a leaf."""

    feature: list[int] = field(default_factory=lambda: [-1])
    threshold: list[float] = field(default_factory=lambda: [0.0])
    left: list[int] = field(default_factory=lambda: [-1])
    right: list[int] = field(default_factory=lambda: [-1])
    value: list[float] = field(default_factory=lambda: [0.0])

    def add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            node = 0
            while self.feature[node] >= 0:
                node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
            out[i] = self.value[node]
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Tree":
        return cls(
            list(doc["feature"]),
            [float(t) for t in doc["threshold"]],
            list(doc["left"]),
            list(doc["right"]),
            [float(v) for v in doc["value"]],
        )


def _bin_edges(X: np.ndarray, n_bins: int) -> list[np.ndarray]:
    """Per-feature candidate thresholds (midpoints of unique/quantile values)."""
    edges = []
    for j in range(X.shape[1]):
        uniq = np.unique(X[:, j])
        if uniq.size <= 1:
            edges.append(np.empty(0))
        elif uniq.size <= n_bins:
            edges.append((uniq[:-1] + uniq[1:]) / 2.0)
        else:
            qs = np.quantile(uniq, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
            edges.append(np.unique(qs))
    return edges


def _bin_codes(X: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    codes = np.zeros(X.shape, dtype=np.int32)
    for j, e in enumerate(edges):
        if e.size:
            codes[:, j] = np.searchsorted(e, X[:, j], side="left")
    return codes


class _TreeGrower:
    """Depth-wise growth with histogram gain scans."""

    def __init__(self, codes: np.ndarray, edges: list[np.ndarray], config: GBDTConfig) -> None:
        self.codes = codes
        self.edges = edges
        self.config = config

    def grow(self, grad: np.ndarray, hess: np.ndarray) -> Tree:
        tree = Tree()
        self.grad, self.hess = grad, hess
        self._split_node(tree, 0, np.arange(len(grad)), depth=0)
        return tree

    def _leaf_value(self, idx: np.ndarray) -> float:
        g = float(self.grad[idx].sum())
        h = float(self.hess[idx].sum())
        return -g / (h + self.config.l2)

    def _split_node(self, tree: Tree, node: int, idx: np.ndarray, depth: int) -> None:
        cfg = self.config
        tree.value[node] = self._leaf_value(idx)
        if depth >= cfg.max_depth or idx.size < 2 * cfg.min_leaf:
            return
        g_total = float(self.grad[idx].sum())
        h_total = float(self.hess[idx].sum())
        parent_score = g_total**2 / (h_total + cfg.l2)

        best_gain = 0.0
        best: tuple[int, int] | None = None
        for j, e in enumerate(self.edges):
            if not e.size:
                continue
            c = self.codes[idx, j]
            n_bins = e.size + 1
            g_hist = np.bincount(c, weights=self.grad[idx], minlength=n_bins)
            h_hist = np.bincount(c, weights=self.hess[idx], minlength=n_bins)
            n_hist = np.bincount(c, minlength=n_bins)
            g_left = np.cumsum(g_hist)[:-1]
            h_left = np.cumsum(h_hist)[:-1]
            n_left = np.cumsum(n_hist)[:-1]
            g_right = g_total - g_left
            h_right = h_total - h_left
            n_right = idx.size - n_left
            valid = (n_left >= cfg.min_leaf) & (n_right >= cfg.min_leaf)
            if not valid.any():
                continue
            gain = np.where(
                valid,
                g_left**2 / (h_left + cfg.l2) + g_right**2 / (h_right + cfg.l2) - parent_score,
                -np.inf,
            )
            b = int(np.argmax(gain))
            if gain[b] > best_gain:
                best_gain = float(gain[b])
                best = (j, b)

        if best is None:
            return
        j, b = best
        go_left = self.codes[idx, j] <= b
        left_id = tree.add_node()
        right_id = tree.add_node()
        tree.feature[node] = j
        tree.threshold[node] = float(self.edges[j][b])
        tree.left[node] = left_id
        tree.right[node] = right_id
        self._split_node(tree, left_id, idx[go_left], depth + 1)
        self._split_node(tree, right_id, idx[~go_left], depth + 1)


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class GBDTClassifier:
    """Multi-class boosted trees with a softmax objective.

    A single-class fit degenerates (with a warning) to a constant predictor
    assigning probability 1 to that class.
    """

    def __init__(self, config: GBDTConfig | None = None) -> None:
        self.config = config or GBDTConfig()
        self.classes_: list[str] = []
        self.base_score_: list[float] = []
        self.trees_: list[list[Tree]] = []  # [round][class]
        self.train_losses_: list[float] = []

    def fit(self, X: np.ndarray, y: list[str]) -> "GBDTClassifier":
        X = np.asarray(X, dtype=np.float64)
        if not np.all(np.isfinite(X)):
            raise DegenerateData("features contain non-finite values")
        self.classes_ = sorted(set(y))
        n, k = X.shape[0], len(self.classes_)
        if n == 0:
            raise DegenerateData("empty training set")
        if k < 2:
            warnings.warn("single-class training data: falling back to a constant classifier")
            self.base_score_ = [0.0]
            self.trees_ = []
            self.train_losses_ = []
            return self

        class_index = {c: i for i, c in enumerate(self.classes_)}
        Y = np.zeros((n, k))
        Y[np.arange(n), [class_index[c] for c in y]] = 1.0
        priors = Y.mean(axis=0).clip(1e-12)
        self.base_score_ = np.log(priors).tolist()

        edges = _bin_edges(X, self.config.n_bins)
        codes = _bin_codes(X, edges)
        grower = _TreeGrower(codes, edges, self.config)

        F = np.tile(self.base_score_, (n, 1))
        self.trees_ = []
        self.train_losses_ = []
        for _ in range(self.config.n_trees):
            P = _softmax(F)
            round_trees = []
            for c in range(k):
                grad = P[:, c] - Y[:, c]
                hess = np.maximum(P[:, c] * (1.0 - P[:, c]), _HESS_FLOOR)
                tree = grower.grow(grad, hess)
                F[:, c] += self.config.learning_rate * tree.predict(X)
                round_trees.append(tree)
            self.trees_.append(round_trees)
            P = _softmax(F)
            self.train_losses_.append(float(-(Y * np.log(P.clip(1e-15))).sum() / n))
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if len(self.classes_) < 2:
            return np.ones((X.shape[0], 1))
        F = np.tile(self.base_score_, (X.shape[0], 1))
        for round_trees in self.trees_:
            for c, tree in enumerate(round_trees):
                F[:, c] += self.config.learning_rate * tree.predict(X)
        return _softmax(F)

    def predict(self, X: np.ndarray) -> list[str]:
        proba = self.predict_proba(X)
        return [self.classes_[i] for i in proba.argmax(axis=1)]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "classes": self.classes_,
            "base_score": self.base_score_,
            "trees": [[t.to_dict() for t in row] for row in self.trees_],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GBDTClassifier":
        model = cls(GBDTConfig.from_dict(doc["config"]))
        model.classes_ = list(doc["classes"])
        model.base_score_ = [float(b) for b in doc["base_score"]]
        model.trees_ = [[Tree.from_dict(t) for t in row] for row in doc["trees"]]
        return model


class GBDTRegressor:
    """Boosted regression trees with squared loss."""

    def __init__(self, config: GBDTConfig | None = None) -> None:
        self.config = config or GBDTConfig()
        self.base_score_ = 0.0
        self.trees_: list[Tree] = []
        self.train_losses_: list[float] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GBDTRegressor":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.shape[0] == 0:
            raise DegenerateData("empty training set")
        self.base_score_ = float(y.mean())

        edges = _bin_edges(X, self.config.n_bins)
        codes = _bin_codes(X, edges)
        grower = _TreeGrower(codes, edges, self.config)

        F = np.full(X.shape[0], self.base_score_)
        self.trees_ = []
        self.train_losses_ = []
        for _ in range(self.config.n_trees):
            grad = F - y
            hess = np.ones_like(y)
            tree = grower.grow(grad, hess)
            F += self.config.learning_rate * tree.predict(X)
            self.trees_.append(tree)
            self.train_losses_.append(float(np.mean((F - y) ** 2)))
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        F = np.full(X.shape[0], self.base_score_)
        for tree in self.trees_:
            F += self.config.learning_rate * tree.predict(X)
        return F

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "base_score": self.base_score_,
            "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GBDTRegressor":
        model = cls(GBDTConfig.from_dict(doc["config"]))
        model.base_score_ = float(doc["base_score"])
        model.trees_ = [Tree.from_dict(t) for t in doc["trees"]]
        return model

"""Gradient-boosted trees with second-order (Newton) logistic boosting.

Raw scores start at 0.  Each round subsamples rows and columns, fits a
depth-limited regression tree to the gradient/hessian statistics of the
logistic loss, and adds the shrunken leaf values -lr * G/(H + lambda).
Split gain is the usual second-order improvement; a split is accepted
only when both children carry at least ``min_child_hessian`` hessian
mass and the gain is positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError
from ..rng import RngKey
from .logistic import sigmoid
from .tree import FrozenTree, TreeArrays

_LAMBDA = 1.0
_MIN_CHILD_HESSIAN = 1.0
_MIN_GAIN = 1e-12


def _best_newton_split(X, g, h, feature_ids, min_child_hessian, lam):
    G = g.sum()
    H = h.sum()
    parent_score = G * G / (H + lam)
    best = None
    for f in feature_ids:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        v = col[order]
        boundaries = np.nonzero(v[:-1] < v[1:])[0]
        if boundaries.size == 0:
            continue
        cg = np.cumsum(g[order])
        ch = np.cumsum(h[order])
        GL = cg[boundaries]
        HL = ch[boundaries]
        GR = G - GL
        HR = H - HL
        valid = (HL >= min_child_hessian) & (HR >= min_child_hessian)
        if not valid.any():
            continue
        gain = np.where(
            valid,
            0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent_score),
            -np.inf,
        )
        k = int(np.argmax(gain))
        if gain[k] > _MIN_GAIN and (best is None or gain[k] > best[0]):
            threshold = 0.5 * (v[boundaries[k]] + v[boundaries[k] + 1])
            best = (float(gain[k]), int(f), threshold)
    return best


def _build_regression_tree(X, g, h, max_depth, min_child_hessian, lam, learning_rate):
    """Leaf values are the already-shrunken contributions -lr*G/(H+lam)."""
    arrays = TreeArrays()

    def grow(rows, depth):
        node = arrays.add_node()
        gs = g[rows]
        hs = h[rows]
        arrays.value[node] = float(-learning_rate * gs.sum() / (hs.sum() + lam))
        if depth >= max_depth:
            return node
        best = _best_newton_split(
            X[rows], gs, hs, range(X.shape[1]), min_child_hessian, lam
        )
        if best is None:
            return node
        _, f, threshold = best
        go_left = X[rows, f] <= threshold
        if not go_left.any() or go_left.all():
            return node
        arrays.feature[node] = f
        arrays.threshold[node] = threshold
        arrays.left[node] = grow(rows[go_left], depth + 1)
        arrays.right[node] = grow(rows[~go_left], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return arrays.finalize()


@dataclass(frozen=True)
class BoostedModel:
    trees: tuple  # FrozenTree over the subsampled column set
    columns: tuple  # per tree: indices into the full feature set
    train_losses: tuple  # mean logistic train loss after each round

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        raw = np.zeros(X.shape[0])
        for tree, cols in zip(self.trees, self.columns):
            raw += tree.predict_value(X[:, list(cols)])
        return raw

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.raw_scores(X))

    def to_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "columns": [list(c) for c in self.columns],
            "train_losses": list(self.train_losses),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedModel":
        return cls(
            trees=tuple(FrozenTree.from_dict(t) for t in d["trees"]),
            columns=tuple(tuple(c) for c in d["columns"]),
            train_losses=tuple(d["train_losses"]),
        )


def fit_boosted(
    X: np.ndarray,
    y: np.ndarray,
    rng: RngKey,
    n_rounds: int = 200,
    max_depth: int = 3,
    learning_rate: float = 0.1,
    row_subsample: float = 0.8,
    col_subsample: float = 0.8,
) -> BoostedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.isfinite(X).all():
        raise TrainingError("non-finite feature value")
    n, p = X.shape
    n_rows = max(1, int(round(row_subsample * n)))
    n_cols = max(1, int(round(col_subsample * p)))

    raw = np.zeros(n)
    trees = []
    columns = []
    losses = []
    for t in range(n_rounds):
        gen = rng.child("round", t).generator()
        rows = np.sort(gen.choice(n, size=n_rows, replace=False))
        cols = np.sort(gen.choice(p, size=n_cols, replace=False))
        prob = sigmoid(raw[rows])
        g = prob - y[rows]
        h = prob * (1.0 - prob)
        tree = _build_regression_tree(
            X[np.ix_(rows, cols)],
            g,
            h,
            max_depth=max_depth,
            min_child_hessian=_MIN_CHILD_HESSIAN,
            lam=_LAMBDA,
            learning_rate=learning_rate,
        )
        trees.append(tree)
        columns.append(tuple(int(c) for c in cols))
        raw += tree.predict_value(X[:, cols])
        losses.append(float(np.mean(np.logaddexp(0.0, raw) - y * raw)))
    return BoostedModel(trees=tuple(trees), columns=tuple(columns), train_losses=tuple(losses))

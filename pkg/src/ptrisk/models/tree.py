"""CART classification tree with weighted Gini impurity.

Split candidates are midpoints of consecutive distinct sorted feature
values.  Ties between equally good splits resolve to the lowest feature
index, then the lowest threshold, giving a fully deterministic tree.
The tree is stored as flat arrays (feature < 0 marks a leaf) so it can
be serialized to JSON verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError

_MIN_GAIN = 1e-12


@dataclass
class TreeArrays:
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)  # leaf probability / raw score

    def add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def finalize(self) -> "FrozenTree":
        return FrozenTree(
            feature=np.asarray(self.feature, dtype=np.intp),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.intp),
            right=np.asarray(self.right, dtype=np.intp),
            value=np.asarray(self.value, dtype=float),
        )


@dataclass(frozen=True)
class FrozenTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        idx = np.zeros(X.shape[0], dtype=np.intp)
        while True:
            feat = self.feature[idx]
            internal = feat >= 0
            if not internal.any():
                break
            rows = np.nonzero(internal)[0]
            node = idx[rows]
            go_left = X[rows, self.feature[node]] <= self.threshold[node]
            idx[rows] = np.where(go_left, self.left[node], self.right[node])
        return self.value[idx]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrozenTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.intp),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.intp),
            right=np.asarray(d["right"], dtype=np.intp),
            value=np.asarray(d["value"], dtype=float),
        )


def _best_gini_split(X, w, wpos, feature_ids, min_samples_leaf):
    """Best (gain, feature, threshold) over candidate features, or None."""
    n = X.shape[0]
    W = w.sum()
    Wp = wpos.sum()
    frac = Wp / W
    parent_gini = 1.0 - frac * frac - (1.0 - frac) * (1.0 - frac)

    best = None
    for f in feature_ids:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        v = col[order]
        boundaries = np.nonzero(v[:-1] < v[1:])[0]
        if boundaries.size == 0:
            continue
        counts = boundaries + 1
        valid = (counts >= min_samples_leaf) & (n - counts >= min_samples_leaf)
        if not valid.any():
            continue
        cw = np.cumsum(w[order])
        cwp = np.cumsum(wpos[order])
        b = boundaries[valid]
        WL = cw[b]
        WpL = cwp[b]
        WR = W - WL
        WpR = Wp - WpL
        fl = WpL / WL
        fr = WpR / WR
        gl = 1.0 - fl * fl - (1.0 - fl) * (1.0 - fl)
        gr = 1.0 - fr * fr - (1.0 - fr) * (1.0 - fr)
        gain = parent_gini - (WL * gl + WR * gr) / W
        k = int(np.argmax(gain))  # first maximum = lowest threshold
        if gain[k] > _MIN_GAIN and (best is None or gain[k] > best[0]):
            threshold = 0.5 * (v[b[k]] + v[b[k] + 1])
            best = (float(gain[k]), int(f), threshold)
    return best


def build_classification_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    max_depth: int,
    min_samples_leaf: int,
    feature_picker=None,
) -> FrozenTree:
    """Grow a CART tree; leaf value is the weighted positive fraction.

    ``feature_picker(n_features) -> candidate indices`` injects the
    per-split feature subsampling used by the forest; None means all
    features are candidates at every split.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if not np.isfinite(X).all():
        raise TrainingError("non-finite feature value")
    w = np.asarray(sample_weight, dtype=float)
    wpos = np.where(y == 1, w, 0.0)
    arrays = TreeArrays()

    def grow(rows: np.ndarray, depth: int) -> int:
        node = arrays.add_node()
        wr = w[rows]
        wp = wpos[rows]
        arrays.value[node] = float(wp.sum() / wr.sum())
        pure = wp.sum() == 0.0 or wp.sum() == wr.sum()
        if depth >= max_depth or rows.size < 2 * min_samples_leaf or pure:
            return node
        feature_ids = (
            range(X.shape[1]) if feature_picker is None else feature_picker(X.shape[1])
        )
        best = _best_gini_split(X[rows], wr, wp, feature_ids, min_samples_leaf)
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

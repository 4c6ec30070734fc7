import numpy as np
import pytest

from ptrisk.models import fit_knn


def knn_oracle(X_train, y_train, query, k=7):
    """O(n) scan with the same weighting rules, written independently."""
    dists = [float(np.sqrt(((row - query) ** 2).sum())) for row in X_train]
    order = sorted(range(len(dists)), key=lambda i: (dists[i], i))[: min(k, len(dists))]
    selected = [(dists[i], y_train[i]) for i in order]
    zeros = [label for d, label in selected if d == 0.0]
    if zeros:
        return sum(zeros) / len(zeros)
    num = sum(label / d for d, label in selected)
    den = sum(1.0 / d for d, _ in selected)
    return num / den


def test_zero_distance_unique_positive():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]])
    y = np.array([1, 0, 0, 0])
    model = fit_knn(X, y, k=3)
    assert model.predict_proba(np.array([[0.0, 0.0]]))[0] == 1.0


def test_zero_distance_group_votes_equally():
    X = np.array([[0.0], [0.0], [0.0], [5.0], [6.0]])
    y = np.array([1, 0, 1, 1, 1])
    model = fit_knn(X, y, k=5)
    # three stored points at distance zero: equal-weight vote 2/3
    assert model.predict_proba(np.array([[0.0]]))[0] == pytest.approx(2.0 / 3.0)


def test_matches_brute_force_oracle_on_planted_fixture():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(10, 3))
    y = rng.integers(0, 2, size=10)
    model = fit_knn(X, y, k=7)
    queries = rng.normal(size=(25, 3))
    got = model.predict_proba(queries)
    expected = [knn_oracle(X, y, q, k=7) for q in queries]
    assert got == pytest.approx(expected, abs=1e-12)


def test_small_training_set_uses_all_points():
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([1, 0, 1])
    model = fit_knn(X, y, k=7)
    probs = model.predict_proba(np.array([[0.5]]))
    assert 0.0 <= probs[0] <= 1.0
    assert probs[0] == pytest.approx(knn_oracle(X, y, np.array([0.5]), k=7))

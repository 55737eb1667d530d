"""Synthetic datasets and deterministic splits for experiments."""

import numpy as np

from .validation import as_float_matrix, as_label_vector


def generate_synthetic(n, d, k, spread, seed):
    """Gaussian class clusters around unit-norm random centers.

    Labels are balanced to within one sample per class. Returns
    (features, integer labels); deterministic for a fixed seed.
    """
    n, d, k = int(n), int(d), int(k)
    if k < 2:
        raise ValueError(f"need at least 2 classes, got {k}")
    if n < k:
        raise ValueError(f"need at least one sample per class: n={n}, k={k}")
    if spread < 0:
        raise ValueError(f"spread must be nonnegative, got {spread}")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((k, d))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    counts = np.full(k, n // k)
    counts[: n % k] += 1
    y = np.repeat(np.arange(k), counts)
    X = centers[y] + spread * rng.standard_normal((n, d))
    perm = rng.permutation(n)
    return X[perm], y[perm].astype(np.int64)


def train_test_split_stratified(X, y, test_fraction=1.0 / 6.0, seed=0):
    """Per-class random split; returns (X_train, y_train, X_test, y_test).

    Each class contributes round(count * test_fraction) test samples,
    always keeping at least one training sample per class. Deterministic
    for a fixed seed.
    """
    X = as_float_matrix(X, "X")
    y = as_label_vector(y, name="y")
    if y.size != X.shape[0]:
        raise ValueError("X and y disagree on sample count")
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    test_idx = []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        n_test = int(round(members.size * test_fraction))
        n_test = min(n_test, members.size - 1)
        if n_test > 0:
            picked = rng.choice(members, size=n_test, replace=False)
            test_idx.append(picked)
    test_idx = np.sort(np.concatenate(test_idx)) if test_idx else np.array([], dtype=np.int64)
    test_mask = np.zeros(y.size, dtype=bool)
    test_mask[test_idx] = True
    return X[~test_mask], y[~test_mask], X[test_mask], y[test_mask]

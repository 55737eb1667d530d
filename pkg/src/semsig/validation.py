"""Input checking helpers shared across the package."""

import numpy as np


def as_float_matrix(X, name="X"):
    """Coerce to a 2-D float64 array with finite entries."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"{name} must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def as_float_vector(x, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {x.shape}")
    if x.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def as_signature_matrix(codes, name="codes"):
    """Coerce to a 2-D array and require every entry to be -1 or +1."""
    codes = np.asarray(codes)
    if codes.ndim == 1:
        codes = codes.reshape(1, -1)
    if codes.ndim != 2 or codes.shape[0] == 0 or codes.shape[1] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {codes.shape}")
    codes = codes.astype(np.float64, copy=False)
    if not np.all(np.abs(codes) == 1.0):
        raise ValueError(f"{name} entries must all be -1 or +1")
    return codes


def as_signature_vector(sig, name="signature"):
    sig = np.asarray(sig)
    if sig.ndim != 1 or sig.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {sig.shape}")
    sig = sig.astype(np.float64, copy=False)
    if not np.all(np.abs(sig) == 1.0):
        raise ValueError(f"{name} entries must all be -1 or +1")
    return sig


def as_onehot_matrix(Y, name="Y"):
    """Require an n x c one-hot matrix: binary entries, exactly one 1 per row."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] == 0 or Y.shape[1] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {Y.shape}")
    if not np.all((Y == 0.0) | (Y == 1.0)):
        raise ValueError(f"{name} entries must be 0 or 1")
    if not np.all(Y.sum(axis=1) == 1.0):
        raise ValueError(f"{name} rows must each contain exactly one 1")
    return Y


def as_label_vector(y, n_classes=None, name="y"):
    """Coerce to a 1-D int64 label vector, optionally bounded by n_classes."""
    y = np.asarray(y)
    if y.ndim != 1 or y.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        yf = np.asarray(y, dtype=np.float64)
        if not np.all(yf == np.round(yf)):
            raise ValueError(f"{name} must contain integer class ids")
        y = yf.astype(np.int64)
    else:
        y = y.astype(np.int64, copy=False)
    if np.any(y < 0):
        raise ValueError(f"{name} contains negative class ids")
    if n_classes is not None and np.any(y >= n_classes):
        bad = int(y[np.argmax(y >= n_classes)])
        raise ValueError(f"{name} contains class id {bad} outside [0, {n_classes})")
    return y


def one_hot(y, n_classes=None):
    """Expand integer labels to an n x c one-hot matrix."""
    y = as_label_vector(y, n_classes=n_classes)
    c = int(n_classes) if n_classes is not None else int(y.max()) + 1
    Y = np.zeros((y.size, c), dtype=np.float64)
    Y[np.arange(y.size), y] = 1.0
    return Y


def labels_from_onehot(Y):
    Y = as_onehot_matrix(Y)
    return np.argmax(Y, axis=1).astype(np.int64)


def check_same_rows(a, b, name_a, name_b):
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"{name_a} and {name_b} disagree on row count: {a.shape[0]} vs {b.shape[0]}"
        )

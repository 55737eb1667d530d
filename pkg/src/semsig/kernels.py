"""Anchor-based RBF feature maps and regularized least-squares solves.

These are the dense numerical primitives shared by the signature trainer
and the domain-adaptation routines: picking anchor points from the data,
mapping inputs to Gaussian-kernel similarities against those anchors, and
solving ridge systems.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.distance import cdist

from .validation import as_float_matrix, as_float_vector

# Row block size for feature mapping; keeps the distance buffer small.
_MAP_CHUNK = 4096


@dataclass(frozen=True)
class AnchorSet:
    """Anchor points plus the kernel width used to map against them.

    anchors : m x d matrix whose rows are points drawn from training data.
    width   : positive divisor of the squared distance inside the Gaussian.
    indices : rows of the source matrix the anchors came from, when known.
    """

    anchors: np.ndarray
    width: float
    indices: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        anchors = as_float_matrix(self.anchors, "anchors")
        anchors = anchors.copy()
        anchors.setflags(write=False)
        object.__setattr__(self, "anchors", anchors)
        if not (self.width > 0):
            raise ValueError(f"width must be positive, got {self.width}")

    @property
    def count(self):
        return self.anchors.shape[0]

    @property
    def dim(self):
        return self.anchors.shape[1]


def median_heuristic_width(X, anchors):
    """Median of the nonzero squared point-anchor distances.

    Falls back to 1.0 when every point coincides with every anchor, so the
    returned width is always usable as a divisor.
    """
    X = as_float_matrix(X, "X")
    A = anchors.anchors if isinstance(anchors, AnchorSet) else as_float_matrix(anchors, "anchors")
    if X.shape[1] != A.shape[1]:
        raise ValueError(f"feature dimension mismatch: {X.shape[1]} vs {A.shape[1]}")
    d2 = cdist(X, A, "sqeuclidean").ravel()
    d2 = d2[d2 > 0.0]
    if d2.size == 0:
        return 1.0
    return float(np.median(d2))


def select_anchors(X, m, seed):
    """Draw m distinct rows of X uniformly without replacement.

    The kernel width is set by the median heuristic over the drawn anchors.
    Reproducible for a fixed seed.
    """
    X = as_float_matrix(X, "X")
    n = X.shape[0]
    m = int(m)
    if m < 1:
        raise ValueError(f"anchor count must be at least 1, got {m}")
    if m > n:
        raise ValueError(f"anchor count {m} exceeds sample count {n}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=m, replace=False))
    anchors = X[idx]
    width = median_heuristic_width(X, anchors)
    return AnchorSet(anchors=anchors, width=width, indices=idx)


def map_features(X, anchor_set, width=None):
    """Map rows of X to Gaussian similarities against every anchor.

    Entry (i, j) is exp(-||x_i - a_j||^2 / width). Values lie in (0, 1],
    hitting 1 exactly when the row equals the anchor.
    """
    X = as_float_matrix(X, "X")
    A = anchor_set.anchors
    if X.shape[1] != A.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: X has {X.shape[1]}, anchors have {A.shape[1]}"
        )
    w = anchor_set.width if width is None else float(width)
    if not (w > 0):
        raise ValueError(f"width must be positive, got {w}")
    out = np.empty((X.shape[0], A.shape[0]), dtype=np.float64)
    for start in range(0, X.shape[0], _MAP_CHUNK):
        stop = min(start + _MAP_CHUNK, X.shape[0])
        d2 = cdist(X[start:stop], A, "sqeuclidean")
        np.exp(-d2 / w, out=out[start:stop])
    return out


def rbf_map(x, anchor_set, width=None):
    """Single-vector version of map_features; returns a length-m vector."""
    x = as_float_vector(x, "x")
    return map_features(x.reshape(1, -1), anchor_set, width=width)[0]


def ridge_solve(A, T, lam):
    """Solve min_S ||A S - T||^2 + lam ||S||^2.

    Returns (A'A + lam I)^(-1) A'T via a Cholesky factorization of the
    normal equations. lam = 0 is allowed only when A'A is invertible;
    otherwise the factorization fails and a LinAlgError is raised.
    """
    A = as_float_matrix(A, "A")
    T = as_float_matrix(T, "T")
    if A.shape[0] != T.shape[0]:
        raise ValueError(f"row mismatch: A has {A.shape[0]} rows, T has {T.shape[0]}")
    lam = float(lam)
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    G = A.T @ A
    if lam > 0:
        G[np.diag_indices_from(G)] += lam
    try:
        factor = cho_factor(G, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"normal equations are singular (lam={lam}); "
            "increase the ridge term or drop dependent columns"
        ) from exc
    return cho_solve(factor, A.T @ T, check_finite=False)

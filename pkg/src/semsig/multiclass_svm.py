"""Multiclass linear SVM with the single-slack (Crammer-Singer) hinge.

The primal problem solved here is

    min_W  (alpha/2) ||W||^2 + sum_i xi_i
    xi_i = max_m (w_m.x_i + [m != y_i]) - w_{y_i}.x_i

which is the standard multiclass hinge scaled so that `alpha` plays the
role of the ridge weight. Training runs dual coordinate descent: the dual
has one vector of c variables per sample constrained to sum to zero and
sit below C * onehot(y_i), and each per-sample block minimization is a
quadratic knapsack solved exactly by a breakpoint sweep.

`reference_dual_solver` is a deliberately independent slow path (projected
gradient on the same dual, with a bisection projection) used to validate
the coordinate-descent results.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .validation import as_float_matrix, as_label_vector


def _sweep_project(b, u):
    """argmin ||v - b||^2 subject to sum(v) = 0 and v <= u, elementwise.

    KKT gives v = min(u, b - theta) with theta making the sum vanish. The
    constraint sum g(theta) = sum(min(u, b - theta)) is non-increasing and
    piecewise linear with breakpoints at b - u; walking the breakpoints in
    descending order, the first one where g is nonnegative brackets the
    root, and the segment is solved in closed form. Whenever sum(u) > 0,
    g at the smallest breakpoint equals sum(u), so the walk always lands.
    """
    c = b.size
    beta = b - u
    order = np.argsort(-beta)
    beta_sorted = beta[order]
    u_sorted = u[order]
    b_sorted = b[order]
    b_total = b.sum()
    clamp_u = 0.0
    clamp_b = 0.0
    for k in range(c):
        free_sum = clamp_u + b_total - clamp_b
        if free_sum - (c - k) * beta_sorted[k] >= 0.0:
            theta = free_sum / (c - k)
            return np.minimum(u, b - theta)
        clamp_u += u_sorted[k]
        clamp_b += b_sorted[k]
    raise RuntimeError("projection infeasible: upper bounds sum below zero")


def _bisect_project(B, U, iters=80):
    """Row-wise projection onto {v : sum(v) = 0, v <= u} by bisection.

    Independent of the sweep-based solver on purpose; used only by the
    reference path. Operates on whole matrices at once.
    """
    lo = (B - U).min(axis=1) - 1.0
    hi = B.max(axis=1) + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        s = np.minimum(U, B - mid[:, None]).sum(axis=1)
        high = s > 0.0
        lo = np.where(high, mid, lo)
        hi = np.where(high, hi, mid)
    theta = 0.5 * (lo + hi)
    V = np.minimum(U, B - theta[:, None])
    # Exactness of the zero-sum constraint up to bisection tolerance only;
    # spread any residue over the unclamped coordinates.
    free = V < U - 1e-12
    n_free = np.maximum(free.sum(axis=1), 1)
    V -= free * (V.sum(axis=1) / n_free)[:, None]
    return V


def dual_objective(alphas, X, y):
    """Value of the maximized dual at the given dual variables.

    y must hold contiguous class indices 0..c-1 matching the columns of
    alphas. Computed as -(0.5 ||W||^2 + sum e.alpha) with W = alphas^T X;
    at the optimum this equals the minimized primal of the problem scaled
    so the hinge terms carry weight C and the ridge weight is 1/2.
    """
    X = as_float_matrix(X, "X")
    W = alphas.T @ X
    E = 1.0 - np.eye(alphas.shape[1])[y]
    return float(-(0.5 * (W * W).sum() + (E * alphas).sum()))


def primal_objective(W, X, y, alpha):
    """(alpha/2) ||W||^2 + summed multiclass hinge on (X, y)."""
    X = as_float_matrix(X, "X")
    scores = X @ W.T
    n = X.shape[0]
    margins = scores + 1.0
    margins[np.arange(n), y] -= 1.0
    xi = margins.max(axis=1) - scores[np.arange(n), y]
    return float(0.5 * alpha * (W * W).sum() + xi.sum())


def reference_dual_solver(X, y, C, iters=3000):
    """Slow independent dual solve by accelerated projected gradient.

    Returns (alphas, dual value). Deterministic: starts from zero and uses
    an exact top-eigenvalue step size.
    """
    X = as_float_matrix(X, "X")
    y = as_label_vector(y)
    n = X.shape[0]
    c = int(y.max()) + 1
    K = X @ X.T
    L = float(np.linalg.eigvalsh(K)[-1])
    L = max(L, 1e-12)
    E = 1.0 - np.eye(c)[y]
    U = C * np.eye(c)[y]

    A = np.zeros((n, c))
    Z = A.copy()
    t = 1.0
    best = A.copy()
    best_f = np.inf
    for _ in range(iters):
        grad = K @ Z + E
        A_next = _bisect_project(Z - grad / L, U)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Z = A_next + ((t - 1.0) / t_next) * (A_next - A)
        A, t = A_next, t_next
        W = A.T @ X
        f = 0.5 * (W * W).sum() + (E * A).sum()
        if f < best_f:
            best_f = f
            best = A.copy()
    return best, float(-best_f)


class CrammerSingerSVM(BaseEstimator, ClassifierMixin):
    """Linear multiclass SVM trained by dual coordinate descent.

    Parameters
    ----------
    alpha : ridge weight of the primal; the dual box size is C = 1/alpha.
    max_passes : upper bound on sweeps over the data.
    tol : stop when no per-sample dual block moved more than tol * C
        during a full pass.
    seed : order of the per-pass sample permutation.
    """

    def __init__(self, alpha=1.0, max_passes=50, tol=1e-6, seed=0):
        self.alpha = alpha
        self.max_passes = max_passes
        self.tol = tol
        self.seed = seed

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = as_label_vector(y)
        if X.shape[0] != y.size:
            raise ValueError("X and y disagree on sample count")
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        classes, y_idx = np.unique(y, return_inverse=True)
        n, d = X.shape
        c = classes.size
        C = 1.0 / float(self.alpha)

        E = 1.0 - np.eye(c)[y_idx]
        U = C * np.eye(c)[y_idx]
        sq_norms = (X * X).sum(axis=1)

        alphas = np.zeros((n, c))
        W = np.zeros((c, d))
        rng = np.random.default_rng(self.seed)
        passes = 0
        for sweep in range(int(self.max_passes)):
            passes += 1
            biggest_move = 0.0
            for i in rng.permutation(n):
                a = sq_norms[i]
                if a <= 0.0:
                    continue
                x_i = X[i]
                g = W @ x_i
                b = alphas[i] - (g + E[i]) / a
                v = _sweep_project(b, U[i])
                delta = v - alphas[i]
                move = float(np.abs(delta).max())
                if move > 0.0:
                    W += np.outer(delta, x_i)
                    alphas[i] = v
                if move > biggest_move:
                    biggest_move = move
            if biggest_move <= self.tol * C:
                break

        self.classes_ = classes
        self.coef_ = W
        self.dual_coef_ = alphas
        self.n_passes_ = passes
        self.dual_objective_ = dual_objective(alphas, X, y_idx)
        self.primal_objective_ = primal_objective(W, X, y_idx, self.alpha)
        return self

    def decision_function(self, X):
        X = as_float_matrix(X, "X")
        return X @ self.coef_.T

    def predict(self, X):
        scores = self.decision_function(X)
        # argmax takes the first maximum, so ties go to the lowest class.
        return self.classes_[np.argmax(scores, axis=1)]

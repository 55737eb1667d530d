"""Supervised discrete hashing: learn binary signatures for labeled data.

Training alternates three exact sub-steps. Given current signatures, a
linear classifier is fit on them (ridge regression onto the one-hot
labels, or a multiclass hinge SVM). Given the signatures, a projection
from anchor-mapped features onto the code space is fit by ridge
regression. Given classifier and projection, every signature bit is
reset to the sign that minimizes its penalized fit, which is available
in closed form for both loss kinds. The loop stops when the objective
stalls and no bit moved, or after a fixed number of passes.

Unseen inputs are encoded by mapping against the anchors, projecting,
and taking signs, with sign(0) fixed to +1 throughout.
"""

import time
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .kernels import AnchorSet, map_features, ridge_solve, select_anchors
from .multiclass_svm import CrammerSingerSVM
from .validation import (
    as_float_matrix,
    as_onehot_matrix,
    as_signature_matrix,
    check_same_rows,
    one_hot,
)

_LOSS_KINDS = ("squared", "hinge")


@dataclass(frozen=True)
class TrainConfig:
    """Knobs of the alternating trainer.

    code_bits    : signature length B.
    anchor_count : requested number of anchors; capped at the sample count.
    alpha        : classifier ridge weight.
    penalty      : coupling weight between signatures and projected features.
    max_iters    : outer-iteration cap.
    loss_kind    : 'squared' or 'hinge' classifier fit.
    proj_lambda  : ridge term protecting the projection solve.
    tol          : objective-change threshold for convergence.
    hinge_passes : coordinate-descent sweeps per hinge classifier fit.
    kernel_width : explicit kernel width; None selects the median heuristic.
    seed         : master seed; anchor choice, code init, and hinge sweep
                   order all derive from it.
    """

    code_bits: int = 32
    anchor_count: int = 1000
    alpha: float = 1.0
    penalty: float = 1e-4
    max_iters: int = 100
    loss_kind: str = "squared"
    proj_lambda: float = 1e-6
    tol: float = 1e-9
    hinge_passes: int = 100
    kernel_width: float | None = None
    seed: int = 0

    def validate(self):
        if self.code_bits < 1:
            raise ValueError(f"code_bits must be at least 1, got {self.code_bits}")
        if self.anchor_count < 1:
            raise ValueError(f"anchor_count must be at least 1, got {self.anchor_count}")
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.penalty > 0):
            raise ValueError(f"penalty must be positive, got {self.penalty}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.loss_kind not in _LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {_LOSS_KINDS}, got {self.loss_kind!r}")
        if self.proj_lambda < 0:
            raise ValueError(f"proj_lambda must be nonnegative, got {self.proj_lambda}")
        if not (self.tol > 0):
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.hinge_passes < 1:
            raise ValueError(f"hinge_passes must be at least 1, got {self.hinge_passes}")
        if self.kernel_width is not None and not (self.kernel_width > 0):
            raise ValueError(f"kernel_width must be positive, got {self.kernel_width}")
        return self


@dataclass(frozen=True)
class HashModel:
    """Everything needed to encode unseen inputs, plus diagnostics.

    anchor_set : anchors and kernel width of the feature map.
    projection : m x B matrix taking mapped features to code space.
    classifier : B x c matrix whose column k is the weight vector of
                 class k in code space (kept for diagnostics and
                 domain adaptation).
    classes    : original label of each classifier column.
    config     : echo of the training configuration as a plain dict.
    """

    anchor_set: AnchorSet
    projection: np.ndarray
    classifier: np.ndarray
    classes: np.ndarray
    config: dict

    def __post_init__(self):
        Q = as_float_matrix(self.projection, "projection").copy()
        W = as_float_matrix(self.classifier, "classifier").copy()
        if Q.shape[0] != self.anchor_set.count:
            raise ValueError("projection rows must match the anchor count")
        if W.shape[0] != Q.shape[1]:
            raise ValueError("classifier rows must match the code length")
        classes = np.asarray(self.classes, dtype=np.int64).copy()
        if classes.size != W.shape[1]:
            raise ValueError("classes must match the classifier columns")
        for arr in (Q, W, classes):
            arr.setflags(write=False)
        object.__setattr__(self, "projection", Q)
        object.__setattr__(self, "classifier", W)
        object.__setattr__(self, "classes", classes)

    @property
    def code_bits(self):
        return self.projection.shape[1]

    @property
    def n_classes(self):
        return self.classifier.shape[1]


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    objective_after_w: float
    objective_after_q: float
    objective: float
    bits_flipped: int
    seconds: float


@dataclass(frozen=True)
class TrainTrace:
    """Per-iteration objective values and bit flips, plus the stop reason."""

    records: tuple
    status: str

    @property
    def iterations(self):
        return len(self.records)

    @property
    def objectives(self):
        return np.array([r.objective for r in self.records])

    @property
    def total_bits_flipped(self):
        return int(sum(r.bits_flipped for r in self.records))


def init_codes(n, code_bits, seed):
    """Uniform random +-1 matrix of shape (n, code_bits)."""
    n = int(n)
    code_bits = int(code_bits)
    if n < 1 or code_bits < 1:
        raise ValueError("n and code_bits must be at least 1")
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=(n, code_bits)).astype(np.float64) * 2.0 - 1.0


def w_step_squared(codes, Y, alpha):
    """Ridge fit of the one-hot labels onto the codes.

    Returns the c x B matrix minimizing ||codes - Y W||^2 + alpha ||W||^2,
    so row k is the code-space weight vector of class k and Y @ W recovers
    each sample's class pattern.
    """
    codes = as_signature_matrix(codes, "codes")
    Y = as_onehot_matrix(Y, "Y")
    check_same_rows(codes, Y, "codes", "Y")
    return ridge_solve(Y, codes, alpha)


def w_step_hinge(codes, Y, alpha, max_passes=100, seed=0):
    """Multiclass hinge fit of class weights on the codes.

    Minimizes (alpha/2) ||W||^2 plus the summed multiclass hinge loss and
    returns W as c x B. Classes missing from Y keep zero weights.
    """
    codes = as_signature_matrix(codes, "codes")
    Y = as_onehot_matrix(Y, "Y")
    check_same_rows(codes, Y, "codes", "Y")
    labels = np.argmax(Y, axis=1)
    svm = CrammerSingerSVM(alpha=alpha, max_passes=max_passes, seed=seed)
    svm.fit(codes, labels)
    W = np.zeros((Y.shape[1], codes.shape[1]))
    W[svm.classes_] = svm.coef_
    return W


def q_step(phi, codes, proj_lambda):
    """Ridge fit of the codes onto the mapped features.

    Returns the m x B matrix minimizing ||codes - phi Q||^2
    + proj_lambda ||Q||^2.
    """
    phi = as_float_matrix(phi, "phi")
    codes = as_signature_matrix(codes, "codes")
    check_same_rows(phi, codes, "phi", "codes")
    return ridge_solve(phi, codes, proj_lambda)


def b_step_squared(F_vals, Y, W, penalty):
    """Closed-form signature update under the squared classifier loss.

    Every entry independently minimizes (b - a)^2 + penalty (b - f)^2
    over b in {-1, +1}, where a is the class pattern Y W and f the
    projected feature value; the minimizer is sign(a + penalty * f) with
    sign(0) = +1.
    """
    F_vals = as_float_matrix(F_vals, "F_vals")
    Y = as_onehot_matrix(Y, "Y")
    W = as_float_matrix(W, "W")
    check_same_rows(F_vals, Y, "F_vals", "Y")
    if W.shape != (Y.shape[1], F_vals.shape[1]):
        raise ValueError(
            f"W must have shape {(Y.shape[1], F_vals.shape[1])}, got {W.shape}"
        )
    if penalty < 0:
        raise ValueError(f"penalty must be nonnegative, got {penalty}")
    scores = Y @ W + penalty * F_vals
    return np.where(scores >= 0.0, 1.0, -1.0)


def b_step_hinge(F_vals, Y, W, penalty):
    """Closed-form signature update under the hinge classifier loss.

    Row i becomes sign(F_i + (1/(2 penalty)) * sum_k (w_true(i) - w_k)),
    maximizing the per-row linear surrogate exactly; sign(0) = +1.
    """
    F_vals = as_float_matrix(F_vals, "F_vals")
    Y = as_onehot_matrix(Y, "Y")
    W = as_float_matrix(W, "W")
    check_same_rows(F_vals, Y, "F_vals", "Y")
    if W.shape != (Y.shape[1], F_vals.shape[1]):
        raise ValueError(
            f"W must have shape {(Y.shape[1], F_vals.shape[1])}, got {W.shape}"
        )
    if not (penalty > 0):
        raise ValueError(f"penalty must be positive, got {penalty}")
    labels = np.argmax(Y, axis=1)
    c = Y.shape[1]
    margin = c * W[labels] - W.sum(axis=0)[None, :]
    scores = F_vals + margin / (2.0 * penalty)
    return np.where(scores >= 0.0, 1.0, -1.0)


def objective(codes, Y, W, F_vals, *, alpha, penalty):
    """Size-normalized training objective.

    With n samples, B bits, and k classes, returns

        penalty/(nB) ||codes - F||^2 + 1/(nB) ||codes - Y W||^2
        + alpha'/(kB) ||W||^2,   alpha' = alpha k / n,

    so the data terms are averaged per entry and the ridge weight adapts
    with the sample count.
    """
    codes = as_signature_matrix(codes, "codes")
    Y = as_onehot_matrix(Y, "Y")
    W = as_float_matrix(W, "W")
    F_vals = as_float_matrix(F_vals, "F_vals")
    n, B = codes.shape
    k = Y.shape[1]
    alpha_prime = alpha * k / n
    fit_term = penalty / (n * B) * float(((codes - F_vals) ** 2).sum())
    class_term = 1.0 / (n * B) * float(((codes - Y @ W) ** 2).sum())
    ridge_term = alpha_prime / (k * B) * float((W * W).sum())
    return fit_term + class_term + ridge_term


def _resolve_labels(y, n_classes=None):
    """Accept integer labels or a one-hot matrix; return (labels, classes)."""
    y = np.asarray(y)
    if y.ndim == 2:
        Y = as_onehot_matrix(y, "y")
        labels = np.argmax(Y, axis=1).astype(np.int64)
        classes = np.arange(Y.shape[1], dtype=np.int64)
        return labels, classes
    classes, idx = np.unique(np.asarray(y, dtype=np.int64), return_inverse=True)
    return idx.astype(np.int64), classes


def train(X, y, config=None, **overrides):
    """Run the alternating trainer.

    y may be integer class labels or a one-hot matrix. Returns the tuple
    (model, codes, trace) where codes are the final training signatures
    as an int8 matrix.
    """
    if config is None:
        config = TrainConfig(**overrides)
    elif overrides:
        raise ValueError("pass either a config or keyword overrides, not both")
    config.validate()

    X = as_float_matrix(X, "X")
    labels, classes = _resolve_labels(y)
    if labels.size != X.shape[0]:
        raise ValueError("X and y disagree on sample count")
    n = X.shape[0]
    c = classes.size
    if n < c:
        raise ValueError(f"need at least one sample per class: n={n}, classes={c}")
    counts = np.bincount(labels, minlength=c)
    if (counts == 0).any():
        empty = int(np.flatnonzero(counts == 0)[0])
        raise ValueError(f"class {empty} has no samples")
    Y = one_hot(labels, c)
    B = config.code_bits

    seed_root = np.random.SeedSequence(config.seed)
    s_anchor, s_init, s_svm = seed_root.spawn(3)
    svm_seed = int(s_svm.generate_state(1)[0])

    anchor_set = select_anchors(X, min(n, config.anchor_count), np.random.default_rng(s_anchor))
    if config.kernel_width is not None:
        anchor_set = AnchorSet(
            anchors=anchor_set.anchors, width=config.kernel_width, indices=anchor_set.indices
        )
    phi = map_features(X, anchor_set)
    codes = init_codes(n, B, np.random.default_rng(s_init))

    def fit_w(current):
        if config.loss_kind == "squared":
            return w_step_squared(current, Y, config.alpha)
        return w_step_hinge(
            current, Y, config.alpha, max_passes=config.hinge_passes, seed=svm_seed
        )

    def step_b(F_vals, W):
        if config.loss_kind == "squared":
            return b_step_squared(F_vals, Y, W, config.penalty)
        return b_step_hinge(F_vals, Y, W, config.penalty)

    # The projection solve depends only on the codes, so the value computed
    # here doubles as iteration 1's Q-step result.
    Q = q_step(phi, codes, config.proj_lambda)

    records = []
    status = "max-iters"
    prev_obj = None
    for it in range(1, config.max_iters + 1):
        t0 = time.perf_counter()
        W = fit_w(codes)
        F_vals = phi @ Q
        obj_w = objective(codes, Y, W, F_vals, alpha=config.alpha, penalty=config.penalty)

        if it > 1:
            Q = q_step(phi, codes, config.proj_lambda)
            F_vals = phi @ Q
        obj_q = objective(codes, Y, W, F_vals, alpha=config.alpha, penalty=config.penalty)

        new_codes = step_b(F_vals, W)
        flips = int(np.count_nonzero(new_codes != codes))
        codes = new_codes
        obj = objective(codes, Y, W, F_vals, alpha=config.alpha, penalty=config.penalty)

        records.append(
            IterationRecord(
                iteration=it,
                objective_after_w=obj_w,
                objective_after_q=obj_q,
                objective=obj,
                bits_flipped=flips,
                seconds=time.perf_counter() - t0,
            )
        )
        if prev_obj is not None and abs(prev_obj - obj) < config.tol and flips == 0:
            status = "converged"
            prev_obj = obj
            break
        prev_obj = obj

    if records and records[-1].bits_flipped > 0:
        # Stopped with pending flips; refresh the projection so the stored
        # model matches the final signatures.
        Q = q_step(phi, codes, config.proj_lambda)

    model = HashModel(
        anchor_set=anchor_set,
        projection=Q,
        classifier=W.T,
        classes=classes,
        config=asdict(config),
    )
    trace = TrainTrace(records=tuple(records), status=status)
    return model, codes.astype(np.int8), trace


def encode(model, X):
    """Signatures of one input vector or a matrix of inputs.

    Maps against the model's anchors, projects, and takes signs with
    sign(0) = +1. Returns int8; a single vector in gives a single vector
    out.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    phi = map_features(X.reshape(1, -1) if single else X, model.anchor_set)
    scores = phi @ model.projection
    codes = np.where(scores >= 0.0, 1, -1).astype(np.int8)
    return codes[0] if single else codes


class SemanticHashEncoder(BaseEstimator, TransformerMixin):
    """Estimator wrapper around the discrete-hash trainer.

    fit(X, y) learns the model, transform(X) returns signatures, and
    predict(X) reads class labels off the learned code-space classifier.
    Constructor parameters mirror TrainConfig.
    """

    def __init__(
        self,
        code_bits=32,
        anchor_count=1000,
        alpha=1.0,
        penalty=1e-4,
        max_iters=100,
        loss_kind="squared",
        proj_lambda=1e-6,
        tol=1e-9,
        hinge_passes=100,
        kernel_width=None,
        seed=0,
    ):
        self.code_bits = code_bits
        self.anchor_count = anchor_count
        self.alpha = alpha
        self.penalty = penalty
        self.max_iters = max_iters
        self.loss_kind = loss_kind
        self.proj_lambda = proj_lambda
        self.tol = tol
        self.hinge_passes = hinge_passes
        self.kernel_width = kernel_width
        self.seed = seed

    def _config(self):
        return TrainConfig(
            code_bits=self.code_bits,
            anchor_count=self.anchor_count,
            alpha=self.alpha,
            penalty=self.penalty,
            max_iters=self.max_iters,
            loss_kind=self.loss_kind,
            proj_lambda=self.proj_lambda,
            tol=self.tol,
            hinge_passes=self.hinge_passes,
            kernel_width=self.kernel_width,
            seed=self.seed,
        )

    def fit(self, X, y):
        model, codes, trace = train(X, y, self._config())
        self.model_ = model
        self.codes_ = codes
        self.trace_ = trace
        self.classes_ = model.classes
        self.anchor_set_ = model.anchor_set
        self.anchor_indices_ = model.anchor_set.indices
        self.projection_ = model.projection
        self.classifier_ = model.classifier
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("this encoder is not fitted yet; call fit first")

    def transform(self, X):
        self._check_fitted()
        return encode(self.model_, X)

    def predict(self, X):
        """Class of the highest-scoring classifier column per signature."""
        self._check_fitted()
        codes = self.transform(X).astype(np.float64)
        scores = codes @ self.classifier_
        return self.classes_[np.argmax(scores, axis=1)]

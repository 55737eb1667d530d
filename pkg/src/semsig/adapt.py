"""Aligning a trained model with a differently-distributed receiver set.

The joint objective scored here adds two terms to the sender-side
training objective: the mean per-sample entropy of the classifier's
class probabilities on receiver inputs, and a multi-kernel discrepancy
between the sender and receiver feature distributions measured in the
anchor feature space at several kernel widths. Adaptation pseudo-labels
confidently-retrieved receiver samples, refits the projection and
classifier on the weighted union, and keeps the refit only while the
joint objective strictly decreases.
"""

from dataclasses import dataclass

import numpy as np

from .encoder import HashModel, encode, objective
from .kernels import map_features, ridge_solve
from .retrieval import KnowledgeBase, reconstruct
from .validation import as_float_matrix, one_hot

_DEFAULT_MULTIPLIERS = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class DahConfig:
    """Weights and controls of the adaptation loop.

    eta        : weight of the receiver entropy term.
    gamma      : weight of the discrepancy term, and the relative weight
                 of pseudo-labeled receiver rows during refits.
    bandwidth_multipliers : kernel-width multiples used by the
                 discrepancy term.
    max_adapt_iters : refit attempts before giving up.
    confidence : minimum class probability for a pseudo-label to count.
    vote_radius : Hamming radius of the pseudo-labeling vote.
    """

    eta: float = 1.0
    gamma: float = 1.0
    bandwidth_multipliers: tuple = _DEFAULT_MULTIPLIERS
    max_adapt_iters: int = 5
    confidence: float = 0.8
    vote_radius: int = 2

    def __post_init__(self):
        if self.eta < 0 or self.gamma < 0:
            raise ValueError("eta and gamma must be nonnegative")
        mult = tuple(float(v) for v in self.bandwidth_multipliers)
        if not mult or any(v <= 0 for v in mult):
            raise ValueError("bandwidth_multipliers must be a non-empty positive list")
        object.__setattr__(self, "bandwidth_multipliers", mult)
        if self.max_adapt_iters < 1:
            raise ValueError("max_adapt_iters must be at least 1")
        if not (0.0 < self.confidence <= 1.0):
            raise ValueError(f"confidence must be in (0, 1], got {self.confidence}")
        if self.vote_radius < 0:
            raise ValueError(f"vote_radius must be nonnegative, got {self.vote_radius}")


@dataclass(frozen=True)
class AdaptRecord:
    iteration: int
    j_value: float
    accepted: bool
    n_pseudo: int


@dataclass(frozen=True)
class DahReport:
    """Joint objective value, its three terms, and the adaptation trace."""

    j_value: float
    fit_term: float
    entropy_term: float
    mmd_term: float
    trace: tuple = ()
    adapted: bool = False


def mkmmd(Xs, Xr, anchor_set, multipliers=_DEFAULT_MULTIPLIERS):
    """Multi-kernel discrepancy between two samples in anchor space.

    For each width multiplier, both samples are mapped against the
    anchors at that width and the squared distance between the feature
    means is taken; the results are summed. Zero when the samples are
    identical, symmetric, and nonnegative.
    """
    Xs = as_float_matrix(Xs, "Xs")
    Xr = as_float_matrix(Xr, "Xr")
    if Xs.shape[1] != Xr.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: {Xs.shape[1]} vs {Xr.shape[1]}"
        )
    total = 0.0
    for mult in multipliers:
        width = float(mult) * anchor_set.width
        mean_s = map_features(Xs, anchor_set, width=width).mean(axis=0)
        mean_r = map_features(Xr, anchor_set, width=width).mean(axis=0)
        diff = mean_s - mean_r
        total += float(diff @ diff)
    return total


def _class_probs(model, X):
    """Rows of class probabilities: softmax of projected-feature scores."""
    X = as_float_matrix(X, "X")
    F = map_features(X, model.anchor_set) @ model.projection
    scores = F @ model.classifier
    scores -= scores.max(axis=1, keepdims=True)
    P = np.exp(scores)
    P /= P.sum(axis=1, keepdims=True)
    return P


def entropy_loss(model, Xr):
    """Mean base-2 entropy of the class probabilities on receiver inputs."""
    if model.n_classes < 2:
        raise ValueError("entropy loss needs at least 2 classes")
    P = _class_probs(model, Xr)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log2(P), 0.0)
    return float(-terms.sum(axis=1).mean())


def _fit_term(model, Xs, Ys):
    """Sender training objective at the model's current parameters."""
    labels = _labels_in_model_space(model, Ys)
    Y = one_hot(labels, model.n_classes)
    phi = map_features(Xs, model.anchor_set)
    F_vals = phi @ model.projection
    codes = np.where(F_vals >= 0.0, 1.0, -1.0)
    cfg = model.config or {}
    return objective(
        codes,
        Y,
        model.classifier.T,
        F_vals,
        alpha=float(cfg.get("alpha", 1.0)),
        penalty=float(cfg.get("penalty", 1e-4)),
    )


def _labels_in_model_space(model, y):
    """Map raw labels (or one-hot rows) onto classifier column indices."""
    y = np.asarray(y)
    if y.ndim == 2:
        return np.argmax(y, axis=1).astype(np.int64)
    idx = np.searchsorted(model.classes, y)
    if np.any(idx >= model.classes.size) or np.any(model.classes[idx] != y):
        raise ValueError("labels contain classes the model was not trained on")
    return idx.astype(np.int64)


def dah_objective(model, Xs, Ys, Xr, config):
    """Joint objective: sender fit + eta * entropy + gamma * discrepancy."""
    fit = _fit_term(model, Xs, Ys)
    entropy = entropy_loss(model, Xr) if model.n_classes >= 2 else 0.0
    mmd = mkmmd(Xs, Xr, model.anchor_set, config.bandwidth_multipliers)
    j = fit + config.eta * entropy + config.gamma * mmd
    return DahReport(j_value=j, fit_term=fit, entropy_term=entropy, mmd_term=mmd)


def _pseudo_labels(model, kb, Xr, config):
    """Voted labels for receiver rows passing the confidence gate.

    Returns (row indices, labels). A row qualifies when its radius vote
    is non-empty and the classifier's top class probability clears the
    confidence threshold.
    """
    codes_r = encode(model, Xr)
    conf = _class_probs(model, Xr).max(axis=1)
    idx, labels = [], []
    for i in range(codes_r.shape[0]):
        if conf[i] < config.confidence:
            continue
        vote = reconstruct(kb, codes_r[i], config.vote_radius)
        if vote.label is None:
            continue
        idx.append(i)
        labels.append(vote.label)
    return np.array(idx, dtype=np.int64), np.array(labels, dtype=np.int64)


def _weighted_ridge(A, T, weights, lam):
    sw = np.sqrt(weights)[:, None]
    return ridge_solve(A * sw, T * sw, lam)


def adapt(model, Xs, Ys, Xr, config):
    """Refit projection and classifier against pseudo-labeled receiver data.

    Per iteration: receiver rows are pseudo-labeled by a radius vote
    against the sender signatures and gated on classifier confidence;
    the projection and classifier are refit on the union of sender and
    accepted receiver rows, receiver rows carrying relative weight gamma
    (weights are normalized so duplicating the sender set is a no-op);
    the refit is kept only if the joint objective strictly drops.
    Returns (model, report); the report's `adapted` flag is False when
    nothing changed.
    """
    Xs = as_float_matrix(Xs, "Xs")
    Xr = as_float_matrix(Xr, "Xr")
    start = dah_objective(model, Xs, Ys, Xr, config)
    if config.eta == 0.0 and config.gamma == 0.0:
        return model, start

    labels_s = _labels_in_model_space(model, Ys)
    cfg = model.config or {}
    alpha = float(cfg.get("alpha", 1.0))
    proj_lambda = float(cfg.get("proj_lambda", 1e-6))
    c = model.n_classes

    phi_s = map_features(Xs, model.anchor_set)

    current = model
    current_j = start.j_value
    trace = []
    for it in range(1, config.max_adapt_iters + 1):
        # Vote against signatures from the model in force, so stored and
        # query codes live in the same space after an accepted refit.
        kb = KnowledgeBase(encode(current, Xs), labels_s)
        idx, pseudo = _pseudo_labels(current, kb, Xr, config)
        if idx.size == 0:
            trace.append(AdaptRecord(iteration=it, j_value=current_j, accepted=False, n_pseudo=0))
            break

        phi_r = map_features(Xr[idx], current.anchor_set)
        phi_u = np.vstack([phi_s, phi_r])
        Y_u = one_hot(np.concatenate([labels_s, pseudo]), c)
        codes_u = np.where(phi_u @ current.projection >= 0.0, 1.0, -1.0)
        n_s = Xs.shape[0]
        scale = n_s / (n_s + config.gamma * idx.size)
        weights = np.concatenate(
            [np.full(n_s, scale), np.full(idx.size, config.gamma * scale)]
        )

        W_new = _weighted_ridge(Y_u, codes_u, weights, alpha)
        Q_new = _weighted_ridge(phi_u, codes_u, weights, proj_lambda)
        candidate = HashModel(
            anchor_set=current.anchor_set,
            projection=Q_new,
            classifier=W_new.T,
            classes=current.classes,
            config=current.config,
        )
        cand_report = dah_objective(candidate, Xs, Ys, Xr, config)
        accepted = cand_report.j_value < current_j - 1e-12
        trace.append(
            AdaptRecord(
                iteration=it,
                j_value=cand_report.j_value if accepted else current_j,
                accepted=accepted,
                n_pseudo=int(idx.size),
            )
        )
        if not accepted:
            break
        current = candidate
        current_j = cand_report.j_value

    final = dah_objective(current, Xs, Ys, Xr, config)
    report = DahReport(
        j_value=final.j_value,
        fit_term=final.fit_term,
        entropy_term=final.entropy_term,
        mmd_term=final.mmd_term,
        trace=tuple(trace),
        adapted=current is not model,
    )
    return current, report

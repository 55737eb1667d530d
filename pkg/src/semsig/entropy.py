"""Information measures for sizing semantic signatures.

A message source emits message ids with known probabilities, and an
ontology map sends every message to a symbol (its meaning class). The
functions here compute the message entropy, the induced symbol
distribution and its entropy, and the mutual information between the two
ensembles, which is the average number of bits a signature actually has
to carry.
"""

import math
from dataclasses import dataclass

import numpy as np

_PROB_TOL = 1e-9


def _check_distribution(probs, name="probabilities"):
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array")
    if np.any(p < 0):
        raise ValueError(f"{name} must be nonnegative")
    total = float(p.sum())
    if abs(total - 1.0) > _PROB_TOL:
        raise ValueError(f"{name} must sum to 1, got {total!r}")
    return p


def _entropy_bits(p):
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


@dataclass(frozen=True)
class MessageModel:
    """A finite message ensemble and its ontology map.

    message_ids : identifier per message.
    probs       : emission probability per message; sums to 1.
    symbols     : symbol id each message maps to (one symbol per message).
    """

    message_ids: tuple
    probs: np.ndarray
    symbols: tuple

    def __post_init__(self):
        ids = tuple(self.message_ids)
        symbols = tuple(self.symbols)
        if len(ids) != len(symbols):
            raise ValueError("message_ids and symbols must align")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate message id; each message maps to one symbol")
        probs = _check_distribution(self.probs, "message probabilities")
        if probs.size != len(ids):
            raise ValueError("message_ids and probs must align")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "message_ids", ids)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "probs", probs)

    @property
    def symbol_ids(self):
        """Distinct symbols in first-appearance order."""
        seen = []
        for s in self.symbols:
            if s not in seen:
                seen.append(s)
        return tuple(seen)


@dataclass(frozen=True)
class EntropyReport:
    """Entropies (bits) of a message model and its symbol image."""

    h_message: float
    h_symbol: float
    mutual_info: float
    h_x_given_m: float
    h_m_given_x: float


def message_entropy(model):
    """Shannon entropy of the message distribution, in bits."""
    return _entropy_bits(model.probs)


def symbol_distribution(model):
    """Aggregate message probabilities by symbol: P(x) = sum over f(m)=x."""
    dist = {}
    for sym, p in zip(model.symbols, model.probs):
        dist[sym] = dist.get(sym, 0.0) + float(p)
    return dist


def semantic_entropy(symbol_probs):
    """Entropy of a symbol distribution, in bits.

    Accepts either a mapping from symbol to probability or a bare array
    of probabilities.
    """
    if isinstance(symbol_probs, dict):
        p = np.array(list(symbol_probs.values()), dtype=np.float64)
    else:
        p = np.asarray(symbol_probs, dtype=np.float64)
    p = _check_distribution(p, "symbol probabilities")
    return _entropy_bits(p)


def semantic_mutual_information(model):
    """Mutual information between messages and their symbols.

    Because the ontology map is a function, each message contributes zero
    conditional symbol entropy, so the mutual information equals the
    symbol entropy exactly. The report carries both conditionals so the
    two textbook forms H(M) - H(M|X) and H(X) - H(X|M) can be compared.
    """
    h_m = message_entropy(model)
    dist = symbol_distribution(model)
    h_x = semantic_entropy(dist)

    # H(M|X) = sum_x P(x) H(M | X = x) from the joint table.
    h_m_given_x = 0.0
    for sym, px in dist.items():
        if px <= 0:
            continue
        cond = np.array(
            [p for s, p in zip(model.symbols, model.probs) if s == sym and p > 0],
            dtype=np.float64,
        )
        cond = cond / px
        h_m_given_x += px * _entropy_bits(cond)

    # Deterministic map: knowing the message pins the symbol.
    h_x_given_m = 0.0
    return EntropyReport(
        h_message=h_m,
        h_symbol=h_x,
        mutual_info=h_x - h_x_given_m,
        h_x_given_m=h_x_given_m,
        h_m_given_x=h_m_given_x,
    )


def recommend_code_length(report, margin=8.0):
    """Suggested signature length: ceil(mutual information x margin).

    The margin leaves room above the information-theoretic floor; the
    result is clamped to at least one bit.
    """
    margin = float(margin)
    if margin < 1.0:
        raise ValueError(f"margin must be at least 1, got {margin}")
    return max(1, math.ceil(report.mutual_info * margin))


def load_message_model(path):
    """Read a message model from a tab-separated text file.

    Each line is `message_id<TAB>probability<TAB>symbol_id`. Blank lines
    and lines starting with `#` are skipped.
    """
    ids, probs, symbols = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}"
                )
            ids.append(parts[0])
            try:
                probs.append(float(parts[1]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad probability {parts[1]!r}") from exc
            symbols.append(parts[2])
    if not ids:
        raise ValueError(f"{path}: no message rows found")
    return MessageModel(message_ids=tuple(ids), probs=np.array(probs), symbols=tuple(symbols))


def save_message_model(path, model):
    """Write a message model in the same tab-separated format."""
    with open(path, "w", encoding="utf-8") as fh:
        for mid, p, sym in zip(model.message_ids, model.probs, model.symbols):
            fh.write(f"{mid}\t{p:.17g}\t{sym}\n")

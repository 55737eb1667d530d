"""Hamming-radius retrieval over stored signatures, with quality metrics.

The knowledge base keeps one signature per item together with a label
and a stable id. Queries scan the whole base: signatures are packed into
64-bit words once at construction, so a scan is a vectorized xor plus
popcount per word. Results order by distance, then id. Precision within
a radius and mean average precision over the distance ranking follow the
usual retrieval conventions; a query whose ball comes back empty counts
as a miss (precision 0), and a query with no relevant item in the base
is excluded from the mean average precision but reported.
"""

from dataclasses import dataclass

import numpy as np

from .validation import as_label_vector, as_signature_matrix, as_signature_vector

# Query rows processed per block when building distance tables.
_QUERY_CHUNK = 256


def pack_signatures(codes):
    """Pack a +-1 matrix into rows of 64-bit words (+1 becomes a set bit)."""
    codes = as_signature_matrix(codes, "codes")
    n, width = codes.shape
    n_words = (width + 63) // 64
    bits = (codes > 0).astype(np.uint8)
    packed = np.packbits(bits, axis=1)
    padded = np.zeros((n, n_words * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view(np.uint64)


def hamming_distance(a, b):
    """Number of positions where two signatures differ."""
    a = as_signature_vector(a, "a")
    b = as_signature_vector(b, "b")
    if a.size != b.size:
        raise ValueError(f"signature lengths differ: {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))


class KnowledgeBase:
    """Immutable store of (signature, label, id) rows for retrieval.

    ids default to row numbers and must be unique; they break distance
    ties during ranking.
    """

    def __init__(self, codes, labels, ids=None):
        codes = as_signature_matrix(codes, "codes")
        labels = as_label_vector(labels, name="labels")
        if labels.size != codes.shape[0]:
            raise ValueError("codes and labels disagree on row count")
        if ids is None:
            ids = np.arange(codes.shape[0], dtype=np.int64)
        else:
            ids = np.asarray(ids, dtype=np.int64)
            if ids.ndim != 1 or ids.size != codes.shape[0]:
                raise ValueError("ids must align with the code rows")
            if np.unique(ids).size != ids.size:
                raise ValueError("ids must be unique")
        self.codes = codes.astype(np.int8)
        self.labels = labels
        self.ids = ids
        self._packed = pack_signatures(codes)
        for arr in (self.codes, self.labels, self.ids, self._packed):
            arr.setflags(write=False)

    def __len__(self):
        return self.codes.shape[0]

    @property
    def code_bits(self):
        return self.codes.shape[1]

    def distances(self, query_codes):
        """Hamming distances of every query row to every stored row."""
        query_codes = as_signature_matrix(query_codes, "query_codes")
        if query_codes.shape[1] != self.code_bits:
            raise ValueError(
                f"query length {query_codes.shape[1]} != base length {self.code_bits}"
            )
        q_packed = pack_signatures(query_codes)
        out = np.empty((query_codes.shape[0], len(self)), dtype=np.int64)
        for start in range(0, q_packed.shape[0], _QUERY_CHUNK):
            stop = min(start + _QUERY_CHUNK, q_packed.shape[0])
            xor = q_packed[start:stop, None, :] ^ self._packed[None, :, :]
            out[start:stop] = np.bitwise_count(xor).sum(axis=2, dtype=np.int64)
        return out


@dataclass(frozen=True)
class QueryResult:
    """Items within a radius, ordered by (distance, id)."""

    ids: np.ndarray
    labels: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return self.ids.size


@dataclass(frozen=True)
class Reconstruction:
    """Majority-vote readout of a radius query; label is None on an empty ball."""

    label: int | None
    items: QueryResult


@dataclass(frozen=True)
class MetricsReport:
    """Retrieval quality over a query set.

    precision_at_r     : mean within-radius precision per requested radius.
    map_score          : mean average precision over the distance ranking,
                         None when not requested.
    n_queries          : number of queries evaluated.
    empty_return_count : queries with an empty ball, per radius.
    map_excluded_count : queries dropped from the mean average precision
                         for lack of any relevant item.
    """

    precision_at_r: dict
    map_score: float | None
    n_queries: int
    empty_return_count: dict
    map_excluded_count: int


def query_radius(kb, q, r):
    """All items within Hamming distance r of q, ordered by (distance, id)."""
    q = as_signature_vector(q, "q")
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    dist = kb.distances(q.reshape(1, -1))[0]
    keep = np.flatnonzero(dist <= r)
    order = keep[np.lexsort((kb.ids[keep], dist[keep]))]
    return QueryResult(
        ids=kb.ids[order].copy(),
        labels=kb.labels[order].copy(),
        distances=dist[order].copy(),
    )


def reconstruct(kb, q, r):
    """Radius query plus a majority-vote label; ties go to the smallest label."""
    items = query_radius(kb, q, r)
    if len(items) == 0:
        return Reconstruction(label=None, items=items)
    votes, counts = np.unique(items.labels, return_counts=True)
    return Reconstruction(label=int(votes[np.argmax(counts)]), items=items)


def _query_mask(kb, query_ids):
    """Per-query boolean mask of base rows to keep (drops id self-matches)."""
    if query_ids is None:
        return None
    query_ids = np.asarray(query_ids, dtype=np.int64)
    return kb.ids[None, :] != query_ids[:, None]


def precision_at_radius(query_codes, query_labels, kb, r, *, query_ids=None):
    """Mean fraction of label matches within the radius-r ball.

    A query with an empty ball contributes 0. When query_ids is given,
    base items with the same id as the query are ignored, which removes
    self-matches when the queries are drawn from the base.
    """
    query_codes = as_signature_matrix(query_codes, "query_codes")
    query_labels = as_label_vector(query_labels, name="query_labels")
    if query_labels.size != query_codes.shape[0]:
        raise ValueError("query codes and labels disagree on row count")
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    dist = kb.distances(query_codes)
    inside = dist <= r
    mask = _query_mask(kb, query_ids)
    if mask is not None:
        inside &= mask
    returned = inside.sum(axis=1)
    matching = (inside & (kb.labels[None, :] == query_labels[:, None])).sum(axis=1)
    per_query = np.where(returned > 0, matching / np.maximum(returned, 1), 0.0)
    return float(per_query.mean())


def average_precisions(query_codes, query_labels, kb, *, query_ids=None):
    """Average precision per query along the (distance, id) ranking.

    Queries without any relevant base item get NaN.
    """
    query_codes = as_signature_matrix(query_codes, "query_codes")
    query_labels = as_label_vector(query_labels, name="query_labels")
    if query_labels.size != query_codes.shape[0]:
        raise ValueError("query codes and labels disagree on row count")
    dist = kb.distances(query_codes)
    mask = _query_mask(kb, query_ids)
    out = np.full(query_codes.shape[0], np.nan)
    for j in range(query_codes.shape[0]):
        if mask is None:
            d, labels, ids = dist[j], kb.labels, kb.ids
        else:
            keep = mask[j]
            d, labels, ids = dist[j][keep], kb.labels[keep], kb.ids[keep]
        order = np.lexsort((ids, d))
        relevant = labels[order] == query_labels[j]
        n_relevant = int(relevant.sum())
        if n_relevant == 0:
            continue
        cum = np.cumsum(relevant)
        positions = np.flatnonzero(relevant)
        out[j] = float((cum[positions] / (positions + 1)).sum() / n_relevant)
    return out


def mean_average_precision(query_codes, query_labels, kb, *, query_ids=None):
    """Mean of the per-query average precisions.

    Queries with no relevant item are left out of the mean; if every
    query lacks relevant items the metric is undefined and a ValueError
    is raised.
    """
    aps = average_precisions(query_codes, query_labels, kb, query_ids=query_ids)
    valid = ~np.isnan(aps)
    if not valid.any():
        raise ValueError("undefined metric: no query has a relevant item in the base")
    return float(aps[valid].mean())


def evaluate_retrieval(query_codes, query_labels, kb, radii, *, query_ids=None, with_map=True):
    """Precision at each radius plus the mean average precision."""
    radii = [int(r) for r in radii]
    if not radii:
        raise ValueError("at least one radius is required")
    query_codes = as_signature_matrix(query_codes, "query_codes")
    query_labels = as_label_vector(query_labels, name="query_labels")
    dist = kb.distances(query_codes)
    mask = _query_mask(kb, query_ids)

    precision = {}
    empties = {}
    for r in radii:
        inside = dist <= r
        if mask is not None:
            inside &= mask
        returned = inside.sum(axis=1)
        matching = (inside & (kb.labels[None, :] == query_labels[:, None])).sum(axis=1)
        per_query = np.where(returned > 0, matching / np.maximum(returned, 1), 0.0)
        precision[r] = float(per_query.mean())
        empties[r] = int(np.count_nonzero(returned == 0))

    map_score = None
    excluded = 0
    if with_map:
        aps = average_precisions(query_codes, query_labels, kb, query_ids=query_ids)
        valid = ~np.isnan(aps)
        excluded = int(np.count_nonzero(~valid))
        if not valid.any():
            raise ValueError("undefined metric: no query has a relevant item in the base")
        map_score = float(aps[valid].mean())

    return MetricsReport(
        precision_at_r=precision,
        map_score=map_score,
        n_queries=query_codes.shape[0],
        empty_return_count=empties,
        map_excluded_count=excluded,
    )

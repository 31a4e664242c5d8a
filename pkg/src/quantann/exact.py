"""Exhaustive top-k search: the throughput baseline and the ground-truth
oracle behind every recall measurement.

Selection runs a bounded (distance, id) max-heap over a streaming scan,
O(n log k) per query. Ties break toward the smaller id, so output equals
a full lexicographic sort truncated to k regardless of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .dataset import DenseDataset, GroundTruth
from .distances import Metric
from .errors import (
    DimensionMismatch,
    ElementKindMismatch,
    EmptyCorpus,
    ZeroNorm,
)


@dataclass(frozen=True)
class Neighbor:
    """One retrieved item: corpus index plus its metric score."""

    id: int
    score: float


@dataclass(frozen=True)
class TopKResult:
    """Neighbors ascending by (score, id); length min(k, n)."""

    ids: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        ids = np.ascontiguousarray(self.ids, dtype=np.int32)
        scores = np.ascontiguousarray(self.scores, dtype=np.float64)
        if ids.ndim != 1 or scores.ndim != 1 or ids.shape != scores.shape:
            raise ValueError("ids and scores must be matching 1-D arrays")
        ids.flags.writeable = False
        scores.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return self.ids.shape[0]

    def __getitem__(self, i: int) -> Neighbor:
        return Neighbor(id=int(self.ids[i]), score=float(self.scores[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def stored_norms(ds: DenseDataset) -> np.ndarray:
    """Float32 Euclidean norms of every row, as cached by batch paths."""
    return _backend.norms(ds.data)


def _require_positive_norms(norms: np.ndarray, what: str) -> None:
    if norms.size and not bool(np.all(norms > 0.0)):
        raise ZeroNorm(f"angular metric needs nonzero {what} vectors")


def _validate(corpus: DenseDataset, queries: DenseDataset, k: int) -> None:
    if corpus.n == 0:
        raise EmptyCorpus("cannot search an empty corpus")
    if k < 1:
        raise ValueError("k must be >= 1")
    if queries.elem is not corpus.elem:
        raise ElementKindMismatch(
            f"query kind {queries.elem.name} but corpus kind {corpus.elem.name}"
        )
    if queries.d != corpus.d:
        raise DimensionMismatch(f"query d={queries.d} but corpus d={corpus.d}")


def exact_topk(
    corpus: DenseDataset, query: np.ndarray, k: int, metric: Metric
) -> TopKResult:
    """The k smallest metric scores over all corpus items for one query."""
    if query.ndim != 1:
        raise DimensionMismatch("expected a 1-D query vector")
    qs = DenseDataset(np.ascontiguousarray(query[np.newaxis, :]))
    _validate(corpus, qs, k)
    dn = qn = None
    if metric == Metric.ANGULAR:
        dn = stored_norms(corpus)
        qn = stored_norms(qs)
        _require_positive_norms(dn, "corpus")
        _require_positive_norms(qn, "query")
    scores, ids = _backend.scan_topk(
        corpus.data, qs.data, k, int(metric), dn, qn
    )
    return TopKResult(ids=ids[0], scores=scores[0])


def batch_ground_truth(
    corpus: DenseDataset, queries: DenseDataset, k: int, metric: Metric
) -> GroundTruth:
    """exact_topk applied to every query; rows are ordered id lists."""
    _validate(corpus, queries, k)
    dn = qn = None
    if metric == Metric.ANGULAR:
        dn = stored_norms(corpus)
        qn = stored_norms(queries)
        _require_positive_norms(dn, "corpus")
        _require_positive_norms(qn, "query")
    _, ids = _backend.scan_topk(corpus.data, queries.data, k, int(metric), dn, qn)
    return GroundTruth(ids=ids)

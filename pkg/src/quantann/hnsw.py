"""Layered proximity-graph index over both element kinds.

The graph follows the standard formulation: geometrically distributed
node levels, greedy descent through upper layers, beam search with the
construction width EFC per layer on insert, distance-diversity neighbor
selection, and reciprocal edges pruned back to the degree caps (2M on
layer 0, M above). Levels are pre-assigned from the seed, and insertion
is sequential in id order, so builds are deterministic bit for bit.

Memory accounting is capacity-based and matches the serialized layout
exactly: every layer block costs one degree slot plus its full capacity
of id slots whether or not the slots are occupied. That makes
graph_bytes a function of (levels, M) alone, identical for float32 and
int8 indices built with the same seed.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend
from .dataset import DenseDataset, ElemKind
from .distances import Metric
from .errors import (
    BadMagic,
    Corrupt,
    DimensionMismatch,
    ElementKindMismatch,
    EmptyCorpus,
    VersionMismatch,
    ZeroNorm,
)
from .exact import TopKResult, stored_norms

_INDEX_MAGIC = b"QHNSW1"
_INDEX_VERSION = 1
_INDEX_HEADER = struct.Struct("<6s4BIQIIQII")
_PAD = np.int32(-1)

_INSERT_CHUNK = 8192


@dataclass(frozen=True)
class HnswConfig:
    """Construction hyperparameters.

    M caps out-degree on layers >= 1 (layer 0 allows 2M); ef_construction
    is the construction beam width; level_mult scales the geometric level
    distribution and defaults to 1/ln(M).
    """

    M: int = 32
    ef_construction: int = 300
    seed: int = 0
    level_mult: float | None = None

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("M must be >= 2")
        if self.ef_construction < self.M:
            raise ValueError("ef_construction must be >= M")
        if self.level_mult is None:
            object.__setattr__(self, "level_mult", 1.0 / math.log(self.M))
        if not self.level_mult > 0:
            raise ValueError("level_mult must be > 0")


@dataclass(frozen=True)
class SearchParams:
    """Query-time knobs: beam width ef_search and result count k."""

    k: int
    ef_search: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.ef_search < self.k:
            raise ValueError("ef_search must be >= k")


@dataclass(frozen=True)
class MemoryReport:
    """Byte-exact storage accounting; total equals the saved file size."""

    vector_bytes: int
    graph_bytes: int
    level_bytes: int
    norm_bytes: int
    header_bytes: int

    @property
    def total(self) -> int:
        return (
            self.vector_bytes
            + self.graph_bytes
            + self.level_bytes
            + self.norm_bytes
            + self.header_bytes
        )


def assign_levels(n: int, seed: int, level_mult: float) -> np.ndarray:
    """Geometric level per node: floor(-ln(U) * level_mult), U in (0, 1]."""
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random(n)
    return np.floor(-np.log(u) * level_mult).astype(np.int32)


def _graph_bytes(levels_sum: int, n: int, m: int) -> int:
    base = 4 * (1 + 2 * m)
    upper = 4 * (1 + m)
    return n * base + levels_sum * upper


def _memory_report(
    n: int, d: int, elem: ElemKind, metric: Metric, m: int, levels_sum: int
) -> MemoryReport:
    return MemoryReport(
        vector_bytes=n * d * elem.itemsize,
        graph_bytes=_graph_bytes(levels_sum, n, m),
        level_bytes=4 * n,
        norm_bytes=4 * n if metric == Metric.ANGULAR else 0,
        header_bytes=_INDEX_HEADER.size,
    )


def estimate_memory(
    n: int,
    d: int,
    elem: ElemKind,
    metric: Metric,
    config: HnswConfig,
) -> MemoryReport:
    """Memory accounting by formula alone, without building.

    Samples the level assignment exactly as build would (in chunks, so
    very large n stays cheap) and applies the capacity-based layout.
    """
    rng = np.random.default_rng(config.seed)
    levels_sum = 0
    left = n
    while left > 0:
        chunk = min(left, 1_000_000)
        u = 1.0 - rng.random(chunk)
        lv = np.floor(-np.log(u) * config.level_mult)
        levels_sum += int(lv.sum())
        left -= chunk
    return _memory_report(n, d, elem, metric, config.M, levels_sum)


class HnswIndex:
    """A built index: owned vector copy, per-node levels, layered edges."""

    def __init__(self, data, metric, config, levels, core, norms):
        self.data = data
        self.metric = metric
        self.config = config
        self.levels = levels
        self._core = core
        self._norms = norms

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def d(self) -> int:
        return self.data.d

    @property
    def elem(self) -> ElemKind:
        return self.data.elem

    @property
    def entry_point(self) -> int:
        return int(self._core.entry)

    @property
    def max_level(self) -> int:
        return int(self._core.max_level)

    def neighbors(self, node: int, layer: int) -> np.ndarray:
        """Copy of one adjacency list, in stored order."""
        return self._core.get_adjacency(node, layer)

    def search(self, query: np.ndarray, params: SearchParams) -> TopKResult:
        """Greedy descent plus layer-0 beam search for one query."""
        if query.ndim != 1:
            raise DimensionMismatch("expected a 1-D query vector")
        if query.shape[0] != self.d:
            raise DimensionMismatch(f"query d={query.shape[0]} but index d={self.d}")
        if query.dtype != self.data.data.dtype:
            raise ElementKindMismatch(
                f"query dtype {query.dtype} but index stores {self.data.data.dtype}"
            )
        q = np.ascontiguousarray(query)
        if self.metric == Metric.ANGULAR:
            qn = np.float32(math.sqrt(float(np.dot(q.astype(np.float64), q))))
            if not qn > 0.0:
                raise ZeroNorm("angular metric needs a nonzero query")
        scores, ids = self._core.search(q, params.k, params.ef_search)
        return TopKResult(ids=ids, scores=scores)

    def search_batch(self, queries: DenseDataset, params: SearchParams):
        """search() over a query set; returns (ids, scores) matrices."""
        if queries.elem is not self.elem:
            raise ElementKindMismatch(
                f"query kind {queries.elem.name} but index kind {self.elem.name}"
            )
        if queries.d != self.d:
            raise DimensionMismatch(f"query d={queries.d} but index d={self.d}")
        kk = min(params.k, self.n)
        ids = np.empty((queries.n, kk), dtype=np.int32)
        scores = np.empty((queries.n, kk), dtype=np.float64)
        for i in range(queries.n):
            res = self.search(queries.data[i], params)
            ids[i] = res.ids
            scores[i] = res.scores
        return ids, scores

    def memory_report(self) -> MemoryReport:
        return _memory_report(
            self.n,
            self.d,
            self.elem,
            self.metric,
            self.config.M,
            int(self.levels.sum()),
        )


def build(
    corpus: DenseDataset,
    config: HnswConfig,
    metric: Metric,
    progress=None,
) -> HnswIndex:
    """Insert all corpus vectors in id order under the given config.

    ``progress``, if given, is called as progress(done, total) after each
    insertion chunk. Requires n >= 1 and, for the angular metric, strictly
    positive norms.
    """
    if corpus.n == 0:
        raise EmptyCorpus("index build needs at least one vector")
    data = DenseDataset(np.array(corpus.data))  # owned copy
    norms = None
    if metric == Metric.ANGULAR:
        norms = stored_norms(data)
        if not bool(np.all(norms > 0.0)):
            raise ZeroNorm("angular metric needs nonzero corpus vectors")
    levels = assign_levels(corpus.n, config.seed, config.level_mult)
    core = _backend.HnswCore(
        data.data, int(metric), config.M, config.ef_construction, levels, norms
    )
    for start in range(0, corpus.n, _INSERT_CHUNK):
        stop = min(start + _INSERT_CHUNK, corpus.n)
        core.insert_range(start, stop)
        if progress is not None:
            progress(stop, corpus.n)
    return HnswIndex(data, metric, config, levels, core, norms)


def save_index(index: HnswIndex, path) -> None:
    """Write the index in the QHNSW1 binary layout.

    Layer blocks are written at full capacity (degree word, then 2M or M
    id slots, unused slots 0xFFFFFFFF) so file size equals memory_report
    total exactly.
    """
    n, d, m = index.n, index.d, index.config.M
    elem_bits = 32 if index.elem is ElemKind.FLOAT32 else 8
    header = _INDEX_HEADER.pack(
        _INDEX_MAGIC,
        _INDEX_VERSION,
        int(index.elem),
        int(index.metric),
        elem_bits,
        d,
        n,
        m,
        index.config.ef_construction,
        index.config.seed,
        index.entry_point,
        index.max_level,
    )
    levels = index.levels.astype("<i4")
    slots_total = _graph_bytes(int(index.levels.sum()), n, m) // 4
    adj = np.full(slots_total, _PAD, dtype="<i4")
    pos = 0
    for node in range(n):
        for layer in range(int(levels[node]) + 1):
            cap = 2 * m if layer == 0 else m
            ids = index.neighbors(node, layer)
            adj[pos] = ids.shape[0]
            adj[pos + 1 : pos + 1 + ids.shape[0]] = ids
            pos += 1 + cap
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(levels.tobytes())
        fh.write(adj.tobytes())
        fh.write(np.ascontiguousarray(index.data.data).tobytes())
        if index.metric == Metric.ANGULAR:
            fh.write(index._norms.astype("<f4").tobytes())


def load_index(path) -> HnswIndex:
    """Read an index written by save_index; round trips are bit-exact."""
    raw = Path(path).read_bytes()
    if len(raw) < _INDEX_HEADER.size:
        raise Corrupt(f"{path}: shorter than the fixed header")
    (
        magic,
        version,
        elem_code,
        metric_code,
        elem_bits,
        d,
        n,
        m,
        efc,
        seed,
        entry,
        max_level,
    ) = _INDEX_HEADER.unpack_from(raw)
    if magic != _INDEX_MAGIC:
        raise BadMagic(f"{path}: not an index file")
    if version != _INDEX_VERSION:
        raise VersionMismatch(f"{path}: version {version} not supported")
    try:
        elem = ElemKind(elem_code)
        metric = Metric(metric_code)
    except ValueError:
        raise Corrupt(f"{path}: bad element or metric code") from None
    if elem_bits != (32 if elem is ElemKind.FLOAT32 else 8):
        raise Corrupt(f"{path}: element width disagrees with element kind")
    if n < 1 or d < 1 or m < 2 or efc < m:
        raise Corrupt(f"{path}: implausible header fields")
    off = _INDEX_HEADER.size
    levels_end = off + 4 * n
    if len(raw) < levels_end:
        raise Corrupt(f"{path}: truncated level array")
    levels = np.frombuffer(raw, dtype="<i4", count=n, offset=off).astype(np.int32)
    if levels.min() < 0:
        raise Corrupt(f"{path}: negative level")
    slots_total = _graph_bytes(int(levels.sum()), n, m) // 4
    adj_end = levels_end + 4 * slots_total
    vec_end = adj_end + n * d * elem.itemsize
    expected = vec_end + (4 * n if metric == Metric.ANGULAR else 0)
    if len(raw) != expected:
        raise Corrupt(
            f"{path}: {len(raw)} bytes but header implies {expected}"
        )
    if entry >= n or max_level != int(levels[entry]) or max_level != int(levels.max()):
        raise Corrupt(f"{path}: entry point disagrees with levels")
    adj = np.frombuffer(raw, dtype="<i4", count=slots_total, offset=levels_end)
    vec = np.frombuffer(
        raw, dtype=elem.dtype.newbyteorder("<"), count=n * d, offset=adj_end
    )
    data = DenseDataset(vec.astype(elem.dtype).reshape(n, d))
    norms = None
    if metric == Metric.ANGULAR:
        norms = np.frombuffer(raw, dtype="<f4", count=n, offset=vec_end).astype(
            np.float32
        )
    config = HnswConfig(M=m, ef_construction=efc, seed=seed)
    core = _backend.HnswCore(data.data, int(metric), m, efc, levels, norms)
    pos = 0
    try:
        for node in range(n):
            for layer in range(int(levels[node]) + 1):
                cap = 2 * m if layer == 0 else m
                deg = int(adj[pos])
                if deg < 0 or deg > cap:
                    raise Corrupt(f"{path}: bad degree at node {node} layer {layer}")
                ids = np.array(adj[pos + 1 : pos + 1 + deg], dtype=np.int32)
                if deg and bool((ids == node).any()):
                    raise Corrupt(f"{path}: self-edge at node {node}")
                core.set_adjacency(node, layer, ids)
                pos += 1 + cap
        core.finalize_load(entry, max_level, n)
    except (ValueError, IndexError) as exc:
        raise Corrupt(f"{path}: {exc}") from None
    return HnswIndex(data, metric, config, levels, core, norms)

"""Evaluation harness: recall@k, single-thread QPS, build time, memory.

The sweep builds one float32 index and one int8 index per (M, EFC)
config from the same float32 corpus (the int8 side is quantized here,
with parameters fit on that corpus) and measures each EFS cell against
shared ground truth. Recall values are deterministic given the seeds;
QPS is wall-clock and reported as a median over repetitions.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .dataset import DenseDataset, ElemKind, GroundTruth
from .distances import Metric
from .errors import LengthMismatch
from .exact import batch_ground_truth
from .hnsw import HnswConfig, HnswIndex, SearchParams, build
from .quantizer import QuantMode, estimate_stats, fit, quantize_dataset

TSV_HEADER = (
    "elem\tmetric\tM\tEFC\tEFS\trecall\tqps\tbuild_s\t"
    "vector_bytes\tgraph_bytes\ttotal_bytes"
)

DEFAULT_K = 100
DEFAULT_WARMUP = 10
DEFAULT_REPS = 3


@dataclass(frozen=True)
class RecallReport:
    """Mean and per-query recall@k plus the raw intersection counts."""

    k: int
    per_query: np.ndarray
    expected_total: int
    hit_total: int

    def __post_init__(self):
        self.per_query.flags.writeable = False

    @property
    def mean(self) -> float:
        return float(self.per_query.mean())


@dataclass(frozen=True)
class ThroughputReport:
    """One timed pass over a query set; strictly single-threaded."""

    n_queries: int
    elapsed_s: float
    threads: int = 1

    @property
    def qps(self) -> float:
        return self.n_queries / self.elapsed_s


@dataclass(frozen=True)
class SweepRow:
    """One TSV line: an (elem, metric, M, EFC, EFS) cell."""

    elem: str
    metric: str
    M: int
    efc: int
    efs: int
    recall: float
    qps: float
    build_s: float
    vector_bytes: int
    graph_bytes: int
    total_bytes: int

    def tsv(self) -> str:
        return (
            f"{self.elem}\t{self.metric}\t{self.M}\t{self.efc}\t{self.efs}\t"
            f"{self.recall:.6f}\t{self.qps:.2f}\t{self.build_s:.3f}\t"
            f"{self.vector_bytes}\t{self.graph_bytes}\t{self.total_bytes}"
        )


@dataclass(frozen=True)
class SweepResult:
    """All cells of a sweep; rows come in fp32/int8 pairs per cell."""

    rows: tuple
    k: int
    bits: int
    seed: int


def recall_at_k(expected: GroundTruth, actual, k: int) -> RecallReport:
    """Fraction of the first k exact ids recovered, averaged over queries.

    Order within lists is irrelevant; ``actual`` may be a GroundTruth or
    an (nq, >=1) id matrix. Requires matching query counts and exact
    lists of depth >= k.
    """
    exp = expected.ids if isinstance(expected, GroundTruth) else np.asarray(expected)
    act = actual.ids if isinstance(actual, GroundTruth) else np.asarray(actual)
    if k < 1:
        raise ValueError("k must be >= 1")
    if exp.shape[0] != act.shape[0]:
        raise LengthMismatch(
            f"{exp.shape[0]} expected lists vs {act.shape[0]} actual lists"
        )
    if exp.shape[1] < k:
        raise ValueError(f"expected lists have {exp.shape[1]} entries, need >= {k}")
    per = np.empty(exp.shape[0], dtype=np.float64)
    for i in range(exp.shape[0]):
        per[i] = np.isin(act[i, :k], exp[i, :k]).sum() / k
    return RecallReport(
        k=k,
        per_query=per,
        expected_total=exp.shape[0] * k,
        hit_total=int(round(per.sum() * k)),
    )


def measure_qps(search_fn, queries: DenseDataset, warmup: int = DEFAULT_WARMUP):
    """Time search_fn over every query row on a monotonic clock.

    The first ``warmup`` queries are executed once extra, untimed; the
    timed pass then covers all rows. Every result is retained and
    returned so the calls cannot be optimized away.
    Returns (ThroughputReport, results).
    """
    if queries.n < 1:
        raise ValueError("need at least one query")
    rows = queries.data
    for i in range(min(warmup, queries.n)):
        search_fn(rows[i])
    results = []
    t0 = time.perf_counter()
    for i in range(queries.n):
        results.append(search_fn(rows[i]))
    elapsed = time.perf_counter() - t0
    return ThroughputReport(n_queries=queries.n, elapsed_s=elapsed), results


def _median(values) -> float:
    return float(np.median(np.asarray(values, dtype=np.float64)))


def _bench_index(index, queries, gt, efs_list, k, reps, warmup):
    """Recall and median-QPS per EFS for one built index."""
    cells = []
    for efs in efs_list:
        params = SearchParams(k=k, ef_search=efs)

        def one(row, _p=params):
            return index.search(row, _p).ids

        qps_runs = []
        results = None
        for _ in range(reps):
            report, results = measure_qps(one, queries, warmup=warmup)
            qps_runs.append(report.qps)
        ids = np.stack(results)
        rec = recall_at_k(gt, ids, k)
        cells.append((efs, rec.mean, _median(qps_runs)))
    return cells


def run_sweep(
    corpus: DenseDataset,
    queries: DenseDataset,
    gt: GroundTruth | None,
    ms,
    efcs,
    efs_list,
    metrics,
    bits: int = 8,
    *,
    k: int = DEFAULT_K,
    seed: int = 0,
    mode: QuantMode = QuantMode.ABS_MAX,
    reps: int = DEFAULT_REPS,
    warmup: int = DEFAULT_WARMUP,
    progress=None,
) -> SweepResult:
    """Cross {M} x {EFC} x {EFS} x metrics for both element kinds.

    The int8 corpus and queries are produced here by fitting the
    quantizer on the float32 corpus. When ``gt`` is given it must belong
    to the single metric benchmarked; with gt=None the exact float32
    oracle supplies ground truth per metric.
    """
    metrics = list(metrics)
    if gt is not None and len(metrics) != 1:
        raise ValueError("a precomputed ground truth fixes the sweep to one metric")
    stats = estimate_stats(corpus)
    qparams = fit(stats, bits, mode).params
    corpus_i8 = quantize_dataset(corpus, qparams)
    queries_i8 = quantize_dataset(queries, qparams)
    rows = []
    for metric in metrics:
        gt_m = gt
        if gt_m is None:
            gt_m = batch_ground_truth(corpus, queries, k, metric)
        for m in ms:
            for efc in efcs:
                config = HnswConfig(M=m, ef_construction=efc, seed=seed)
                for elem, corp, qs in (
                    ("fp32", corpus, queries),
                    ("int8", corpus_i8, queries_i8),
                ):
                    t0 = time.perf_counter()
                    index = build(corp, config, metric)
                    build_s = time.perf_counter() - t0
                    mem = index.memory_report()
                    for efs, rec, qps in _bench_index(
                        index, qs, gt_m, efs_list, k, reps, warmup
                    ):
                        rows.append(
                            SweepRow(
                                elem=elem,
                                metric=metric.short_name,
                                M=m,
                                efc=efc,
                                efs=efs,
                                recall=rec,
                                qps=qps,
                                build_s=build_s,
                                vector_bytes=mem.vector_bytes,
                                graph_bytes=mem.graph_bytes,
                                total_bytes=mem.total,
                            )
                        )
                    if progress is not None:
                        progress(rows[-1])
                    del index
    return SweepResult(rows=tuple(rows), k=k, bits=bits, seed=seed)


def write_tsv(result: SweepResult, path) -> None:
    with open(path, "w") as fh:
        fh.write(TSV_HEADER + "\n")
        for row in result.rows:
            fh.write(row.tsv() + "\n")


def write_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TSV_HEADER.split("\t"))
        for r in result.rows:
            writer.writerow(
                [
                    r.elem,
                    r.metric,
                    r.M,
                    r.efc,
                    r.efs,
                    f"{r.recall:.6f}",
                    f"{r.qps:.2f}",
                    f"{r.build_s:.3f}",
                    r.vector_bytes,
                    r.graph_bytes,
                    r.total_bytes,
                ]
            )


def _fmt_time(seconds: float) -> str:
    if seconds >= 3600.0:
        h, rem = divmod(round(seconds), 3600)
        return f"{int(h)}h {int(rem // 60):02d}min"
    if seconds >= 60.0:
        m, s = divmod(round(seconds), 60)
        return f"{int(m)}min {int(s):02d}s"
    return f"{seconds:.1f}s"


def _fmt_bytes(b: int) -> str:
    if b >= 1e9:
        return f"{b / 1e9:.2f} GB"
    if b >= 1e6:
        return f"{b / 1e6:.2f} MB"
    return f"{b / 1e3:.2f} KB"


def format_table(result: SweepResult) -> str:
    """Aligned per-config comparison: build time and memory, fp32 vs int8.

    One line per (metric, EFC, M) pair; EFS cells collapse because build
    time and memory do not depend on the query-time beam width.
    """
    seen = {}
    order = []
    for r in result.rows:
        key = (r.metric, r.efc, r.M)
        if key not in seen:
            seen[key] = {}
            order.append(key)
        seen[key][r.elem] = (r.build_s, r.total_bytes)
    header = (
        "metric",
        "EFC",
        "M",
        "build fp32",
        "build int8",
        "memory fp32",
        "memory int8",
    )
    lines = [header]
    for key in order:
        cell = seen[key]
        f32 = cell.get("fp32")
        i8 = cell.get("int8")
        lines.append(
            (
                key[0],
                str(key[1]),
                str(key[2]),
                _fmt_time(f32[0]) if f32 else "-",
                _fmt_time(i8[0]) if i8 else "-",
                _fmt_bytes(f32[1]) if f32 else "-",
                _fmt_bytes(i8[1]) if i8 else "-",
            )
        )
    widths = [max(len(row[c]) for row in lines) for c in range(len(header))]
    out = []
    for row in lines:
        out.append("  ".join(val.ljust(w) for val, w in zip(row, widths)).rstrip())
    return "\n".join(out)

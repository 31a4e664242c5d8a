"""Command-line front end: fit / quantize / gt / build / search / bench.

Exit codes: 0 on success, 2 for usage and validation failures, 1 for
I/O and file-format failures. Quantized corpora are materialized to
i8vecs files rather than quantized inside build, so every stage of the
pipeline can be inspected on disk.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bench as bench_mod
from .dataset import (
    DenseDataset,
    ElemKind,
    load_dataset,
    load_ivecs,
    save_i8vecs,
    save_ivecs,
)
from .distances import Metric
from .errors import (
    BadMagic,
    Corrupt,
    DimensionMismatch,
    ElementKindMismatch,
    EmptyCorpus,
    LengthMismatch,
    NonPositiveDim,
    TooFewSamples,
    TruncatedFile,
    TruncatedRecord,
    UnsupportedVersion,
    VersionMismatch,
    ZeroNorm,
)
from .exact import batch_ground_truth
from .hnsw import HnswConfig, SearchParams, build, load_index, save_index
from .quantizer import (
    QuantMode,
    estimate_stats,
    fit,
    load_params,
    quantize_dataset,
    save_params,
)

_VALIDATION_ERRORS = (
    ValueError,
    DimensionMismatch,
    ElementKindMismatch,
    EmptyCorpus,
    LengthMismatch,
    NonPositiveDim,
    TooFewSamples,
    ZeroNorm,
)
_IO_ERRORS = (
    OSError,
    BadMagic,
    Corrupt,
    TruncatedFile,
    TruncatedRecord,
    UnsupportedVersion,
    VersionMismatch,
)

_QUANT_CHUNK = 8192


def _int_list(text: str):
    values = [int(tok) for tok in text.split(",") if tok.strip()]
    if not values:
        raise ValueError("empty integer list")
    return values


def _default_threads() -> int:
    env = os.environ.get("QUANTANN_THREADS", "")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _normalize_rows(ds: DenseDataset) -> DenseDataset:
    if ds.elem is not ElemKind.FLOAT32:
        raise ValueError("--normalize applies to float32 data only")
    norms = np.sqrt(np.einsum("ij,ij->i", ds.data.astype(np.float64), ds.data))
    if not bool(np.all(norms > 0.0)):
        raise ZeroNorm("cannot normalize a zero vector")
    return DenseDataset((ds.data / norms[:, None]).astype(np.float32))


def _load(path: str, normalize: bool) -> DenseDataset:
    ds = load_dataset(path)
    if normalize:
        ds = _normalize_rows(ds)
    return ds


def _progress_printer(label: str, enabled: bool):
    if not enabled:
        return None

    def show(done, total):
        print(f"{label}: {done}/{total}", file=sys.stderr)

    return show


def cmd_fit(args) -> int:
    ds = _load(args.input, args.normalize)
    stats = estimate_stats(ds)
    result = fit(stats, args.bits, QuantMode.parse(args.mode))
    for dim in result.degenerate_dims:
        print(f"warning: dim {dim} has a degenerate window, widened", file=sys.stderr)
    save_params(result.params, args.out)
    print(
        f"fit d={result.params.d} bits={args.bits} "
        f"mode={result.params.mode.short_name} -> {args.out}"
    )
    return 0


def cmd_quantize(args) -> int:
    ds = _load(args.input, args.normalize)
    params = load_params(args.params)
    chunks = []
    for a in range(0, ds.n, _QUANT_CHUNK):
        part = DenseDataset(np.ascontiguousarray(ds.data[a : a + _QUANT_CHUNK]))
        chunks.append(quantize_dataset(part, params).data)
    if chunks:
        out = DenseDataset(np.concatenate(chunks))
    else:
        out = DenseDataset(np.empty((0, params.d), dtype=np.int8))
    save_i8vecs(out, args.out)
    print(f"quantized {out.n} vectors d={out.d} -> {args.out}")
    return 0


def cmd_gt(args) -> int:
    corpus = _load(args.corpus, args.normalize)
    queries = _load(args.queries, args.normalize)
    metric = Metric.parse(args.metric)
    gt = batch_ground_truth(corpus, queries, args.k, metric)
    save_ivecs(gt, args.out)
    print(f"ground truth {gt.ids.shape[0]} queries k={gt.ids.shape[1]} -> {args.out}")
    return 0


def cmd_build(args) -> int:
    corpus = _load(args.corpus, args.normalize)
    metric = Metric.parse(args.metric)
    config = HnswConfig(M=args.m, ef_construction=args.efc, seed=args.seed)
    progress = _progress_printer("inserted", corpus.n >= 20000)
    index = build(corpus, config, metric, progress=progress)
    save_index(index, args.out)
    mem = index.memory_report()
    print(
        f"built n={index.n} d={index.d} elem={index.elem.name.lower()} "
        f"M={args.m} EFC={args.efc} bytes={mem.total} -> {args.out}"
    )
    return 0


def cmd_search(args) -> int:
    index = load_index(args.index)
    queries = _load(args.queries, args.normalize)
    params = SearchParams(k=args.k, ef_search=args.efs)
    ids, _scores = index.search_batch(queries, params)
    for row in ids:
        print(" ".join(str(int(v)) for v in row))
    return 0


def cmd_bench(args) -> int:
    corpus = _load(args.corpus, args.normalize)
    queries = _load(args.queries, args.normalize)
    gt = load_ivecs(args.gt) if args.gt else None
    metric = Metric.parse(args.metric)
    result = bench_mod.run_sweep(
        corpus,
        queries,
        gt,
        args.m_grid,
        args.efc_grid,
        args.efs_grid,
        [metric],
        args.bits,
        k=args.k,
        seed=args.seed,
        mode=QuantMode.parse(args.mode),
        reps=args.reps,
        warmup=args.warmup,
    )
    bench_mod.write_tsv(result, args.out)
    if args.csv:
        bench_mod.write_csv(result, args.csv)
    print(bench_mod.format_table(result))
    print(f"wrote {len(result.rows)} rows -> {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="PRNG seed")
    common.add_argument(
        "--threads",
        type=int,
        default=_default_threads(),
        help="thread cap (env QUANTANN_THREADS); this build runs single-threaded",
    )
    common.add_argument(
        "--normalize",
        action="store_true",
        help="L2-normalize float32 rows at load time",
    )

    parser = argparse.ArgumentParser(
        prog="quantann",
        description="Scalar-quantized nearest-neighbor search toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit quantizer parameters")
    p.add_argument("--input", required=True, help="float32 corpus (fvecs)")
    p.add_argument("--bits", type=int, default=8, help="code width, 1..8")
    p.add_argument(
        "--mode", default="sigma", choices=["sigma", "absmax", "uniform"],
        help="window rule",
    )
    p.add_argument("--out", required=True, help="params file to write")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("quantize", parents=[common], help="apply fitted params")
    p.add_argument("--input", required=True, help="float32 corpus (fvecs)")
    p.add_argument("--params", required=True, help="fitted params file")
    p.add_argument("--out", required=True, help="i8vecs file to write")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("gt", parents=[common], help="exhaustive ground truth")
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--metric", default="l2", help="ip | l2 | angular")
    p.add_argument("--out", required=True, help="ivecs file to write")
    p.set_defaults(func=cmd_gt)

    p = sub.add_parser("build", parents=[common], help="build a graph index")
    p.add_argument("--corpus", required=True, help="fvecs or i8vecs")
    p.add_argument("--metric", default="l2", help="ip | l2 | angular")
    p.add_argument("--m", type=int, default=32, help="degree cap M")
    p.add_argument("--efc", type=int, default=300, help="construction beam width")
    p.add_argument("--out", required=True, help="index file to write")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("search", parents=[common], help="query a saved index")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--efs", type=int, required=True, help="query beam width")
    p.add_argument("--k", type=int, default=100)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("bench", parents=[common], help="fp32 vs int8 sweep")
    p.add_argument("--corpus", required=True, help="float32 corpus (fvecs)")
    p.add_argument("--queries", required=True, help="float32 queries (fvecs)")
    p.add_argument("--gt", default=None, help="ivecs ground truth (else computed)")
    p.add_argument("--bits", type=int, default=8)
    p.add_argument("--metric", default="l2", help="ip | l2 | angular")
    p.add_argument(
        "--mode", default="absmax", choices=["sigma", "absmax", "uniform"],
    )
    p.add_argument("--m-grid", type=_int_list, default=[32])
    p.add_argument("--efc-grid", type=_int_list, default=[300])
    p.add_argument("--efs-grid", type=_int_list, default=[300, 500, 800])
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--reps", type=int, default=3, help="QPS repetitions (median)")
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--out", required=True, help="TSV report path")
    p.add_argument("--csv", default=None, help="optional CSV report path")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

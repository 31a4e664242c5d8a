"""Scalar-quantized nearest-neighbor search toolkit.

Datasets in float32 or int8, per-dimension clamped linear quantization,
an exhaustive-search oracle, a layered proximity-graph index, and a
recall/QPS benchmark harness. Hot kernels run in a compiled extension
when available; ``quantann.BACKEND`` reports which implementation this
process selected (override with env QUANTANN_PURE_PYTHON=1).
"""

from ._backend import BACKEND
from .bench import (
    TSV_HEADER,
    RecallReport,
    SweepRow,
    SweepResult,
    ThroughputReport,
    format_table,
    measure_qps,
    recall_at_k,
    run_sweep,
    write_csv,
    write_tsv,
)
from .dataset import (
    MAX_DIM,
    DenseDataset,
    ElemKind,
    GroundTruth,
    QuerySet,
    generate_synthetic,
    load_bvecs,
    load_dataset,
    load_fvecs,
    load_i8vecs,
    load_ivecs,
    save_fvecs,
    save_i8vecs,
    save_ivecs,
)
from .distances import Metric, angular, distance, dot_f32, dot_i8, l2sq_f32, l2sq_i8
from .errors import (
    BadMagic,
    Corrupt,
    DimensionMismatch,
    ElementKindMismatch,
    EmptyCorpus,
    LengthMismatch,
    NonPositiveDim,
    QuantAnnError,
    TooFewSamples,
    TruncatedFile,
    TruncatedRecord,
    UnsupportedVersion,
    VersionMismatch,
    ZeroNorm,
)
from .exact import Neighbor, TopKResult, batch_ground_truth, exact_topk
from .hnsw import (
    HnswConfig,
    HnswIndex,
    MemoryReport,
    SearchParams,
    build,
    estimate_memory,
    load_index,
    save_index,
)
from .quantizer import (
    DimensionStats,
    FitResult,
    QuantMode,
    QuantizerParams,
    dequantize_value,
    estimate_stats,
    fit,
    load_params,
    quantize_dataset,
    quantize_query,
    quantize_value,
    save_params,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "MAX_DIM",
    "__version__",
    "BadMagic",
    "Corrupt",
    "DenseDataset",
    "DimensionMismatch",
    "DimensionStats",
    "ElemKind",
    "ElementKindMismatch",
    "EmptyCorpus",
    "FitResult",
    "GroundTruth",
    "HnswConfig",
    "HnswIndex",
    "LengthMismatch",
    "MemoryReport",
    "Metric",
    "Neighbor",
    "NonPositiveDim",
    "QuantAnnError",
    "QuantMode",
    "QuantizerParams",
    "QuerySet",
    "RecallReport",
    "SearchParams",
    "SweepResult",
    "SweepRow",
    "TSV_HEADER",
    "ThroughputReport",
    "TooFewSamples",
    "TopKResult",
    "TruncatedFile",
    "TruncatedRecord",
    "UnsupportedVersion",
    "VersionMismatch",
    "ZeroNorm",
    "angular",
    "batch_ground_truth",
    "build",
    "dequantize_value",
    "distance",
    "dot_f32",
    "dot_i8",
    "estimate_memory",
    "estimate_stats",
    "exact_topk",
    "fit",
    "format_table",
    "generate_synthetic",
    "load_bvecs",
    "load_dataset",
    "load_fvecs",
    "load_i8vecs",
    "load_index",
    "load_ivecs",
    "load_params",
    "l2sq_f32",
    "l2sq_i8",
    "measure_qps",
    "quantize_dataset",
    "quantize_query",
    "quantize_value",
    "recall_at_k",
    "run_sweep",
    "save_fvecs",
    "save_i8vecs",
    "save_index",
    "save_ivecs",
    "save_params",
    "write_csv",
    "write_tsv",
]

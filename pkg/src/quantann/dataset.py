"""Dense vector datasets and the benchmark binary formats.

File framing (little-endian throughout):

* fvecs:  per record, int32 d followed by d float32 values.
* ivecs:  per record, int32 d followed by d int32 values (neighbor ids).
* bvecs:  per record, int32 d followed by d unsigned bytes.
* i8vecs: per record, int32 d followed by d signed bytes. This is our own
  format for quantized datasets; it mirrors fvecs framing so the same
  tooling handles both.

bvecs payloads are unsigned in the wild. Loading re-centers them by
subtracting 128 so one signed 8-bit pipeline serves all inputs; the shift
is documented and reversible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    ElementKindMismatch,
    NonPositiveDim,
    TruncatedRecord,
)

# Integer distance accumulators are 32-bit: d * 127 * 127 must stay below
# 2**31, which caps the supported dimensionality.
MAX_DIM = 133_000


class ElemKind(enum.IntEnum):
    """Element type of a stored vector. Values double as file codes."""

    FLOAT32 = 0
    INT8 = 1

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32) if self is ElemKind.FLOAT32 else np.dtype(np.int8)

    @property
    def itemsize(self) -> int:
        return 4 if self is ElemKind.FLOAT32 else 1


_KIND_BY_DTYPE = {
    np.dtype(np.float32): ElemKind.FLOAT32,
    np.dtype(np.int8): ElemKind.INT8,
}


@dataclass(frozen=True)
class DenseDataset:
    """Row-major matrix of n vectors by d dimensions.

    ``data`` must be a C-contiguous 2-D float32 or int8 array. The array is
    frozen (marked read-only) on construction; datasets are immutable and
    safe to share across threads.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = self.data
        if not isinstance(arr, np.ndarray) or arr.ndim != 2:
            raise ValueError("dataset data must be a 2-D numpy array")
        if arr.dtype not in _KIND_BY_DTYPE:
            raise ValueError(f"unsupported element dtype {arr.dtype}")
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
            object.__setattr__(self, "data", arr)
        if arr.shape[1] > MAX_DIM:
            raise DimensionMismatch(
                f"d={arr.shape[1]} exceeds the supported maximum {MAX_DIM}"
            )
        arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @property
    def elem(self) -> ElemKind:
        return _KIND_BY_DTYPE[self.data.dtype]

    def row(self, i: int) -> np.ndarray:
        return self.data[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseDataset):
            return NotImplemented
        return (
            self.data.dtype == other.data.dtype
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )


# Queries share the dataset layout; the distinction is purely semantic.
QuerySet = DenseDataset


@dataclass(frozen=True)
class GroundTruth:
    """Per-query ordered neighbor id lists, k entries each (0-based ids)."""

    ids: np.ndarray

    def __post_init__(self):
        ids = self.ids
        if not isinstance(ids, np.ndarray) or ids.ndim != 2:
            raise ValueError("ground truth ids must be a 2-D numpy array")
        if ids.dtype != np.int32:
            ids = ids.astype(np.int32)
            object.__setattr__(self, "ids", ids)
        if not ids.flags.c_contiguous:
            ids = np.ascontiguousarray(ids)
            object.__setattr__(self, "ids", ids)
        if ids.size:
            if ids.min() < 0:
                raise ValueError("neighbor ids must be non-negative")
            s = np.sort(ids, axis=1)
            if bool((s[:, 1:] == s[:, :-1]).any()):
                raise ValueError("a per-query neighbor list contains duplicates")
        ids.flags.writeable = False

    @property
    def nq(self) -> int:
        return self.ids.shape[0]

    @property
    def k(self) -> int:
        return self.ids.shape[1]

    def validate_against(self, corpus: DenseDataset) -> None:
        """Check every id is a valid index into ``corpus``."""
        if self.ids.size and int(self.ids.max()) >= corpus.n:
            raise ValueError("ground truth references ids beyond the corpus")

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return self.ids.shape == other.ids.shape and np.array_equal(self.ids, other.ids)


def _empty(elem: ElemKind) -> DenseDataset:
    return DenseDataset(np.empty((0, 0), dtype=elem.dtype))


def _walk_records(path, raw: np.ndarray, d0: int, payload_itemsize: int) -> None:
    """Walk self-described records to tell mixed dimensions apart from a
    truncated tail. Raises on the first inconsistency, else returns."""
    off = 0
    idx = 0
    while off < raw.size:
        if off + 4 > raw.size:
            raise TruncatedRecord(f"{path}: record {idx} header cut short")
        d = int(raw[off : off + 4].copy().view("<i4")[0])
        if d <= 0:
            raise NonPositiveDim(f"{path}: record {idx} declares d={d}")
        if d != d0:
            raise DimensionMismatch(f"{path}: record {idx} has d={d}, expected d={d0}")
        off += 4 + d * payload_itemsize
        idx += 1
    # off > raw.size means the final payload was cut short
    if off != raw.size:
        raise TruncatedRecord(f"{path}: record {idx - 1} payload cut short")


def _load_records(path, payload_itemsize: int) -> tuple[np.ndarray, int]:
    """Read a prefixed-record file and return (raw bytes as (n, 4 + d*size)
    uint8 matrix, d). Validates framing only."""
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size == 0:
        return raw.reshape(0, 0), 0
    if raw.size < 4:
        raise TruncatedRecord(f"{path}: file shorter than one record header")
    d = int(raw[:4].view("<i4")[0])
    if d <= 0:
        raise NonPositiveDim(f"{path}: record header declares d={d}")
    rec = 4 + d * payload_itemsize
    if raw.size % rec != 0:
        _walk_records(path, raw, d, payload_itemsize)  # precise diagnosis
        raise TruncatedRecord(
            f"{path}: {raw.size} bytes is not a whole number of {rec}-byte records"
        )
    mat = raw.reshape(-1, rec)
    headers = mat[:, :4].copy().view("<i4").ravel()
    bad = np.flatnonzero(headers != d)
    if bad.size:
        other = int(headers[bad[0]])
        if other <= 0:
            raise NonPositiveDim(f"{path}: record {bad[0]} declares d={other}")
        raise DimensionMismatch(
            f"{path}: record {bad[0]} has d={other}, expected d={d}"
        )
    return mat, d


def load_fvecs(path) -> DenseDataset:
    """Load a float32 dataset in fvecs framing."""
    mat, d = _load_records(path, 4)
    if d == 0:
        return _empty(ElemKind.FLOAT32)
    data = mat[:, 4:].copy().view("<f4").astype(np.float32, copy=False)
    return DenseDataset(data.reshape(mat.shape[0], d))


def load_ivecs(path) -> GroundTruth:
    """Load ground-truth neighbor lists in ivecs framing."""
    mat, d = _load_records(path, 4)
    if d == 0:
        return GroundTruth(np.empty((0, 0), dtype=np.int32))
    ids = mat[:, 4:].copy().view("<i4").astype(np.int32, copy=False)
    return GroundTruth(ids.reshape(mat.shape[0], d))


def load_bvecs(path) -> DenseDataset:
    """Load a bvecs file, re-centering unsigned bytes to int8 (v - 128)."""
    mat, d = _load_records(path, 1)
    if d == 0:
        return _empty(ElemKind.INT8)
    payload = mat[:, 4:].astype(np.int16)
    return DenseDataset((payload - 128).astype(np.int8))


def load_i8vecs(path) -> DenseDataset:
    """Load a signed int8 dataset in i8vecs framing."""
    mat, d = _load_records(path, 1)
    if d == 0:
        return _empty(ElemKind.INT8)
    return DenseDataset(mat[:, 4:].copy().view(np.int8).reshape(mat.shape[0], d))


def _save_records(path, headers: np.ndarray, payload_bytes: np.ndarray) -> None:
    n = headers.shape[0]
    out = np.concatenate(
        [headers.astype("<i4").view(np.uint8).reshape(n, 4), payload_bytes], axis=1
    )
    out.tofile(path)


def save_fvecs(ds: DenseDataset, path) -> None:
    """Write a float32 dataset in fvecs framing."""
    if ds.elem is not ElemKind.FLOAT32:
        raise ElementKindMismatch("save_fvecs needs a Float32 dataset")
    headers = np.full(ds.n, ds.d, dtype="<i4")
    payload = ds.data.astype("<f4", copy=False).view(np.uint8).reshape(ds.n, ds.d * 4)
    _save_records(path, headers, payload)


def save_ivecs(gt: GroundTruth, path) -> None:
    """Write ground-truth neighbor lists in ivecs framing."""
    headers = np.full(gt.nq, gt.k, dtype="<i4")
    payload = gt.ids.astype("<i4", copy=False).view(np.uint8).reshape(gt.nq, gt.k * 4)
    _save_records(path, headers, payload)


def save_i8vecs(ds: DenseDataset, path) -> None:
    """Write an int8 dataset in i8vecs framing."""
    if ds.elem is not ElemKind.INT8:
        raise ElementKindMismatch("save_i8vecs needs an Int8 dataset")
    headers = np.full(ds.n, ds.d, dtype="<i4")
    payload = ds.data.view(np.uint8).reshape(ds.n, ds.d)
    _save_records(path, headers, payload)


def generate_synthetic(
    n: int, d: int, mean: float, stddev: float, seed: int
) -> DenseDataset:
    """Draw an n x d corpus with i.i.d. Normal(mean, stddev) float32 values.

    Real embedding corpora concentrate in a narrow value band; this generator
    reproduces that regime. Pure function of its arguments: the same seed
    yields a bit-identical dataset.
    """
    if n < 0 or d < 1:
        raise ValueError("need n >= 0 and d >= 1")
    if stddev < 0:
        raise ValueError("stddev must be >= 0")
    rng = np.random.default_rng(seed)
    values = rng.normal(loc=mean, scale=stddev, size=(n, d))
    return DenseDataset(values.astype(np.float32))


def load_dataset(path) -> DenseDataset:
    """Load fvecs/bvecs/i8vecs by file extension."""
    ext = Path(path).suffix.lower()
    if ext == ".fvecs":
        return load_fvecs(path)
    if ext == ".bvecs":
        return load_bvecs(path)
    if ext == ".i8vecs":
        return load_i8vecs(path)
    raise ValueError(f"cannot infer dataset format from extension {ext!r}")

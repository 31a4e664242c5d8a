"""Per-dimension clamped linear quantization to low-precision signed codes.

A fitted window [sb_i, se_i] around a center k_i maps each coordinate to a
B-bit signed integer: values inside the window go through
floor(2^B * (x - k) / (se - sb)) and values outside saturate. All three
fitting modes place k at the window midpoint, so the in-window image spans
the full signed range. The upper saturation code is 2^(B-1) - 1 because
2^(B-1) does not exist in a signed B-bit integer; this costs at most the
single topmost bin.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DenseDataset, ElemKind
from .errors import (
    BadMagic,
    DimensionMismatch,
    ElementKindMismatch,
    TooFewSamples,
    TruncatedFile,
    UnsupportedVersion,
)

# Window widths below this are treated as degenerate and widened.
DEGENERATE_WIDTH = 1e-12
DEGENERATE_HALF_WIDTH = 1e-6

# Symmetric per-dimension outlier trimming for the AbsMax window, as
# empirical quantile ranks. Quantiles are order statistics (nearest rank
# toward the interior), so small samples lose nothing.
TRIM_LO = 0.001
TRIM_HI = 0.999

_STATS_CHUNK = 64

_PARAMS_MAGIC = b"QZP1"
_PARAMS_VERSION = 1
_PARAMS_HEADER = struct.Struct("<4s4BI")


class QuantMode(enum.IntEnum):
    """Window fitting strategy; values double as file codes."""

    SIGMA_CLAMP = 0
    ABS_MAX = 1
    UNIFORM_SIGMA_CLAMP = 2

    @classmethod
    def parse(cls, name: str) -> "QuantMode":
        try:
            return _MODE_NAMES[name.strip().lower()]
        except KeyError:
            raise ValueError(
                f"unknown mode {name!r}; expected sigma, absmax, or uniform"
            ) from None

    @property
    def short_name(self) -> str:
        return ("sigma", "absmax", "uniform")[int(self)]


_MODE_NAMES = {
    "sigma": QuantMode.SIGMA_CLAMP,
    "sigmaclamp": QuantMode.SIGMA_CLAMP,
    "absmax": QuantMode.ABS_MAX,
    "uniform": QuantMode.UNIFORM_SIGMA_CLAMP,
    "uniformsigma": QuantMode.UNIFORM_SIGMA_CLAMP,
}


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DimensionStats:
    """Per-dimension moments of a corpus plus pooled (flattened) moments.

    sigma is the maximum-likelihood (divide-by-n) standard deviation.
    trimmed_absmax is max |x - mu| after discarding values outside the
    [TRIM_LO, TRIM_HI] empirical quantiles of that dimension.
    """

    mu: np.ndarray
    sigma: np.ndarray
    min: np.ndarray
    max: np.ndarray
    trimmed_absmax: np.ndarray
    pooled_mu: float
    pooled_sigma: float
    count: int

    def __post_init__(self):
        for name in ("mu", "sigma", "min", "max", "trimmed_absmax"):
            arr = getattr(self, name)
            if arr.ndim != 1 or arr.dtype != np.float64:
                raise ValueError(f"{name} must be a 1-D float64 array")
            object.__setattr__(self, name, _freeze(arr))

    @property
    def d(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class QuantizerParams:
    """Fitted per-dimension window constants, stored as float32.

    k is the window center, sb/se the lower/upper clamp bounds;
    k = (sb + se) / 2 in every mode.
    """

    bits: int
    mode: QuantMode
    k: np.ndarray
    sb: np.ndarray
    se: np.ndarray

    def __post_init__(self):
        if not 1 <= self.bits <= 8:
            raise ValueError("bits must be between 1 and 8")
        object.__setattr__(self, "mode", QuantMode(self.mode))
        for name in ("k", "sb", "se"):
            arr = getattr(self, name)
            if arr.ndim != 1 or arr.dtype != np.float32:
                raise ValueError(f"{name} must be a 1-D float32 array")
            object.__setattr__(self, name, _freeze(arr))
        if not (self.k.shape == self.sb.shape == self.se.shape):
            raise ValueError("k, sb, se must share a shape")
        if not bool(np.all(self.sb < self.se)):
            raise ValueError("every dimension needs sb < se")

    @property
    def d(self) -> int:
        return self.k.shape[0]

    @property
    def lo_code(self) -> int:
        return -(1 << (self.bits - 1))

    @property
    def hi_code(self) -> int:
        return (1 << (self.bits - 1)) - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantizerParams):
            return NotImplemented
        return (
            self.bits == other.bits
            and self.mode == other.mode
            and self.k.shape == other.k.shape
            and np.array_equal(self.k, other.k)
            and np.array_equal(self.sb, other.sb)
            and np.array_equal(self.se, other.se)
        )


@dataclass(frozen=True)
class FitResult:
    """A fitted params object plus the dimensions that needed widening."""

    params: QuantizerParams
    degenerate_dims: tuple[int, ...]


def estimate_stats(ds: DenseDataset) -> DimensionStats:
    """Per-dimension and pooled Gaussian MLE statistics of a float corpus."""
    if ds.elem is not ElemKind.FLOAT32:
        raise ElementKindMismatch("statistics are estimated on Float32 corpora")
    n, d = ds.n, ds.d
    if n < 2:
        raise TooFewSamples(f"need at least 2 vectors, got {n}")
    mu = np.empty(d, dtype=np.float64)
    sigma = np.empty(d, dtype=np.float64)
    mn = np.empty(d, dtype=np.float64)
    mx = np.empty(d, dtype=np.float64)
    tam = np.empty(d, dtype=np.float64)
    # column blocks keep peak memory modest on wide corpora
    for lo in range(0, d, _STATS_CHUNK):
        hi = min(lo + _STATS_CHUNK, d)
        block = ds.data[:, lo:hi].astype(np.float64)
        bmu = block.mean(axis=0)
        centered = block - bmu
        mu[lo:hi] = bmu
        sigma[lo:hi] = np.sqrt(np.mean(centered * centered, axis=0))
        mn[lo:hi] = block.min(axis=0)
        mx[lo:hi] = block.max(axis=0)
        qlo = np.quantile(block, TRIM_LO, axis=0, method="lower")
        qhi = np.quantile(block, TRIM_HI, axis=0, method="higher")
        kept = (block >= qlo) & (block <= qhi)
        tam[lo:hi] = np.where(kept, np.abs(centered), -np.inf).max(axis=0)
    flat_sum = 0.0
    for lo in range(0, d, _STATS_CHUNK):
        hi = min(lo + _STATS_CHUNK, d)
        flat_sum += float(np.sum(ds.data[:, lo:hi].astype(np.float64)))
    flat_mu = flat_sum / (n * d)
    pooled_var = 0.0
    for lo in range(0, d, _STATS_CHUNK):
        hi = min(lo + _STATS_CHUNK, d)
        block = ds.data[:, lo:hi].astype(np.float64) - flat_mu
        pooled_var += float(np.sum(block * block))
    pooled_sigma = math.sqrt(pooled_var / (n * d))
    return DimensionStats(
        mu=mu,
        sigma=sigma,
        min=mn,
        max=mx,
        trimmed_absmax=tam,
        pooled_mu=flat_mu,
        pooled_sigma=pooled_sigma,
        count=n,
    )


def fit(stats: DimensionStats, bits: int, mode: QuantMode) -> FitResult:
    """Derive window constants from estimated statistics.

    SigmaClamp centers each window on the dimension mean with half-width
    sigma; UniformSigmaClamp applies the pooled mean/sigma to every
    dimension; AbsMax uses the trimmed absolute maximum as half-width.
    Zero-width dimensions are widened around the center and reported.
    """
    if not 1 <= bits <= 8:
        raise ValueError("bits must be between 1 and 8")
    mode = QuantMode(mode)
    d = stats.d
    if mode is QuantMode.SIGMA_CLAMP:
        k = stats.mu.copy()
        half = stats.sigma.copy()
    elif mode is QuantMode.UNIFORM_SIGMA_CLAMP:
        k = np.full(d, stats.pooled_mu, dtype=np.float64)
        half = np.full(d, stats.pooled_sigma, dtype=np.float64)
    elif mode is QuantMode.ABS_MAX:
        k = stats.mu.copy()
        half = stats.trimmed_absmax.copy()
    else:  # pragma: no cover - QuantMode() above rejects strangers
        raise ValueError(f"unknown mode {mode!r}")
    sb = k - half
    se = k + half
    degenerate = se - sb < DEGENERATE_WIDTH
    if degenerate.any():
        sb[degenerate] = k[degenerate] - DEGENERATE_HALF_WIDTH
        se[degenerate] = k[degenerate] + DEGENERATE_HALF_WIDTH
    k32 = k.astype(np.float32)
    sb32 = sb.astype(np.float32)
    se32 = se.astype(np.float32)
    # float32 rounding can collapse a tiny window around a large center;
    # fall back to the narrowest representable window
    collapsed = ~(sb32 < se32)
    if collapsed.any():
        inf32 = np.float32(np.inf)
        sb32[collapsed] = np.nextafter(k32[collapsed], -inf32)
        se32[collapsed] = np.nextafter(k32[collapsed], inf32)
        degenerate = degenerate | collapsed
    params = QuantizerParams(bits=bits, mode=mode, k=k32, sb=sb32, se=se32)
    report = tuple(int(i) for i in np.flatnonzero(degenerate))
    return FitResult(params=params, degenerate_dims=report)


def quantize_value(x: float, dim: int, p: QuantizerParams) -> int:
    """Quantize one coordinate of dimension ``dim``.

    In-window values map through the linear form and are clamped into the
    signed range; values below the window (NaN included) saturate to the
    lowest code, values above to the highest. The linear form is evaluated
    in float32, the precision the window bounds are stored at; the scalar
    and matrix paths share the exact operation order, so they agree bit
    for bit.
    """
    sb = float(p.sb[dim])
    se = float(p.se[dim])
    if sb <= x <= se:
        ratio = (np.float32(x) - p.k[dim]) / (p.se[dim] - p.sb[dim])
        q = math.floor(float(np.float32(2.0 ** p.bits) * ratio))
        return max(p.lo_code, min(p.hi_code, q))
    if x > se:
        return p.hi_code
    return p.lo_code


def _quantize_matrix(values: np.ndarray, p: QuantizerParams) -> np.ndarray:
    # same float32 operation order as quantize_value
    ratio = (values - p.k) / (p.se - p.sb)
    q = np.floor((np.float32(2.0 ** p.bits) * ratio).astype(np.float64))
    q = np.clip(q, p.lo_code, p.hi_code)
    x = values.astype(np.float64)
    above = x > p.se.astype(np.float64)
    in_window = (x >= p.sb.astype(np.float64)) & (x <= p.se.astype(np.float64))
    out = np.where(in_window, q, np.where(above, p.hi_code, p.lo_code))
    return out.astype(np.int8)


def quantize_dataset(ds: DenseDataset, p: QuantizerParams) -> DenseDataset:
    """Quantize every vector of a float corpus to int8 codes."""
    if ds.elem is not ElemKind.FLOAT32:
        raise ElementKindMismatch("quantization input must be Float32")
    if ds.d != p.d:
        raise DimensionMismatch(f"dataset d={ds.d} but params d={p.d}")
    return DenseDataset(_quantize_matrix(ds.data, p))


def quantize_query(q: np.ndarray, p: QuantizerParams) -> np.ndarray:
    """Quantize a single float32 vector with the same mapping as the corpus."""
    if q.ndim != 1:
        raise DimensionMismatch("expected a 1-D query vector")
    if q.dtype != np.float32:
        raise ElementKindMismatch("quantization input must be float32")
    if q.shape[0] != p.d:
        raise DimensionMismatch(f"query d={q.shape[0]} but params d={p.d}")
    return _quantize_matrix(q[np.newaxis, :], p)[0]


def dequantize_value(q: int, dim: int, p: QuantizerParams) -> float:
    """Map a code back to the center of its bin."""
    k = float(p.k[dim])
    width = float(p.se[dim]) - float(p.sb[dim])
    return k + (q + 0.5) * width / (2.0 ** p.bits)


def save_params(p: QuantizerParams, path) -> None:
    """Write params in the QZP1 binary layout."""
    header = _PARAMS_HEADER.pack(
        _PARAMS_MAGIC, _PARAMS_VERSION, p.bits, int(p.mode), 0, p.d
    )
    triples = np.empty((p.d, 3), dtype="<f4")
    triples[:, 0] = p.k
    triples[:, 1] = p.sb
    triples[:, 2] = p.se
    Path(path).write_bytes(header + triples.tobytes())


def load_params(path) -> QuantizerParams:
    """Read params written by save_params; round trips are bit-exact."""
    raw = Path(path).read_bytes()
    if len(raw) < _PARAMS_HEADER.size:
        raise TruncatedFile(f"{path}: shorter than the fixed header")
    magic, version, bits, mode_code, _, d = _PARAMS_HEADER.unpack_from(raw)
    if magic != _PARAMS_MAGIC:
        raise BadMagic(f"{path}: not a params file")
    if version != _PARAMS_VERSION:
        raise UnsupportedVersion(f"{path}: version {version} not supported")
    expected = _PARAMS_HEADER.size + 12 * d
    if len(raw) != expected:
        raise TruncatedFile(
            f"{path}: {len(raw)} bytes but header implies {expected}"
        )
    try:
        mode = QuantMode(mode_code)
    except ValueError:
        raise UnsupportedVersion(f"{path}: unknown mode code {mode_code}") from None
    triples = np.frombuffer(raw, dtype="<f4", offset=_PARAMS_HEADER.size)
    triples = triples.reshape(d, 3).astype(np.float32, copy=True)
    return QuantizerParams(
        bits=bits,
        mode=mode,
        k=triples[:, 0].copy(),
        sb=triples[:, 1].copy(),
        se=triples[:, 2].copy(),
    )

"""Distance semantics for both element kinds.

Every metric is oriented so that smaller means closer: inner product is
negated (folding maximum-inner-product search into the same top-k
machinery as L2), and angular distance is 1 - cos. Integer kernels
accumulate in 32 bits, which is exact for d up to 133,000 at 8-bit
values (d * 127 * 127 < 2^31).
"""

from __future__ import annotations

import enum
import math

import numpy as np

from . import _backend
from .dataset import MAX_DIM
from .errors import DimensionMismatch, ElementKindMismatch, ZeroNorm


class Metric(enum.IntEnum):
    """Distance semantics; values double as file codes."""

    INNER_PRODUCT = 0
    L2_SQUARED = 1
    ANGULAR = 2

    @classmethod
    def parse(cls, name: str) -> "Metric":
        try:
            return _METRIC_NAMES[name.strip().lower()]
        except KeyError:
            raise ValueError(
                f"unknown metric {name!r}; expected ip, l2, or angular"
            ) from None

    @property
    def short_name(self) -> str:
        return ("ip", "l2", "angular")[int(self)]


_METRIC_NAMES = {
    "ip": Metric.INNER_PRODUCT,
    "innerproduct": Metric.INNER_PRODUCT,
    "inner_product": Metric.INNER_PRODUCT,
    "l2": Metric.L2_SQUARED,
    "l2sq": Metric.L2_SQUARED,
    "angular": Metric.ANGULAR,
}


def _check_pair(a: np.ndarray, b: np.ndarray, dtype: np.dtype) -> None:
    if a.ndim != 1 or b.ndim != 1:
        raise DimensionMismatch("expected 1-D vectors")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if a.dtype != dtype or b.dtype != dtype:
        raise ElementKindMismatch(f"expected {dtype} vectors, got {a.dtype}/{b.dtype}")
    if a.shape[0] > MAX_DIM:
        raise DimensionMismatch(f"d={a.shape[0]} exceeds the supported maximum {MAX_DIM}")


def dot_f32(a, b) -> float:
    """Inner product of two float32 vectors (float64 accumulation)."""
    _check_pair(a, b, np.dtype(np.float32))
    return float(_backend.dot(a, b))


def dot_i8(a, b) -> int:
    """Inner product of two int8 vectors; products widened before summing."""
    _check_pair(a, b, np.dtype(np.int8))
    return int(_backend.dot(a, b))


def l2sq_f32(a, b) -> float:
    """Squared Euclidean distance of two float32 vectors."""
    _check_pair(a, b, np.dtype(np.float32))
    return float(_backend.l2sq(a, b))


def l2sq_i8(a, b) -> int:
    """Squared Euclidean distance of two int8 vectors, widened per element.

    Worst-case magnitudes (all elements at opposite saturation) overflow
    the 32-bit accumulator beyond d of about 33,000; quantized real data
    sits far from that bound.
    """
    _check_pair(a, b, np.dtype(np.int8))
    return int(_backend.l2sq(a, b))


def _self_norm(a) -> float:
    return math.sqrt(float(_backend.dot(a, a)))


def angular(a, b, norm_a: float | None = None, norm_b: float | None = None) -> float:
    """1 - cos(a, b) with norms taken from the stored representation.

    Norms may be passed in when precomputed (batch paths cache them as
    float32); omitted norms are derived from the vectors in float64.
    """
    if a.dtype != b.dtype:
        raise ElementKindMismatch(f"mixed element kinds {a.dtype}/{b.dtype}")
    _check_pair(a, b, a.dtype)
    na = _self_norm(a) if norm_a is None else float(norm_a)
    nb = _self_norm(b) if norm_b is None else float(norm_b)
    if na <= 0.0 or nb <= 0.0:
        raise ZeroNorm("angular distance needs vectors with positive norm")
    return 1.0 - float(_backend.dot(a, b)) / (na * nb)


def distance(metric: Metric, a, b, norms: tuple[float, float] | None = None) -> float:
    """Metric distance between two vectors; smaller is closer.

    ``norms`` carries precomputed (norm_a, norm_b) for the angular metric
    and is ignored otherwise.
    """
    if a.dtype != b.dtype:
        raise ElementKindMismatch(f"mixed element kinds {a.dtype}/{b.dtype}")
    if metric == Metric.INNER_PRODUCT:
        _check_pair(a, b, a.dtype)
        return -float(_backend.dot(a, b))
    if metric == Metric.L2_SQUARED:
        _check_pair(a, b, a.dtype)
        return float(_backend.l2sq(a, b))
    if metric == Metric.ANGULAR:
        if norms is not None:
            return angular(a, b, norms[0], norms[1])
        return angular(a, b)
    raise ValueError(f"unknown metric {metric!r}")

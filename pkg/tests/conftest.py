"""Shared helpers: an independent slow-but-obvious top-k reference.

The reference mirrors the kernel contracts (float64 accumulation in
index order, int arithmetic for int8, float32-rounded stored norms,
ties broken by ascending id) using plain Python loops, so kernel
results can be compared bit for bit.
"""

import math

import numpy as np


def ref_dot(a, b):
    if a.dtype == np.int8:
        return sum(int(x) * int(y) for x, y in zip(a, b))
    acc = 0.0
    for x, y in zip(a, b):
        acc += float(x) * float(y)
    return acc


def ref_l2sq(a, b):
    if a.dtype == np.int8:
        return sum((int(x) - int(y)) ** 2 for x, y in zip(a, b))
    acc = 0.0
    for x, y in zip(a, b):
        diff = float(x) - float(y)
        acc += diff * diff
    return acc


def ref_norm(a):
    """Stored-representation norm, rounded to float32 like the kernels."""
    if a.dtype == np.int8:
        return float(np.float32(math.sqrt(sum(int(x) * int(x) for x in a))))
    acc = 0.0
    for x in a:
        acc += float(x) * float(x)
    return float(np.float32(math.sqrt(acc)))


def ref_distance(metric, a, b, norm_a=None, norm_b=None):
    if metric == 0:
        return -float(ref_dot(a, b))
    if metric == 1:
        return float(ref_l2sq(a, b))
    na = ref_norm(a) if norm_a is None else norm_a
    nb = ref_norm(b) if norm_b is None else norm_b
    return 1.0 - float(ref_dot(a, b)) / (na * nb)


def ref_topk(corpus, query, k, metric):
    """Full sort with (distance, id) lexicographic order, truncated to k."""
    scored = [
        (ref_distance(metric, corpus[i], query), i) for i in range(corpus.shape[0])
    ]
    scored.sort()
    top = scored[: min(k, len(scored))]
    ids = np.array([i for _, i in top], dtype=np.int32)
    scores = np.array([s for s, _ in top], dtype=np.float64)
    return scores, ids

"""Graph index: construction invariants, search, memory, serialization."""

import struct

import numpy as np
import pytest

from quantann import (
    BadMagic,
    Corrupt,
    DenseDataset,
    DimensionMismatch,
    ElemKind,
    ElementKindMismatch,
    EmptyCorpus,
    HnswConfig,
    Metric,
    SearchParams,
    VersionMismatch,
    ZeroNorm,
    build,
    estimate_memory,
    exact_topk,
    load_index,
    save_index,
)
from quantann.hnsw import assign_levels

_HEADER = 46  # fixed file header size


def _corpus(n, d, seed=0, kind="f32"):
    rng = np.random.default_rng(seed)
    if kind == "f32":
        return DenseDataset(rng.uniform(-1.0, 1.0, size=(n, d)).astype(np.float32))
    return DenseDataset(rng.integers(-127, 128, size=(n, d)).astype(np.int8))


def test_config_validation():
    with pytest.raises(ValueError):
        HnswConfig(M=1)
    with pytest.raises(ValueError):
        HnswConfig(M=8, ef_construction=7)
    with pytest.raises(ValueError):
        HnswConfig(M=8, ef_construction=8, level_mult=0.0)
    cfg = HnswConfig(M=32)
    assert cfg.level_mult == pytest.approx(1.0 / np.log(32.0))
    with pytest.raises(ValueError):
        SearchParams(k=0, ef_search=10)
    with pytest.raises(ValueError):
        SearchParams(k=10, ef_search=9)


def test_assign_levels_deterministic_and_nonnegative():
    a = assign_levels(10_000, 7, 1.0 / np.log(32.0))
    b = assign_levels(10_000, 7, 1.0 / np.log(32.0))
    np.testing.assert_array_equal(a, b)
    assert a.min() >= 0
    # floor(Exp(mean=1/ln M)) is geometric with P(level >= 1) = 1/M
    assert a.mean() == pytest.approx(1.0 / 31.0, rel=0.15)


def test_single_node_index():
    idx = build(_corpus(1, 4), HnswConfig(M=2, ef_construction=2, seed=0), Metric.L2_SQUARED)
    assert idx.n == 1 and idx.entry_point == 0 and idx.max_level >= 0
    assert idx.neighbors(0, 0).size == 0
    res = idx.search(idx.data.data[0], SearchParams(k=1, ef_search=1))
    assert list(res.ids) == [0] and res.scores[0] == 0.0


def test_build_determinism():
    corpus = _corpus(400, 8, seed=2)
    cfg = HnswConfig(M=6, ef_construction=40, seed=5)
    a = build(corpus, cfg, Metric.L2_SQUARED)
    b = build(corpus, cfg, Metric.L2_SQUARED)
    assert a.entry_point == b.entry_point and a.max_level == b.max_level
    np.testing.assert_array_equal(a.levels, b.levels)
    for node in range(corpus.n):
        for layer in range(int(a.levels[node]) + 1):
            np.testing.assert_array_equal(a.neighbors(node, layer), b.neighbors(node, layer))


def test_small_corpus_is_effectively_exhaustive():
    corpus = _corpus(50, 2, seed=3)
    idx = build(corpus, HnswConfig(M=8, ef_construction=50, seed=0), Metric.L2_SQUARED)
    params = SearchParams(k=10, ef_search=50)
    for i in range(corpus.n):
        got = idx.search(corpus.data[i], params)
        want = exact_topk(corpus, corpus.data[i], 10, Metric.L2_SQUARED)
        np.testing.assert_array_equal(got.ids, want.ids)
        np.testing.assert_array_equal(got.scores, want.scores)


def test_degree_caps_and_no_self_edges():
    corpus = _corpus(500, 6, seed=4)
    m = 5
    idx = build(corpus, HnswConfig(M=m, ef_construction=30, seed=1), Metric.INNER_PRODUCT)
    for node in range(corpus.n):
        for layer in range(int(idx.levels[node]) + 1):
            nbrs = idx.neighbors(node, layer)
            cap = 2 * m if layer == 0 else m
            assert nbrs.size <= cap
            assert not np.any(nbrs == node)
            assert nbrs.min(initial=0) >= 0 and nbrs.max(initial=0) < corpus.n


def test_layer0_reachable_from_entry():
    corpus = _corpus(300, 8, seed=6)
    idx = build(corpus, HnswConfig(M=6, ef_construction=40, seed=2), Metric.L2_SQUARED)
    seen = np.zeros(corpus.n, dtype=bool)
    stack = [idx.entry_point]
    seen[idx.entry_point] = True
    while stack:
        node = stack.pop()
        for nb in idx.neighbors(node, 0):
            if not seen[nb]:
                seen[nb] = True
                stack.append(int(nb))
    assert seen.all()


def test_entry_point_has_max_level():
    idx = build(_corpus(800, 4, seed=7), HnswConfig(M=4, ef_construction=16, seed=3), Metric.L2_SQUARED)
    assert int(idx.levels[idx.entry_point]) == idx.max_level
    assert idx.max_level == int(idx.levels.max())


def test_stored_vector_query_ranks_itself_first():
    corpus = _corpus(200, 8, seed=8)
    idx = build(corpus, HnswConfig(M=8, ef_construction=60, seed=0), Metric.L2_SQUARED)
    for i in range(0, 200, 10):
        res = idx.search(corpus.data[i], SearchParams(k=1, ef_search=64))
        assert res.ids[0] == i and res.scores[0] == 0.0


def test_search_validation():
    idx = build(_corpus(20, 4), HnswConfig(M=2, ef_construction=4, seed=0), Metric.L2_SQUARED)
    with pytest.raises(DimensionMismatch):
        idx.search(np.zeros(5, dtype=np.float32), SearchParams(k=1, ef_search=2))
    with pytest.raises(ElementKindMismatch):
        idx.search(np.zeros(4, dtype=np.int8), SearchParams(k=1, ef_search=2))
    ang = build(_corpus(20, 4, seed=1), HnswConfig(M=2, ef_construction=4, seed=0), Metric.ANGULAR)
    with pytest.raises(ZeroNorm):
        ang.search(np.zeros(4, dtype=np.float32), SearchParams(k=1, ef_search=2))


def test_search_batch_shapes_and_kind():
    corpus = _corpus(100, 4, seed=9)
    idx = build(corpus, HnswConfig(M=4, ef_construction=16, seed=0), Metric.L2_SQUARED)
    queries = _corpus(7, 4, seed=10)
    ids, scores = idx.search_batch(queries, SearchParams(k=5, ef_search=16))
    assert ids.shape == (7, 5) and scores.shape == (7, 5)
    with pytest.raises(ElementKindMismatch):
        idx.search_batch(_corpus(3, 4, kind="i8"), SearchParams(k=2, ef_search=4))


def test_build_validation():
    with pytest.raises(EmptyCorpus):
        build(DenseDataset(np.empty((0, 3), dtype=np.float32)), HnswConfig(M=2, ef_construction=2), Metric.L2_SQUARED)
    bad = DenseDataset(np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.float32))
    with pytest.raises(ZeroNorm):
        build(bad, HnswConfig(M=2, ef_construction=2), Metric.ANGULAR)


def test_memory_report_matches_file_size(tmp_path):
    for kind, metric in (("f32", Metric.L2_SQUARED), ("i8", Metric.ANGULAR)):
        corpus = _corpus(150, 10, seed=11, kind=kind)
        idx = build(corpus, HnswConfig(M=4, ef_construction=20, seed=4), metric)
        mem = idx.memory_report()
        path = tmp_path / f"{kind}.idx"
        save_index(idx, path)
        assert path.stat().st_size == mem.total
        assert mem.header_bytes == _HEADER
        assert mem.level_bytes == 4 * corpus.n
        assert mem.norm_bytes == (4 * corpus.n if metric == Metric.ANGULAR else 0)


def test_memory_gap_is_pure_vector_storage():
    n, d = 300, 12
    f32 = _corpus(n, d, seed=12)
    i8 = _corpus(n, d, seed=12, kind="i8")
    cfg = HnswConfig(M=6, ef_construction=24, seed=5)
    a = build(f32, cfg, Metric.L2_SQUARED).memory_report()
    b = build(i8, cfg, Metric.L2_SQUARED).memory_report()
    assert a.graph_bytes == b.graph_bytes
    assert a.vector_bytes - b.vector_bytes == n * d * 3
    assert a.total - b.total == n * d * 3
    assert b.total / a.total > 0.25


def test_estimate_memory_matches_measured():
    corpus = _corpus(700, 16, seed=13)
    cfg = HnswConfig(M=8, ef_construction=32, seed=6)
    idx = build(corpus, cfg, Metric.L2_SQUARED)
    est = estimate_memory(corpus.n, corpus.d, ElemKind.FLOAT32, Metric.L2_SQUARED, cfg)
    assert est == idx.memory_report()


def test_round_trip_search_identity(tmp_path):
    corpus = _corpus(1000, 16, seed=14)
    idx = build(corpus, HnswConfig(M=8, ef_construction=40, seed=7), Metric.INNER_PRODUCT)
    path = tmp_path / "ip.idx"
    save_index(idx, path)
    loaded = load_index(path)
    rng = np.random.default_rng(15)
    params = SearchParams(k=10, ef_search=50)
    for _ in range(100):
        q = rng.uniform(-1.0, 1.0, size=16).astype(np.float32)
        a = idx.search(q, params)
        b = loaded.search(q, params)
        np.testing.assert_array_equal(a.ids, b.ids)
        np.testing.assert_array_equal(a.scores, b.scores)
    # a loaded index re-saves to identical bytes
    path2 = tmp_path / "ip2.idx"
    save_index(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def _saved_index_bytes(tmp_path, kind="f32", metric=Metric.L2_SQUARED):
    corpus = _corpus(40, 5, seed=16, kind=kind)
    idx = build(corpus, HnswConfig(M=3, ef_construction=12, seed=8), metric)
    path = tmp_path / "base.idx"
    save_index(idx, path)
    return bytearray(path.read_bytes())


def test_load_rejects_bad_magic(tmp_path):
    raw = _saved_index_bytes(tmp_path)
    raw[:6] = b"NOTIDX"
    bad = tmp_path / "magic.idx"
    bad.write_bytes(bytes(raw))
    with pytest.raises(BadMagic):
        load_index(bad)


def test_load_rejects_unknown_version(tmp_path):
    raw = _saved_index_bytes(tmp_path)
    raw[6] = 9
    bad = tmp_path / "ver.idx"
    bad.write_bytes(bytes(raw))
    with pytest.raises(VersionMismatch):
        load_index(bad)


def test_load_rejects_truncation(tmp_path):
    raw = _saved_index_bytes(tmp_path)
    for cut in (10, _HEADER + 3, len(raw) - 10):
        bad = tmp_path / f"cut{cut}.idx"
        bad.write_bytes(bytes(raw[:cut]))
        with pytest.raises(Corrupt):
            load_index(bad)


def test_load_rejects_element_kind_flip(tmp_path):
    raw = _saved_index_bytes(tmp_path)
    flipped = bytearray(raw)
    flipped[7] = 1  # claims int8, width byte still says 32
    bad = tmp_path / "elem.idx"
    bad.write_bytes(bytes(flipped))
    with pytest.raises(Corrupt):
        load_index(bad)
    both = bytearray(raw)
    both[7] = 1
    both[9] = 8  # consistent pair, but the payload length no longer fits
    bad2 = tmp_path / "elem2.idx"
    bad2.write_bytes(bytes(both))
    with pytest.raises(Corrupt):
        load_index(bad2)


def test_load_rejects_self_edge(tmp_path):
    raw = _saved_index_bytes(tmp_path)
    n = 40
    adj_off = _HEADER + 4 * n  # node 0, layer 0 block: degree word then ids
    deg = struct.unpack_from("<i", raw, adj_off)[0]
    assert deg >= 1
    struct.pack_into("<i", raw, adj_off + 4, 0)  # first neighbor id := node 0
    bad = tmp_path / "selfedge.idx"
    bad.write_bytes(bytes(raw))
    with pytest.raises(Corrupt):
        load_index(bad)


def test_load_rejects_entry_inconsistency(tmp_path):
    raw = _saved_index_bytes(tmp_path)
    struct.pack_into("<I", raw, 38, 4999)  # entry id beyond n
    bad = tmp_path / "entry.idx"
    bad.write_bytes(bytes(raw))
    with pytest.raises(Corrupt):
        load_index(bad)

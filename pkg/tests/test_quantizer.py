"""Statistics estimation, window fitting, and the clamped linear code."""

import math

import numpy as np
import pytest

from quantann import (
    BadMagic,
    DenseDataset,
    DimensionMismatch,
    ElementKindMismatch,
    Metric,
    QuantMode,
    TooFewSamples,
    TruncatedFile,
    UnsupportedVersion,
    dequantize_value,
    estimate_stats,
    exact_topk,
    fit,
    load_params,
    quantize_dataset,
    quantize_query,
    quantize_value,
    save_params,
)


def _ds(rows):
    return DenseDataset(np.asarray(rows, dtype=np.float32))


def _fit_window(lo, hi, bits=8):
    """Params with a single dimension spanning [lo, hi], centered."""
    half = (hi - lo) / 2.0
    mid = (hi + lo) / 2.0
    stats = estimate_stats(_ds([[mid - half], [mid + half]]))
    return fit(stats, bits, QuantMode.SIGMA_CLAMP).params


def test_stats_hand_values():
    stats = estimate_stats(_ds([[0, 0], [2, 2]]))
    np.testing.assert_array_equal(stats.mu, [1.0, 1.0])
    np.testing.assert_array_equal(stats.sigma, [1.0, 1.0])
    assert stats.count == 2


def test_stats_constant_dimension():
    stats = estimate_stats(_ds([[0.5, 1.0], [0.5, 3.0]]))
    assert stats.mu[0] == 0.5 and stats.sigma[0] == 0.0


def test_stats_pooled_equals_per_dim_when_d1():
    stats = estimate_stats(_ds([[0.0], [2.0]]))
    assert stats.pooled_mu == stats.mu[0] == 1.0
    assert stats.pooled_sigma == stats.sigma[0] == 1.0


def test_stats_pooled_is_flattened():
    data = np.arange(12, dtype=np.float32).reshape(3, 4)
    stats = estimate_stats(DenseDataset(data))
    flat = data.astype(np.float64).ravel()
    assert stats.pooled_mu == pytest.approx(flat.mean(), rel=0, abs=0)
    assert stats.pooled_sigma == pytest.approx(flat.std(), rel=1e-15)


def test_stats_rejects_tiny_and_int8():
    with pytest.raises(TooFewSamples):
        estimate_stats(_ds([[1.0, 2.0]]))
    with pytest.raises(ElementKindMismatch):
        estimate_stats(DenseDataset(np.zeros((3, 2), dtype=np.int8)))


def test_fit_sigma_clamp_formula():
    stats = estimate_stats(_ds([[-0.1], [0.1]]))  # mu=0, sigma=0.1 exactly
    params = fit(stats, 8, QuantMode.SIGMA_CLAMP).params
    assert params.k[0] == np.float32(0.0)
    assert params.sb[0] == np.float32(-0.1)
    assert params.se[0] == np.float32(0.1)


def test_fit_absmax_small_n_keeps_everything():
    stats = estimate_stats(_ds([[-0.3], [-0.2], [0.2], [0.3]]))
    params = fit(stats, 8, QuantMode.ABS_MAX).params
    assert params.sb[0] == np.float32(-0.3)
    assert params.se[0] == np.float32(0.3)


def test_fit_absmax_trims_outliers():
    rng = np.random.default_rng(5)
    col = rng.normal(0.0, 1.0, size=10_000)
    col[-1] = 1000.0
    stats = estimate_stats(_ds(col[:, None]))
    params = fit(stats, 8, QuantMode.ABS_MAX).params
    assert 2.0 < float(params.se[0]) < 10.0  # outlier removed by the trim


def test_fit_uniform_pools_all_dimensions():
    stats = estimate_stats(_ds([[0.0, 10.0], [2.0, 12.0]]))
    params = fit(stats, 8, QuantMode.UNIFORM_SIGMA_CLAMP).params
    mu, sigma = 6.0, math.sqrt(26.0)
    np.testing.assert_array_equal(params.k, np.float32([mu, mu]))
    np.testing.assert_array_equal(params.sb, np.float32([mu - sigma] * 2))
    np.testing.assert_array_equal(params.se, np.float32([mu + sigma] * 2))


def test_fit_degenerate_dimension_widened_and_reported():
    result = fit(estimate_stats(_ds([[0.5, 1.0], [0.5, 2.0]])), 8, QuantMode.SIGMA_CLAMP)
    assert result.degenerate_dims == (0,)
    params = result.params
    assert params.sb[0] == np.float32(0.5 - 1e-6)
    assert params.se[0] == np.float32(0.5 + 1e-6)
    assert float(params.sb[1]) < float(params.se[1])


def test_fit_float32_collapse_falls_back_to_ulp_window():
    col = np.full(1001, 1e8, dtype=np.float32)
    col[-1] = 1e8 + 8.0
    result = fit(estimate_stats(_ds(col[:, None])), 8, QuantMode.SIGMA_CLAMP)
    assert result.degenerate_dims == (0,)
    p = result.params
    assert float(p.sb[0]) < float(p.k[0]) < float(p.se[0])


def test_fit_rejects_bad_bits():
    stats = estimate_stats(_ds([[0.0], [1.0]]))
    for bits in (0, 9, -1):
        with pytest.raises(ValueError):
            fit(stats, bits, QuantMode.SIGMA_CLAMP)


def test_quantize_value_hand_cases():
    p = _fit_window(-0.1, 0.1)
    assert quantize_value(0.0, 0, p) == 0
    assert quantize_value(0.05, 0, p) == 64
    assert quantize_value(-0.1, 0, p) == -128
    assert quantize_value(0.1, 0, p) == 127  # 128 clamped to the signed range
    assert quantize_value(0.5, 0, p) == 127
    assert quantize_value(-0.2, 0, p) == -128
    assert quantize_value(float("nan"), 0, p) == -128


def test_quantize_monotone_and_in_range():
    rng = np.random.default_rng(3)
    p = _fit_window(-0.25, 0.75, bits=5)
    xs = np.sort(rng.uniform(-1.0, 1.5, size=500))
    codes = [quantize_value(float(x), 0, p) for x in xs]
    assert all(a <= b for a, b in zip(codes, codes[1:]))
    assert all(-16 <= c <= 15 for c in codes)


def test_quantize_matrix_matches_scalar_bitwise():
    rng = np.random.default_rng(11)
    data = rng.normal(0.0, 0.5, size=(200, 6)).astype(np.float32)
    stats = estimate_stats(DenseDataset(data))
    p = fit(stats, 8, QuantMode.SIGMA_CLAMP).params
    # include exact window boundaries among the probed values
    probe = data.copy()
    probe[0] = p.sb
    probe[1] = p.se
    out = quantize_dataset(DenseDataset(probe), p).data
    for i in range(probe.shape[0]):
        for j in range(probe.shape[1]):
            assert out[i, j] == quantize_value(float(probe[i, j]), j, p)


def test_quantize_all_center_vector_is_zero():
    p = _fit_window(-1.0, 3.0)
    row = np.array([p.k[0]], dtype=np.float32)
    assert quantize_query(row, p)[0] == 0


def test_quantize_query_validates_dimension():
    p = _fit_window(-1.0, 1.0)
    with pytest.raises(DimensionMismatch):
        quantize_query(np.zeros(3, dtype=np.float32), p)


def test_reconstruction_error_bound_in_window():
    rng = np.random.default_rng(7)
    for bits in (2, 4, 8):
        p = _fit_window(-0.2, 0.6, bits=bits)
        width = float(p.se[0]) - float(p.sb[0])
        bound = width / 2.0**bits
        xs = rng.uniform(float(p.sb[0]), float(p.se[0]), size=300)
        for x in xs:
            q = quantize_value(float(x), 0, p)
            assert abs(dequantize_value(q, 0, p) - float(x)) <= bound


def test_four_point_narrow_band_example():
    # three nearby values and one outlier, squeezed into a 4-level code:
    # the third point must stay tied for nearest to the fourth
    vals = [1.23, 2.34, 3.09, 1.4e7]
    ds = _ds([[v] for v in vals])
    p = fit(estimate_stats(ds), 2, QuantMode.SIGMA_CLAMP).params
    codes = quantize_dataset(ds, p).data
    assert codes.min() >= -2 and codes.max() <= 1
    assert codes[0, 0] == codes[1, 0] == codes[2, 0]
    corpus = DenseDataset(codes[:3])
    res = exact_topk(corpus, codes[3], 1, Metric.L2_SQUARED)
    third = abs(int(codes[2, 0]) - int(codes[3, 0])) ** 2
    assert res.scores[0] == third  # tied-for-nearest is preserved


def test_shift_equivariance_on_dyadic_data():
    base = _ds([[0.0], [2.0]])
    shifted = _ds([[0.5], [2.5]])
    p0 = fit(estimate_stats(base), 4, QuantMode.SIGMA_CLAMP).params
    p1 = fit(estimate_stats(shifted), 4, QuantMode.SIGMA_CLAMP).params
    for x in np.arange(-0.5, 2.75, 0.25):
        assert quantize_value(float(x), 0, p0) == quantize_value(float(x) + 0.5, 0, p1)


def test_dequantize_hand_values():
    p = _fit_window(-0.1, 0.1)
    assert dequantize_value(0, 0, p) == pytest.approx(0.000390625, abs=1e-9)
    assert dequantize_value(-128, 0, p) == pytest.approx(-0.09960938, abs=1e-7)
    for q in (0, 5, 17, 100):
        lo = dequantize_value(-1 - q, 0, p) - float(p.k[0])
        hi = dequantize_value(q, 0, p) - float(p.k[0])
        assert lo == pytest.approx(-hi, abs=1e-12)


def test_params_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.normal(0.0, 0.3, size=(64, 64)).astype(np.float32)
    p = fit(estimate_stats(DenseDataset(data)), 8, QuantMode.ABS_MAX).params
    path = tmp_path / "q.params"
    save_params(p, path)
    loaded = load_params(path)
    assert loaded == p
    # byte-stable on re-save
    path2 = tmp_path / "q2.params"
    save_params(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_params_file_errors(tmp_path):
    p = _fit_window(-1.0, 1.0)
    path = tmp_path / "q.params"
    save_params(p, path)
    raw = bytearray(path.read_bytes())

    bad_magic = tmp_path / "magic.params"
    bad_magic.write_bytes(b"XXXX" + bytes(raw[4:]))
    with pytest.raises(BadMagic):
        load_params(bad_magic)

    bad_version = tmp_path / "ver.params"
    broken = bytearray(raw)
    broken[4] = 99
    bad_version.write_bytes(bytes(broken))
    with pytest.raises(UnsupportedVersion):
        load_params(bad_version)

    short = tmp_path / "short.params"
    short.write_bytes(bytes(raw[:16]))
    with pytest.raises(TruncatedFile):
        load_params(short)

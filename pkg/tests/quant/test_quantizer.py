"""
Tests for the uniform quantizer.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantpareto.core.errors import QuantizationError
from quantpareto.core.models import Precision, Signedness
from quantpareto.quant.models import QuantRange, ScaleVector
from quantpareto.quant.quantizer import (
    EPSILON_BOUND,
    bucket_width,
    compute_scales,
    dequantize,
    fake_quantize,
    quant_range,
    quantization_staircase,
    quantize_to_int,
    ste_backward,
)
from quantpareto.quant.rounding import RoundingMode, round_to_grid

PRECISIONS = [
    Precision.signed(b) for b in (2, 4, 8, 16)
] + [Precision.unsigned(b) for b in (1, 4, 8, 16)]

SAMPLES = 100_000


def _scalar_setup(bound: float, precision: Precision):
    return compute_scales([bound], precision), quant_range(precision)


class TestQuantRange:
    """Integer ranges of each precision"""

    @pytest.mark.parametrize(
        "precision, expected",
        [
            (Precision.signed(8), (-127, 127)),
            (Precision.signed(4), (-7, 7)),
            (Precision.unsigned(4), (0, 15)),
            (Precision.unsigned(8), (0, 255)),
        ],
    )
    def test_range_table(self, precision, expected):
        qrange = quant_range(precision)
        assert (qrange.lo, qrange.hi) == expected

    def test_full_precision_has_no_range(self):
        with pytest.raises(QuantizationError, match="FullPrecision"):
            quant_range(Precision.full())

    def test_signed_needs_two_bits(self):
        with pytest.raises(ValueError):
            Precision.signed(1)

    def test_asymmetric_range_rejected(self):
        with pytest.raises(ValueError):
            QuantRange(lo=-3, hi=7)


class TestComputeScales:
    """Scales are hi / bound, floored at epsilon"""

    def test_signed_unit_bound(self):
        scales = compute_scales([1.0], Precision.signed(8))
        assert scales.scales[0] == 127.0

    def test_unsigned_bound(self):
        scales = compute_scales([6.0], Precision.unsigned(8))
        assert scales.scales[0] == pytest.approx(42.5)

    def test_zero_bound_floored(self):
        scales = compute_scales([0.0], Precision.signed(8))
        assert scales.scales[0] == pytest.approx(127 / EPSILON_BOUND)

    def test_negative_bound_rejected(self):
        with pytest.raises(QuantizationError, match="non-negative"):
            compute_scales([1.0, -0.5], Precision.signed(8))

    def test_per_channel(self):
        scales = compute_scales([1.0, 2.0, 4.0], Precision.signed(4))
        np.testing.assert_allclose(scales.scales, [7.0, 3.5, 1.75])
        assert len(scales) == 3
        assert not scales.is_per_tensor

    def test_invalid_scale_vector(self):
        with pytest.raises(QuantizationError):
            ScaleVector(scales=np.array([1.0, 0.0]))


class TestFakeQuantize:
    """Hand-computed fake quantization cases"""

    def test_zero_preserved(self):
        scales, qrange = _scalar_setup(0.37, Precision.signed(4))
        assert fake_quantize(np.array([0.0]), scales, qrange)[0] == 0.0

    def test_clips_to_bound(self):
        scales, qrange = _scalar_setup(1.0, Precision.signed(8))
        assert fake_quantize(np.array([10.0]), scales, qrange)[0] == 1.0
        assert fake_quantize(np.array([-10.0]), scales, qrange)[0] == -1.0

    def test_half_rounds_away_from_zero(self):
        scales, qrange = _scalar_setup(1.0, Precision.signed(8))
        out = fake_quantize(np.array([0.5, -0.5]), scales, qrange)
        np.testing.assert_allclose(out, [64 / 127, -64 / 127])

    def test_half_to_even_rounding(self):
        scales, qrange = _scalar_setup(1.0, Precision.signed(8))
        out = fake_quantize(
            np.array([0.5]), scales, qrange, rounding=RoundingMode.HALF_TO_EVEN
        )
        assert out[0] == pytest.approx(64 / 127)
        assert round_to_grid(np.array([2.5, -2.5]), RoundingMode.HALF_TO_EVEN).tolist() == [2.0, -2.0]
        assert round_to_grid(np.array([2.5, -2.5])).tolist() == [3.0, -3.0]

    def test_unsigned_clips_negatives_to_zero(self):
        scales, qrange = _scalar_setup(1.0, Precision.unsigned(4))
        out = fake_quantize(np.array([-0.3, 0.2, 2.0]), scales, qrange)
        np.testing.assert_allclose(out, [0.0, 3 / 15, 1.0])

    def test_per_channel_along_last_axis(self):
        x = np.array([[0.5, 0.5], [3.0, 3.0]])
        scales = compute_scales([1.0, 2.0], Precision.signed(8))
        out = fake_quantize(x, scales, quant_range(Precision.signed(8)))
        np.testing.assert_allclose(out[1], [1.0, 2.0])
        np.testing.assert_allclose(out[0], [64 / 127, 32 / 63.5])

    def test_scale_count_mismatch(self):
        scales = compute_scales([1.0, 2.0, 3.0], Precision.signed(8))
        with pytest.raises(QuantizationError, match="does not match"):
            fake_quantize(np.ones((4, 2)), scales, quant_range(Precision.signed(8)))

    def test_keeps_float32(self):
        scales, qrange = _scalar_setup(1.0, Precision.signed(8))
        out = fake_quantize(np.ones(3, dtype=np.float32), scales, qrange)
        assert out.dtype == np.float32


class TestIntegerPayload:
    """quantize_to_int and dequantize"""

    def test_integer_values(self):
        scales, qrange = _scalar_setup(1.0, Precision.signed(8))
        q = quantize_to_int(np.array([0.0, 0.5, -2.0]), scales, qrange)
        assert q.values.tolist() == [0, 64, -127]

    def test_dequantize(self):
        scales, qrange = _scalar_setup(1.0, Precision.signed(8))
        q = quantize_to_int(np.array([1.0, 0.5]), scales, qrange)
        np.testing.assert_allclose(dequantize(q), [1.0, 64 / 127])

    def test_dequantize_matches_fake_quantize_bit_exactly(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(64, 5)) * 3
        scales = compute_scales(rng.uniform(0.5, 4.0, size=5), Precision.signed(4))
        qrange = quant_range(Precision.signed(4))
        q = quantize_to_int(x, scales, qrange)
        assert np.array_equal(dequantize(q, x.dtype), fake_quantize(x, scales, qrange))


class TestQuantizerProperties:
    """Vectorised property sweeps over random (value, precision, bound) triples"""

    @pytest.fixture(params=PRECISIONS, ids=str)
    def precision(self, request):
        return request.param

    @pytest.fixture
    def triples(self, precision):
        rng = np.random.default_rng(precision.bits)
        bounds = rng.uniform(1e-3, 10.0, size=SAMPLES)
        values = rng.normal(size=SAMPLES) * bounds * 1.5
        values[:100] = 0.0
        values[100:200] = rng.choice([-1e30, 1e30], size=100)
        return values, bounds, precision

    def _quantize(self, values, bounds, precision):
        qrange = quant_range(precision)
        scales = compute_scales(bounds, precision)
        return fake_quantize(values, scales, qrange, channel_axis=0), scales.scales, qrange

    def test_idempotent(self, triples):
        values, bounds, precision = triples
        once, _, _ = self._quantize(values, bounds, precision)
        twice, _, _ = self._quantize(once, bounds, precision)
        assert np.array_equal(once, twice)

    def test_zero_preserved(self, triples):
        values, bounds, precision = triples
        out, _, _ = self._quantize(values, bounds, precision)
        assert np.all(out[:100] == 0.0)

    def test_error_bounded_inside_clip_window(self, triples):
        values, bounds, precision = triples
        out, s, qrange = self._quantize(values, bounds, precision)
        lo = -bounds if qrange.lo < 0 else np.zeros_like(bounds)
        inside = (values >= lo) & (values <= bounds)
        err = np.abs(out - values)[inside]
        assert np.all(err <= (0.5 / s[inside]) * (1 + 1e-9))

    def test_clipped_outside(self, triples):
        values, bounds, precision = triples
        out, s, qrange = self._quantize(values, bounds, precision)
        above = values > bounds
        np.testing.assert_allclose(out[above], qrange.hi / s[above], rtol=1e-12)
        below = values < (-bounds if qrange.lo < 0 else 0.0)
        np.testing.assert_allclose(out[below], qrange.lo / s[below], rtol=1e-12)

    def test_range_containment(self, triples):
        values, bounds, precision = triples
        qrange = quant_range(precision)
        q = quantize_to_int(values, compute_scales(bounds, precision), qrange, channel_axis=0)
        assert q.values.min() >= qrange.lo
        assert q.values.max() <= qrange.hi

    def test_monotone(self, precision):
        rng = np.random.default_rng(11)
        values = np.sort(rng.normal(size=SAMPLES) * 2.0)
        scales = compute_scales([1.7], precision)
        out = fake_quantize(values, scales, quant_range(precision))
        assert np.all(np.diff(out) >= 0)

    @settings(max_examples=200, deadline=None)
    @given(
        value=st.floats(-1e6, 1e6, allow_nan=False),
        bound=st.floats(1e-3, 1e3),
        bits=st.sampled_from([2, 3, 4, 8, 16]),
        signed=st.booleans(),
    )
    def test_idempotent_scalar(self, value, bound, bits, signed):
        precision = Precision.signed(bits) if signed else Precision.unsigned(bits)
        scales, qrange = _scalar_setup(bound, precision)
        once = fake_quantize(np.array([value]), scales, qrange)
        assert np.array_equal(fake_quantize(once, scales, qrange), once)


class TestBucketWidth:
    """Unsigned ranges double the resolution of signed ones"""

    @pytest.mark.parametrize("bits", [2, 4, 8])
    def test_unsigned_halves_bucket(self, bits):
        signed = bucket_width(2.0, Precision.signed(bits))
        unsigned = bucket_width(2.0, Precision.unsigned(bits))
        assert unsigned / signed == pytest.approx((2 ** (bits - 1) - 1) / (2**bits - 1))


class TestSteBackward:
    """Straight-through gradient mask"""

    def test_identity_inside(self):
        grad = ste_backward(np.array([0.3, -2.0]), np.array([0.5, -0.9]), [1.0])
        np.testing.assert_array_equal(grad, [0.3, -2.0])

    def test_zero_when_clipped(self):
        grad = ste_backward(np.array([1.0]), np.array([10.0]), [1.0])
        assert grad[0] == 0.0

    def test_mixed_mask(self):
        x = np.array([-2.0, -0.5, 0.5, 2.0])
        grad = ste_backward(np.ones(4), x, [1.0])
        np.testing.assert_array_equal(grad, (np.abs(x) <= 1.0).astype(float))

    def test_unsigned_window(self):
        x = np.array([-0.5, 0.5, 1.5])
        grad = ste_backward(np.ones(3), x, [1.0], signedness=Signedness.UNSIGNED)
        np.testing.assert_array_equal(grad, [0.0, 1.0, 0.0])

    def test_per_channel(self):
        x = np.array([[1.5, 1.5]])
        grad = ste_backward(np.ones((1, 2)), x, [1.0, 2.0])
        np.testing.assert_array_equal(grad, [[0.0, 1.0]])

    def test_shape_mismatch(self):
        with pytest.raises(QuantizationError, match="does not match"):
            ste_backward(np.ones(3), np.ones(2), [1.0])


class TestStaircase:
    """Step-by-step quantization table"""

    def test_rows_match_fake_quantize(self):
        values = [-1.5, -0.5, 0.0, 0.26, 0.5, 1.5]
        precision = Precision.signed(4)
        rows = quantization_staircase(values, 1.0, precision)
        scales, qrange = _scalar_setup(1.0, precision)
        expected = fake_quantize(np.array(values), scales, qrange)
        np.testing.assert_allclose([r.rescaled for r in rows], expected)
        assert [r.rounded for r in rows] == [-7, -4, 0, 2, 4, 7]

    def test_error_column(self):
        row = quantization_staircase([0.5], 1.0, Precision.signed(8))[0]
        assert row.scaled == pytest.approx(63.5)
        assert row.rounded == 64
        assert row.error == pytest.approx(64 / 127 - 0.5)

"""
Tests for shared numeric formats, layer shapes and the error hierarchy.
"""

import pytest

from quantpareto.core import errors
from quantpareto.core.models import (
    LayerKind,
    LayerManifest,
    LayerShape,
    Precision,
    QuantSettingPreset,
    Signedness,
)


class TestPrecision:
    """Bit width plus signedness"""

    def test_constructors(self):
        assert Precision.signed(8) == Precision(bits=8, signedness=Signedness.SIGNED)
        assert Precision.unsigned(4).signedness == Signedness.UNSIGNED
        assert Precision.full().is_full_precision

    @pytest.mark.parametrize(
        "precision, text", [(Precision.signed(8), "int8"), (Precision.unsigned(4), "uint4"), (Precision.full(), "full")]
    )
    def test_str(self, precision, text):
        assert str(precision) == text

    def test_full_precision_costs_as_sixteen_bits(self):
        assert Precision.full().cost_bits == 16
        assert Precision.signed(4).cost_bits == 4

    def test_signed_needs_two_bits(self):
        with pytest.raises(ValueError, match="at least 2 bits"):
            Precision.signed(1)
        assert Precision.unsigned(1).bits == 1

    @pytest.mark.parametrize("bits", [0, 17])
    def test_bits_range(self, bits):
        with pytest.raises(ValueError):
            Precision.signed(bits)

    def test_hashable(self):
        assert len({Precision.signed(8), Precision.signed(8), Precision.unsigned(8)}) == 2


class TestLayerShape:
    def test_conv_needs_spatial_dims(self):
        with pytest.raises(ValueError, match="kernel and output dims"):
            LayerShape(name="c", kind=LayerKind.CONV2D, c_in=3, c_out=8, precision_bits=8)

    def test_dense_rejects_spatial_dims(self):
        with pytest.raises(ValueError, match="no kernel"):
            LayerShape(name="d", kind=LayerKind.DENSE, kernel_h=1, c_in=3, c_out=8, precision_bits=8)

    def test_manifest_json(self):
        manifest = LayerManifest(
            arch="mini_resnet",
            multiplier=1.0,
            preset=QuantSettingPreset.EIGHT_BIT.value,
            input_resolution=32,
            layers=[LayerShape(name="dense", kind=LayerKind.DENSE, c_in=64, c_out=10, precision_bits=8)],
        )
        assert LayerManifest.model_validate_json(manifest.model_dump_json()) == manifest


class TestErrors:
    @pytest.mark.parametrize(
        "error",
        [
            errors.QuantizationError,
            errors.AccumulatorOverflowError,
            errors.ShapeError,
            errors.GraphError,
            errors.CostModelError,
            errors.DatasetError,
            errors.ConfigError,
            errors.TrainingDivergedError,
            errors.CalibrationError,
            errors.ParetoError,
        ],
    )
    def test_hierarchy(self, error):
        assert issubclass(error, errors.QuantParetoError)
        assert issubclass(error, ValueError)

    def test_overflow_is_a_quantization_error(self):
        assert issubclass(errors.AccumulatorOverflowError, errors.QuantizationError)

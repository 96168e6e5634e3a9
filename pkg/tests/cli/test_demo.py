"""
Tests for the quantize-demo command.
"""

import pytest
from typer.testing import CliRunner

from quantpareto.cli.demo import sample_values
from quantpareto.cli.shared import app


@pytest.fixture
def runner():
    return CliRunner()


class TestQuantizeDemo:
    def test_eight_bit_signed_half(self, runner):
        result = runner.invoke(app, ["quantize-demo", "--bits", "8", "--signed", "--value", "0.5"])
        assert result.exit_code == 0
        assert "int8 quantization, bound 1" in result.output
        assert "64" in result.output
        assert "0.503937" in result.output

    def test_sample_vector_clips(self, runner):
        result = runner.invoke(app, ["quantize-demo", "--bits", "4", "--unsigned", "--bound", "2"])
        assert result.exit_code == 0
        assert "uint4" in result.output
        assert "15" in result.output

    def test_sample_values_span_past_bound(self):
        values = sample_values(1.0, signed=True)
        assert values[0] == -1.25 and values[-1] == 1.25
        assert sample_values(1.0, signed=False)[0] == -0.25

    def test_bits_out_of_range(self, runner):
        result = runner.invoke(app, ["quantize-demo", "--bits", "1"])
        assert result.exit_code != 0

    def test_negative_bound(self, runner):
        result = runner.invoke(app, ["quantize-demo", "--bound", "-1"])
        assert result.exit_code == 2
        assert "non-negative" in result.output

"""
Tests for patch extraction and its adjoint.
"""

import numpy as np
import pytest

from quantpareto.core.errors import ShapeError
from quantpareto.engine.im2col import Padding, col2im, im2col, output_size, padding_amounts


class TestGeometry:
    """Output sizes and SAME padding"""

    @pytest.mark.parametrize(
        "size, kernel, stride, padding, expected",
        [
            (224, 7, 2, Padding.SAME, 112),
            (112, 3, 2, Padding.SAME, 56),
            (7, 3, 2, Padding.SAME, 4),
            (4, 3, 1, Padding.VALID, 2),
            (5, 3, 2, Padding.VALID, 2),
        ],
    )
    def test_output_size(self, size, kernel, stride, padding, expected):
        assert output_size(size, kernel, stride, padding) == expected

    def test_odd_padding_goes_after(self):
        assert padding_amounts(224, 7, 2, Padding.SAME) == (2, 3)
        assert padding_amounts(4, 2, 2, Padding.SAME) == (0, 0)
        assert padding_amounts(4, 3, 2, Padding.SAME) == (0, 1)

    def test_valid_window_too_large(self):
        with pytest.raises(ShapeError):
            output_size(2, 3, 1, Padding.VALID)

    def test_bad_stride(self):
        with pytest.raises(ShapeError):
            output_size(4, 3, 0, Padding.SAME)


class TestIm2col:
    """Patch matrix layout"""

    def test_patch_order_is_kh_kw_c(self):
        x = np.arange(2 * 3 * 3 * 2, dtype=np.float64).reshape(2, 3, 3, 2)
        cols = im2col(x, 2, 2, 1, Padding.VALID)
        assert cols.shape == (2 * 2 * 2, 2 * 2 * 2)
        np.testing.assert_array_equal(cols[0], x[0, 0:2, 0:2, :].reshape(-1))
        np.testing.assert_array_equal(cols[-1], x[1, 1:3, 1:3, :].reshape(-1))

    def test_col2im_is_adjoint(self):
        """<im2col(x), y> == <x, col2im(y)> for every geometry"""
        rng = np.random.default_rng(0)
        for stride, padding in [(1, Padding.SAME), (2, Padding.SAME), (2, Padding.VALID)]:
            x = rng.normal(size=(2, 6, 5, 3))
            cols = im2col(x, 3, 3, stride, padding)
            y = rng.normal(size=cols.shape)
            lhs = float((cols * y).sum())
            rhs = float((x * col2im(y, x.shape, 3, 3, stride, padding)).sum())
            assert lhs == pytest.approx(rhs, rel=1e-10)

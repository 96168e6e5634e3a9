import numpy as np
import pytest

from quantpareto.model.spec import ConvSpec, ResNetSpec


@pytest.fixture
def tiny_spec():
    """Two bottleneck blocks on 4x4 inputs; small enough for finite differences"""
    return ResNetSpec(
        name="tiny",
        block_group_sizes=[1, 1],
        base_widths=[2, 3],
        expansion=2,
        init_conv=ConvSpec(kernel=3, stride=1, width=4),
        use_max_pool=False,
        num_classes=3,
        input_resolution=4,
    )


@pytest.fixture
def tiny_batch():
    rng = np.random.default_rng(5)
    return rng.normal(size=(3, 4, 4, 3)), np.array([0, 1, 2])

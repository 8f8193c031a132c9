import numpy as np
import pytest
import torch

from frost2ffpe.errors import ConfigurationError
from frost2ffpe.models.attention import SpatialAttention


def reference_chain(x, w_query, w_key, w_value, w_out, pool):
    """Straight-line float64 re-evaluation of the attention equations."""

    def conv1x1(t, w):
        return np.einsum("nchw,oc->nohw", t, w[:, :, 0, 0])

    def maxpool(t):
        n, c, h, w = t.shape
        return t.reshape(n, c, h // pool, pool, w // pool, pool).max(axis=(3, 5))

    n, c, h, w = x.shape
    queries = conv1x1(x, w_query).reshape(n, -1, h * w).transpose(0, 2, 1)
    keys = maxpool(conv1x1(x, w_key)).reshape(n, -1, (h // pool) * (w // pool))
    relation = np.maximum(queries @ keys, 0.0)
    shifted = np.exp(relation - relation.max(axis=-1, keepdims=True))
    attention = shifted / shifted.sum(axis=-1, keepdims=True)
    values = maxpool(conv1x1(x, w_value)).reshape(n, -1, (h // pool) * (w // pool)).transpose(0, 2, 1)
    mixed = (attention @ values).transpose(0, 2, 1).reshape(n, -1, h, w)
    return conv1x1(mixed, w_out) + x


def make_block(channels=64, seed=0):
    torch.manual_seed(seed)
    block = SpatialAttention(channels)
    for p in block.parameters():
        torch.nn.init.normal_(p, std=0.2)
    return block


def test_zero_input_zero_attention_contribution():
    block = make_block()
    x = torch.zeros(1, 64, 8, 8)
    assert torch.equal(block(x), x)


def test_zero_weights_exact_identity():
    block = make_block()
    for p in block.parameters():
        torch.nn.init.zeros_(p)
    x = torch.randn(2, 64, 8, 8)
    assert torch.equal(block(x), x)


def test_softmax_rows_sum_to_one():
    block = make_block(seed=3)
    x = torch.randn(1, 64, 12, 12)
    _, tensors = block.forward_with_tensors(x)
    sums = tensors.attention.sum(dim=-1)
    assert float((sums - 1.0).abs().max()) < 1e-5


def test_matches_straight_line_reference():
    block = make_block(seed=7).double()
    x = torch.randn(1, 64, 8, 10, dtype=torch.float64)
    out = block(x).detach().numpy()
    ref = reference_chain(
        x.numpy(),
        block.query_conv.weight.detach().numpy(),
        block.key_conv.weight.detach().numpy(),
        block.value_conv.weight.detach().numpy(),
        block.out_conv.weight.detach().numpy(),
        pool=block.pool_kernel,
    )
    rel = np.abs(out - ref) / np.maximum(np.abs(ref), 1e-12)
    assert rel.max() < 1e-5


def test_output_shape_at_128():
    block = make_block(seed=1)
    with torch.no_grad():
        out = block(torch.randn(1, 64, 128, 128))
    assert tuple(out.shape) == (1, 64, 128, 128)


def test_spatial_dims_below_pool_kernel_rejected():
    block = make_block()
    with pytest.raises(ConfigurationError):
        block(torch.zeros(1, 64, 1, 1))


def test_wrong_channel_count_rejected():
    block = make_block()
    with pytest.raises(ConfigurationError):
        block(torch.zeros(1, 32, 8, 8))


def test_gradients_flow_everywhere():
    block = make_block(seed=5)
    x = torch.randn(1, 64, 6, 6, requires_grad=True)
    block(x).sum().backward()
    assert x.grad is not None
    assert torch.isfinite(x.grad).all()
    for p in block.parameters():
        assert p.grad is not None and torch.isfinite(p.grad).all()

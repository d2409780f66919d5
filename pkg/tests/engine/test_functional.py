import numpy as np
import pytest

from hana_jscc.engine import (
    AttentionWeights,
    Tensor,
    elementwise,
    layer_norm,
    log_softmax,
    matmul,
    multi_head_attention,
    softmax,
)
from hana_jscc.errors import ConfigurationError, NumericDomainError


def test_matmul_identity():
    m = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))

    out = matmul(Tensor(np.eye(2)), m)

    assert np.array_equal(out.data, m.data)


def test_matmul_by_hand():
    out = matmul(Tensor(np.array([[1.0, 2.0]])), Tensor(np.array([[3.0], [4.0]])))

    assert out.data.tolist() == [[11.0]]


def test_relu():
    out = elementwise("relu", Tensor(np.array([-1.0, 0.0, 2.0])))

    assert out.data.tolist() == [0.0, 0.0, 2.0]


def test_add_zero_is_identity():
    x = Tensor(np.array([1.5, -2.0]))

    assert np.array_equal(elementwise("add", x, 0.0).data, x.data)


def test_scale_needs_factor():
    with pytest.raises(ConfigurationError):
        elementwise("scale", Tensor(np.ones(2)))


def test_log_domain():
    with pytest.raises(NumericDomainError):
        elementwise("log", Tensor(np.array([1.0, 0.0])))


def test_exp_overflow():
    with pytest.raises(NumericDomainError):
        elementwise("exp", Tensor(np.array([1000.0])))


def test_softmax_symmetric():
    assert np.allclose(softmax(Tensor(np.zeros(2))).data, [0.5, 0.5])


def test_softmax_is_stable():
    out = softmax(Tensor(np.array([1000.0, 1000.0]))).data

    assert np.all(np.isfinite(out))
    assert np.allclose(out, [0.5, 0.5])


def test_softmax_matches_direct_formula():
    values = np.array([1.0, 2.0, 3.0])

    expected = np.exp(values) / np.sum(np.exp(values))

    assert np.allclose(softmax(Tensor(values)).data, expected, rtol=0, atol=1e-15)


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(3)
    out = softmax(Tensor(rng.standard_normal((5, 7)) * 10.0), axis=-1).data

    assert np.allclose(out.sum(axis=-1), 1.0, rtol=0, atol=1e-12)
    assert np.all(out > 0)


def test_log_softmax_matches_log_of_softmax():
    x = Tensor(np.array([[0.5, -1.0, 2.0]]))

    assert np.allclose(log_softmax(x).data, np.log(softmax(x).data))


def test_layer_norm_constant_row_is_zero():
    out = layer_norm(Tensor(np.full((1, 4), 3.0)), Tensor(np.ones(4)), Tensor(np.zeros(4)))

    assert np.allclose(out.data, 0.0)


def test_layer_norm_two_points():
    out = layer_norm(Tensor(np.array([[1.0, 3.0]])), Tensor(np.ones(2)), Tensor(np.zeros(2)))

    assert np.allclose(out.data, [[-1.0, 1.0]], atol=1e-5)


def test_layer_norm_rejects_non_positive_eps():
    with pytest.raises(ConfigurationError):
        layer_norm(Tensor(np.ones((1, 2))), Tensor(np.ones(2)), Tensor(np.zeros(2)), eps=0.0)


def _attention_weights(rng, width):
    return AttentionWeights(*(Tensor(rng.standard_normal((width, width))) for _ in range(4)))


def test_attention_single_token_returns_value_projection():
    rng = np.random.default_rng(0)
    weights = _attention_weights(rng, 8)
    token = Tensor(rng.standard_normal((1, 8)))

    out = multi_head_attention(token, token, token, 2, weights)

    expected = token.data @ weights.w_v.data @ weights.w_o.data
    assert np.allclose(out.data, expected)


def test_attention_identical_tokens_give_identical_rows():
    rng = np.random.default_rng(1)
    weights = _attention_weights(rng, 8)
    tokens = Tensor(np.tile(rng.standard_normal((1, 8)), (3, 1)))

    out = multi_head_attention(tokens, tokens, tokens, 2, weights).data

    assert np.allclose(out[0], out[1])
    assert np.allclose(out[1], out[2])


def test_attention_heads_must_divide_width():
    rng = np.random.default_rng(2)
    tokens = Tensor(rng.standard_normal((3, 8)))

    with pytest.raises(ConfigurationError):
        multi_head_attention(tokens, tokens, tokens, 3, _attention_weights(rng, 8))

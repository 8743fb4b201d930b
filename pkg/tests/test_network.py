import numpy as np
import pytest

from spkmargin.core.errors import UsageError
from spkmargin.domain import NetworkConfig
from spkmargin.network import (
    BatchNorm,
    InputTooShortError,
    Mode,
    StatsPool,
    TdnnLayer,
    XVectorNet,
    parameter_count,
)
from spkmargin.numeric import Rng
from spkmargin.utils import layers_to_df
from tests.gradcheck import assert_gradients_close, numeric_gradient, sample_indices

TINY = NetworkConfig(
    feat_dim=3,
    frame_widths=(4, 5),
    frame_contexts=((-1, 0, 1), (0, 2)),
    segment_widths=(4, 3),
)


def _shift_away_from_kinks(net: XVectorNet) -> None:
    for layer in (*net.frame_layers, *net.segment_layers):
        layer.bias.value += 0.05


def test_hand_computed_tdnn_output() -> None:
    layer = TdnnLayer("frame1", 1, 3, (-1, 0, 1), rng=Rng(0), has_batchnorm=False)
    layer.weight.value = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    layer.bias.value = np.array([0.5, -2.5, 0.0])
    x = np.arange(1.0, 6.0).reshape(1, 5, 1)
    out, _ = layer.forward(x, Mode.TRAIN)
    assert np.array_equal(out[0], [[0.0, 0.0, 4.0], [0.0, 0.5, 6.0], [0.0, 1.5, 8.0]])


def test_context_table_matches_xvector_layout() -> None:
    specs = XVectorNet(NetworkConfig(), Rng(0)).describe()
    assert [s.total_context for s in specs[:5]] == [5, 9, 15, 15, 15]
    assert [s.context for s in specs[:5]] == [(-2, -1, 0, 1, 2), (-2, 0, 2), (-3, 0, 3), (0,), (0,)]
    assert NetworkConfig().receptive_field == 15


def test_full_scale_shapes() -> None:
    cfg = NetworkConfig.full_scale(feat_dim=30)
    net = XVectorNet(cfg, Rng(0))
    df = layers_to_df(net.describe())
    assert df["input_x_output"].tolist() == [
        "150x512",
        "1536x512",
        "1536x512",
        "512x512",
        "512x1500",
        "1500x3000",
        "3000x512",
        "512x512",
    ]
    assert net.embedding_dim == 512
    assert parameter_count(cfg) == sum(p.value.size for p in net.parameters()) == 4_491_668


def test_parameter_count_includes_projection() -> None:
    assert parameter_count(TINY, 7) == parameter_count(TINY) + 3 * 7
    assert parameter_count(TINY, 7, with_bias=True) == parameter_count(TINY) + 3 * 7 + 7


def test_desk_shapes() -> None:
    net = XVectorNet(NetworkConfig(), Rng(1))
    frames = Rng(2).normal((200, 30))
    out, cache = net.forward(frames)
    assert out.shape == (1, 64)
    assert cache.pool[1].shape == (1, 128)
    assert net.describe()[5].out_dim == 256
    assert net.extract_embedding(frames).shape == (64,)


def test_constant_frames_give_sqrt_eps_std() -> None:
    pool = StatsPool(eps=1e-10)
    pooled, _ = pool.forward(np.full((1, 10, 4), 2.0))
    assert np.array_equal(pooled[0, :4], [2.0] * 4)
    assert np.array_equal(pooled[0, 4:], [np.sqrt(1e-10)] * 4)


def test_stats_pool_is_order_free() -> None:
    x = Rng(3).normal((1, 30, 6))
    shuffled = x[:, Rng(4).permutation(30), :]
    a, _ = StatsPool().forward(x)
    b, _ = StatsPool().forward(shuffled)
    assert np.max(np.abs(a - b)) < 1e-9


def test_short_input_names_minimum() -> None:
    net = XVectorNet(NetworkConfig(), Rng(0))
    with pytest.raises(InputTooShortError, match="at least 15"):
        net.forward(np.zeros((14, 30)))


def test_backward_needs_matching_training_cache() -> None:
    net = XVectorNet(TINY, Rng(0))
    x = Rng(1).normal((2, 10, 3))
    with pytest.raises(UsageError):
        net.backward(None, np.zeros((2, 3)))
    _, eval_cache = net.forward(x, Mode.EVAL)
    with pytest.raises(UsageError, match="training-mode"):
        net.backward(eval_cache, np.zeros((2, 3)))
    _, old = net.forward(x)
    net.forward(x)
    with pytest.raises(UsageError, match="stale"):
        net.backward(old, np.zeros((2, 3)))


def test_zero_output_gradient_gives_zero_parameter_gradients() -> None:
    net = XVectorNet(TINY, Rng(5))
    _, cache = net.forward(Rng(6).normal((3, 9, 3)))
    net.backward(cache, np.zeros((3, 3)))
    assert all(not np.any(p.grad) for p in net.parameters())


def test_dead_relu_unit_has_zero_incoming_gradient() -> None:
    net = XVectorNet(TINY, Rng(7))
    net.frame_layers[0].bias.value[2] = -1e6
    _, cache = net.forward(Rng(8).normal((3, 9, 3)))
    net.backward(cache, Rng(9).normal((3, 3)))
    assert not np.any(net.frame_layers[0].weight.grad[:, 2])
    assert net.frame_layers[0].bias.grad[2] == 0.0


def test_network_gradients_match_finite_differences() -> None:
    net = XVectorNet(TINY, Rng(10))
    _shift_away_from_kinks(net)
    x = Rng(11).normal((3, 9, 3))
    probe = Rng(12).normal((3, 3))

    def loss() -> float:
        out, _ = net.forward(x)
        return float(np.sum(out * probe))

    _, cache = net.forward(x)
    dx = net.backward(cache, probe)
    analytic = {p.name: p.grad.copy() for p in net.parameters()}
    for seed, param in enumerate(net.parameters()):
        indices = sample_indices(param.shape, 6, seed)
        numeric = numeric_gradient(loss, param.value, indices)
        assert_gradients_close(np.array([analytic[param.name][i] for i in indices]), numeric)
    indices = sample_indices(x.shape, 10, 99)
    assert_gradients_close(np.array([dx[i] for i in indices]), numeric_gradient(loss, x, indices))


@pytest.mark.parametrize("seed", range(5))
def test_tdnn_layer_gradients(seed: int) -> None:
    rng = Rng(seed)
    layer = TdnnLayer("frame1", 2, 3, (-2, 0, 1), rng=rng, has_batchnorm=False)
    layer.bias.value += 0.05
    x = rng.normal((2, 8, 2))
    probe = rng.normal((2, 5, 3))

    def loss() -> float:
        return float(np.sum(layer.forward(x, Mode.TRAIN)[0] * probe))

    out, cache = layer.forward(x, Mode.TRAIN)
    dx = layer.backward(probe, cache)
    weight_grad = layer.weight.grad.copy()
    indices = sample_indices(layer.weight.shape, 8, seed)
    assert_gradients_close(np.array([weight_grad[i] for i in indices]), numeric_gradient(loss, layer.weight.value, indices))
    indices = sample_indices(x.shape, 8, seed + 1)
    assert_gradients_close(np.array([dx[i] for i in indices]), numeric_gradient(loss, x, indices))


@pytest.mark.parametrize("seed", range(5))
def test_batchnorm_gradients(seed: int) -> None:
    rng = Rng(seed)
    bn = BatchNorm("bn", 4)
    bn.gamma.value = rng.normal(4) + 1.0
    x = rng.normal((6, 4)) * 2.0
    probe = rng.normal((6, 4))

    def loss() -> float:
        return float(np.sum(bn.forward(x, Mode.TRAIN)[0] * probe))

    _, cache = bn.forward(x, Mode.TRAIN)
    dx = bn.backward(probe, cache)
    gamma_grad = bn.gamma.grad.copy()
    indices = [(i,) for i in range(4)]
    assert_gradients_close(gamma_grad, numeric_gradient(loss, bn.gamma.value, indices))
    indices = sample_indices(x.shape, 10, seed)
    assert_gradients_close(np.array([dx[i] for i in indices]), numeric_gradient(loss, x, indices))


def test_stats_pool_gradients() -> None:
    pool = StatsPool()
    x = Rng(20).normal((2, 7, 3))
    probe = Rng(21).normal((2, 6))

    def loss() -> float:
        return float(np.sum(pool.forward(x)[0] * probe))

    _, cache = pool.forward(x)
    dx = pool.backward(probe, cache)
    indices = sample_indices(x.shape, 12, 3)
    assert_gradients_close(np.array([dx[i] for i in indices]), numeric_gradient(loss, x, indices))


def test_batchnorm_eval_uses_running_statistics() -> None:
    bn = BatchNorm("bn", 3, momentum=1.0)
    x = Rng(30).normal((50, 3)) * 3.0 + 1.0
    bn.forward(x, Mode.TRAIN)
    assert np.allclose(bn.running_var, x.var(axis=0, ddof=1))
    assert np.all(bn.running_var >= 0)
    single, _ = bn.forward(x[:1], Mode.EVAL)
    batch, _ = bn.forward(x, Mode.EVAL)
    assert np.allclose(single[0], batch[0], rtol=0, atol=1e-12)


def test_embeddings_are_deterministic_and_batch_independent() -> None:
    net = XVectorNet(NetworkConfig(), Rng(40))
    net.forward(Rng(41).normal((4, 60, 30)))
    a, b = Rng(42).normal((60, 30)), Rng(43).normal((60, 30))
    first = net.extract_embedding(a)
    assert np.array_equal(first, net.extract_embedding(a))
    batched = net.embed(np.stack([a, b]))
    assert np.allclose(batched[0], first, rtol=0, atol=1e-12)
    assert not np.allclose(net.extract_embedding(a[:45]), first)

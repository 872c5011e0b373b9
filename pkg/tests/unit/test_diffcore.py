import numpy as np
import pytest

from src.core.exceptions import (
    DimensionMismatchException,
    NonFiniteValueException,
    ValidationException,
)
from src.diffcore import (
    AdamState,
    LSTMCellParams,
    ParamLeaf,
    Tensor,
    absolute,
    adam_step,
    batch_norm_seq,
    concat,
    conv2d,
    grad_check,
    leaky_relu,
    linear,
    lstm_cell,
    resample2d,
    sigmoid,
    square,
    stack,
    tanh,
    upsample_nearest,
    zero_grads,
)
from src.domain.models import LossWeights, ModelConfig, PyramidSpec
from src.losses.features import FixedFeatureExtractor
from src.losses.objectives import final_loss
from src.model.vdp import VideoDynamicsPrior

pytestmark = pytest.mark.unit

TOLERANCE = 1e-4


def leaf(rng: np.random.Generator, shape: tuple[int, ...], name: str) -> ParamLeaf:
    return ParamLeaf(rng.normal(size=shape), name=name)


def weighted(out: Tensor, rng_seed: int = 99) -> Tensor:
    """Soma ponderada fixa: evita simetrias que escondem gradientes errados."""
    weights = np.random.default_rng(rng_seed).normal(size=out.shape)
    return (out * weights).sum()


class TestTensorBasics:
    def test_backward_accumulates_on_shared_leaf(self):
        x = ParamLeaf([2.0, -1.0], name="x")
        (x * x + x).sum().backward()
        np.testing.assert_allclose(x.grad, [5.0, -1.0])

    def test_broadcast_gradient_is_reduced(self):
        x = ParamLeaf(np.ones((3, 4)), name="x")
        b = ParamLeaf(np.ones(4), name="b")
        (x + b).sum().backward()
        np.testing.assert_allclose(b.grad, np.full(4, 3.0))

    def test_incompatible_shapes_raise(self):
        with pytest.raises(DimensionMismatchException):
            Tensor(np.ones(3)) + Tensor(np.ones(4))

    def test_nonscalar_backward_requires_grad_argument(self):
        x = ParamLeaf(np.ones(3), name="x")
        with pytest.raises(DimensionMismatchException):
            (x * 2.0).backward()

    def test_detach_cuts_history(self):
        x = ParamLeaf(np.ones(2), name="x")
        y = (x * 3.0).detach()
        assert not y.requires_grad
        assert y.is_leaf

    def test_default_dtype_is_float32(self):
        assert Tensor([1, 2, 3]).dtype == np.float32


class TestGradients:
    def test_elementwise_ops(self, rng):
        x = leaf(rng, (3, 4), "x")
        y = ParamLeaf(rng.uniform(0.5, 1.5, size=(3, 4)), name="y")
        for fn in (
            lambda: weighted(x * y - x / y),
            lambda: weighted(square(x) + absolute(x)),
            lambda: weighted(tanh(x) * sigmoid(y)),
            lambda: weighted(leaky_relu(x)),
        ):
            assert grad_check(fn, [x, y]) <= TOLERANCE

    def test_structural_ops(self, rng):
        a = leaf(rng, (2, 3), "a")
        b = leaf(rng, (2, 3), "b")

        def fn() -> Tensor:
            joined = concat([a, b], axis=1)
            stacked = stack([a, b], axis=0)
            return weighted(joined[:, 1:5].reshape(4, 2)) + weighted(stacked.mean(axis=1), 3)

        assert grad_check(fn, [a, b]) <= TOLERANCE

    def test_linear(self, rng):
        x = leaf(rng, (5, 4), "x")
        w = leaf(rng, (3, 4), "w")
        bias = leaf(rng, (3,), "bias")
        assert grad_check(lambda: weighted(linear(x, w, bias)), [x, w, bias]) <= TOLERANCE

    @pytest.mark.parametrize("stride,padding", [(1, 1), (2, 1), (1, 0)])
    def test_conv2d(self, rng, stride, padding):
        x = leaf(rng, (2, 3, 6, 6), "x")
        w = leaf(rng, (4, 3, 3, 3), "w")
        bias = leaf(rng, (4,), "bias")
        fn = lambda: weighted(conv2d(x, w, bias, stride=stride, padding=padding))  # noqa: E731
        assert grad_check(fn, [x, w, bias]) <= TOLERANCE

    def test_upsample_and_resample(self, rng):
        x = leaf(rng, (2, 4, 4), "x")
        rows = rng.normal(size=(2, 8))
        cols = rng.normal(size=(3, 8))

        def fn() -> Tensor:
            return weighted(resample2d(upsample_nearest(x, 2), rows, cols))

        assert grad_check(fn, [x]) <= TOLERANCE

    @pytest.mark.parametrize("instance", [False, True])
    def test_batch_norm(self, rng, instance):
        x = leaf(rng, (3, 2, 4, 4), "x")
        gamma = ParamLeaf(rng.uniform(0.5, 1.5, size=2), name="gamma")
        beta = leaf(rng, (2,), "beta")
        fn = lambda: weighted(batch_norm_seq(x, gamma, beta, instance=instance))  # noqa: E731
        assert grad_check(fn, [x, gamma, beta], probe_count=12) <= TOLERANCE

    def test_lstm_cell(self, rng):
        hidden, inputs = 3, 4
        params = LSTMCellParams(
            weight_ih=leaf(rng, (4 * hidden, inputs), "w_ih"),
            weight_hh=leaf(rng, (4 * hidden, hidden), "w_hh"),
            bias=leaf(rng, (4 * hidden,), "bias"),
        )
        x = leaf(rng, (inputs,), "x")
        h = leaf(rng, (hidden,), "h")
        c = leaf(rng, (hidden,), "c")

        def fn() -> Tensor:
            h_next, c_next = lstm_cell(x, h, c, params)
            return weighted(h_next) + weighted(c_next, 5)

        leaves = [x, h, c, params.weight_ih, params.weight_hh, params.bias]
        assert grad_check(fn, leaves) <= TOLERANCE

    def test_composed_final_loss_through_model(self):
        """LFPNet de 1 camada + FDNet de 2 blocos em quadros 8×8×3."""
        config = ModelConfig(
            latent_dim=6,
            hidden_size=5,
            lstm_layers=1,
            decoder_blocks=2,
            base_channels=4,
            min_channels=2,
            channels=3,
            height=8,
            width=8,
        )
        model = VideoDynamicsPrior(config)
        target = np.random.default_rng(3).uniform(size=(3, 3, 8, 8)).astype(np.float32)
        extractor = FixedFeatureExtractor(channels=3)
        weights = LossWeights(rec=1.0, spl=0.5, var=0.1)
        spec = PyramidSpec(factors=(2, 4))

        def fn() -> Tensor:
            frames, _ = model.reconstruct(3)
            return final_loss(target, frames, weights, extractor, spec)

        assert grad_check(fn, model.parameters(), probe_count=4) <= TOLERANCE


class TestAdam:
    def test_converges_on_quadratic(self):
        x = ParamLeaf([0.0, 10.0], name="x")
        state = AdamState(learning_rate=0.02)
        target = np.array([3.0, -2.0])
        for _ in range(3000):
            zero_grads([x])
            loss = square(x - target).sum()
            loss.backward()
            adam_step([x], state)
        np.testing.assert_allclose(x.data, target, atol=0.05)
        assert state.step == 3000

    def test_first_step_moves_by_learning_rate(self):
        x = ParamLeaf([1.0], name="x")
        state = AdamState(learning_rate=0.1)
        (x * 4.0).sum().backward()
        adam_step([x], state)
        # com correção de viés, o primeiro passo tem módulo lr
        np.testing.assert_allclose(x.data, [0.9], atol=1e-6)

    def test_non_finite_gradient_names_leaf(self):
        x = ParamLeaf([1.0], name="lfpnet.input.weight")
        x.grad = np.array([np.nan], dtype=np.float32)
        with pytest.raises(NonFiniteValueException) as exc_info:
            adam_step([x], AdamState())
        assert exc_info.value.details["leaf"] == "lfpnet.input.weight"

    def test_invalid_learning_rate(self):
        with pytest.raises(ValidationException):
            AdamState(learning_rate=0.0)


def naive_conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, padding: int):
    batch, _, height, width = x.shape
    c_out, _, k, _ = w.shape
    padded = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    out_h = (height + 2 * padding - k) // stride + 1
    out_w = (width + 2 * padding - k) // stride + 1
    out = np.zeros((batch, c_out, out_h, out_w))
    for n in range(batch):
        for o in range(c_out):
            for i in range(out_h):
                for j in range(out_w):
                    window = padded[n, :, i * stride : i * stride + k, j * stride : j * stride + k]
                    out[n, o, i, j] = np.sum(window * w[o]) + b[o]
    return out


class TestForwardValues:
    def test_conv2d_box_sum(self):
        x = Tensor(np.ones((1, 1, 3, 3)))
        out = conv2d(x, Tensor(np.ones((1, 1, 3, 3))), Tensor(np.zeros(1)), padding=1)
        expected = np.array([[4.0, 6.0, 4.0], [6.0, 9.0, 6.0], [4.0, 6.0, 4.0]])
        np.testing.assert_allclose(out.data[0, 0], expected)

    def test_conv2d_identity_kernel(self, rng):
        x = Tensor(rng.normal(size=(2, 3, 5, 5)))
        kernel = np.zeros((3, 3, 3, 3))
        for channel in range(3):
            kernel[channel, channel, 1, 1] = 1.0
        out = conv2d(x, Tensor(kernel), Tensor(np.zeros(3)), padding=1)
        np.testing.assert_allclose(out.data, x.data, atol=1e-6)

    @pytest.mark.parametrize("stride,padding", [(1, 1), (2, 1), (1, 0)])
    def test_conv2d_matches_loop(self, rng, stride, padding):
        x = rng.normal(size=(2, 3, 6, 5))
        w = rng.normal(size=(4, 3, 3, 3))
        b = rng.normal(size=4)
        out = conv2d(Tensor(x), Tensor(w), Tensor(b), stride=stride, padding=padding)
        np.testing.assert_allclose(out.data, naive_conv2d(x, w, b, stride, padding), atol=1e-4)

    def test_conv2d_unbatched_input(self, rng):
        x = rng.normal(size=(3, 4, 4))
        w = rng.normal(size=(2, 3, 3, 3))
        b = np.zeros(2)
        out = conv2d(Tensor(x), Tensor(w), Tensor(b), padding=1)
        assert out.shape == (2, 4, 4)
        np.testing.assert_allclose(out.data, naive_conv2d(x[None], w, b, 1, 1)[0], atol=1e-4)

    def test_lstm_zero_weights(self):
        hidden = 3
        params = LSTMCellParams(
            weight_ih=ParamLeaf(np.zeros((4 * hidden, 2)), name="w_ih"),
            weight_hh=ParamLeaf(np.zeros((4 * hidden, hidden)), name="w_hh"),
            bias=ParamLeaf(np.zeros(4 * hidden), name="bias"),
        )
        c = np.array([1.0, -2.0, 0.5])
        h_next, c_next = lstm_cell(
            Tensor(np.ones(2)), Tensor(np.zeros(hidden)), Tensor(c), params
        )
        # todas as portas em σ(0) = 0.5 e candidato tanh(0) = 0
        np.testing.assert_allclose(c_next.data, 0.5 * c, atol=1e-6)
        np.testing.assert_allclose(h_next.data, 0.5 * np.tanh(0.5 * c), atol=1e-6)

    def test_lstm_saturated_forget_gate_keeps_cell(self):
        hidden = 3
        bias = np.zeros(4 * hidden)
        bias[hidden : 2 * hidden] = 20.0
        params = LSTMCellParams(
            weight_ih=ParamLeaf(np.zeros((4 * hidden, 2)), name="w_ih"),
            weight_hh=ParamLeaf(np.zeros((4 * hidden, hidden)), name="w_hh"),
            bias=ParamLeaf(bias, name="bias"),
        )
        c = np.array([1.0, -2.0, 0.5])
        _, c_next = lstm_cell(Tensor(np.ones(2)), Tensor(np.zeros(hidden)), Tensor(c), params)
        np.testing.assert_allclose(c_next.data, c, atol=1e-6)

    def test_batch_norm_output_moments(self, rng):
        x = Tensor(rng.normal(3.0, 2.0, size=(4, 2, 8, 8)))
        gamma = Tensor(np.array([2.0, 0.5]))
        beta = Tensor(np.array([-1.0, 0.25]))
        out = batch_norm_seq(x, gamma, beta).data.astype(np.float64)
        np.testing.assert_allclose(out.mean(axis=(0, 2, 3)), beta.data, atol=1e-4)
        np.testing.assert_allclose(out.std(axis=(0, 2, 3)), gamma.data, atol=1e-4)

    def test_batch_norm_zero_gamma_returns_beta(self, rng):
        x = Tensor(rng.normal(size=(3, 2, 4, 4)))
        beta = Tensor(np.array([0.3, -0.7]))
        out = batch_norm_seq(x, Tensor(np.zeros(2)), beta)
        np.testing.assert_allclose(out.data, np.broadcast_to(beta.data.reshape(1, 2, 1, 1), x.shape))

    def test_batch_norm_constant_input(self):
        x = Tensor(np.full((3, 2, 4, 4), 5.0))
        out = batch_norm_seq(x, Tensor(np.ones(2)), Tensor(np.zeros(2)))
        np.testing.assert_allclose(out.data, 0.0, atol=1e-6)

    def test_batch_norm_single_frame_uses_instance_statistics(self, rng):
        x = Tensor(rng.normal(size=(1, 2, 4, 4)))
        gamma = Tensor(np.array([1.5, 0.5]))
        beta = Tensor(np.array([0.1, -0.1]))
        np.testing.assert_allclose(
            batch_norm_seq(x, gamma, beta).data,
            batch_norm_seq(x, gamma, beta, instance=True).data,
        )

    def test_activations(self):
        np.testing.assert_allclose(leaky_relu(Tensor([-1.0, 2.0])).data, [-0.2, 2.0], atol=1e-7)
        np.testing.assert_allclose(sigmoid(Tensor([0.0])).data, [0.5])

    def test_linear_identity_and_zero_weight(self, rng):
        x = Tensor(rng.normal(size=(2, 4)))
        np.testing.assert_allclose(linear(x, Tensor(np.eye(4))).data, x.data)
        bias = Tensor(np.array([1.0, -2.0, 3.0]))
        out = linear(x, Tensor(np.zeros((3, 4))), bias)
        np.testing.assert_allclose(out.data, np.broadcast_to(bias.data, (2, 3)))


class TestAdamValues:
    def test_zero_gradient_is_noop(self):
        x = ParamLeaf([1.0, -3.0], name="x")
        x.zero_grad()
        state = AdamState(learning_rate=0.1)
        adam_step([x], state)
        np.testing.assert_array_equal(x.data, [1.0, -3.0])
        assert state.step == 1

    def test_unit_gradient_first_step(self):
        x = ParamLeaf([0.0], name="x")
        x.grad = np.ones(1, dtype=np.float32)
        adam_step([x], AdamState(learning_rate=0.1))
        np.testing.assert_allclose(x.data, [-0.1], atol=1e-6)

    def test_trajectory_matches_scalar_reference(self):
        lr, beta1, beta2, eps = 0.1, 0.9, 0.999, 1e-8
        x = ParamLeaf([1.0], name="w", dtype=np.float64)
        state = AdamState(learning_rate=lr)

        w, m, v = 1.0, 0.0, 0.0
        for t in range(1, 11):
            # minimiza w²
            x.grad = 2.0 * x.data
            adam_step([x], state)

            g = 2.0 * w
            m = beta1 * m + (1 - beta1) * g
            v = beta2 * v + (1 - beta2) * g * g
            w -= lr * (m / (1 - beta1**t)) / (np.sqrt(v / (1 - beta2**t)) + eps)
            np.testing.assert_allclose(x.data, [w], atol=1e-6)
        assert state.step == 10

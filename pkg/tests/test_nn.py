import numpy as np
import pytest

from grace.config import OptimizerRule
from grace.errors import InputError, NumericalError, ParameterError
from grace.nn.activations import Activation, elu, elu_grad, sigmoid
from grace.nn.gradcheck import grad_check
from grace.nn.layers import DenseLayer, dropout_mask
from grace.nn.losses import bce_loss, mse_loss
from grace.nn.optim import OptimizerState, optimizer_step


def test_elu_values():
    np.testing.assert_allclose(elu([-1.0, 0.0, 2.0]), [np.expm1(-1.0), 0.0, 2.0])
    np.testing.assert_allclose(elu_grad([-1.0, 2.0]), [np.exp(-1.0), 1.0])


def test_elu_grad_matches_finite_differences():
    x = np.array([-2.0, -0.5, 0.5, 2.0])
    h = 1e-6
    numeric = (elu(x + h) - elu(x - h)) / (2 * h)
    np.testing.assert_allclose(elu_grad(x), numeric, atol=1e-8)


def test_sigmoid_is_stable():
    values = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    np.testing.assert_allclose(values, [0.0, 0.5, 1.0])
    assert np.all(np.isfinite(values))


def test_dropout_mask_eval_mode_is_ones_and_draws_nothing():
    rng = np.random.default_rng(0)
    state = rng.bit_generator.state
    np.testing.assert_array_equal(dropout_mask((3, 4), 0.5, rng, training=False), np.ones((3, 4)))
    assert rng.bit_generator.state == state


def test_dropout_mask_is_inverted():
    mask = dropout_mask((200, 50), 0.5, np.random.default_rng(1))
    assert set(np.unique(mask)) <= {0.0, 2.0}
    assert mask.mean() == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("rate", [-0.1, 1.0])
def test_dropout_rate_range(rate):
    with pytest.raises(ParameterError):
        dropout_mask((2, 2), rate, np.random.default_rng(0))


def test_dense_layer_gradients_match_finite_differences():
    rng = np.random.default_rng(2)
    layer = DenseLayer.initialize(5, 3, Activation.ELU, rng)
    X = rng.normal(size=(4, 5))
    mask = dropout_mask(X.shape, 0.3, rng)
    upstream = rng.normal(size=(4, 3))

    def loss(params):
        return float(np.sum(upstream * layer.forward(X, mask)))

    layer.forward(X, mask)
    grads = layer.backward(upstream)
    params = {"weight": layer.weight, "bias": layer.bias}
    assert grad_check(loss, params, {"weight": grads.weight, "bias": grads.bias}) < 1e-5


def test_layer_rejects_bad_shapes():
    layer = DenseLayer(np.ones((2, 3)), np.zeros(2))
    with pytest.raises(InputError):
        layer.forward(np.ones((4, 2)))
    with pytest.raises(InputError):
        layer.backward(np.ones((4, 2)))


def test_check_finite_names_layer():
    layer = DenseLayer(np.array([[np.nan]]), np.zeros(1))
    with pytest.raises(NumericalError, match="encoder.0"):
        layer.check_finite("encoder.0")


def test_bce_loss_and_gradient():
    target = np.array([[1.0, 0.0]])
    loss, grad = bce_loss(target, np.zeros((1, 2)))
    assert loss == pytest.approx(2 * np.log(2.0))
    np.testing.assert_allclose(grad, [[-0.5, 0.5]])
    with pytest.raises(InputError):
        bce_loss(np.array([[0.5]]), np.zeros((1, 1)))


def test_bce_large_logits_stay_finite():
    loss, grad = bce_loss(np.array([[1.0, 0.0]]), np.array([[800.0, -800.0]]))
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.isfinite(grad))


def test_mse_loss():
    loss, grad = mse_loss(np.zeros((2, 2)), np.ones((2, 2)))
    assert loss == pytest.approx(1.0)
    np.testing.assert_allclose(grad, 0.5 * np.ones((2, 2)))


def test_accumulated_gradient_first_step():
    param = np.array([1.0, -2.0])
    state = OptimizerState(rule=OptimizerRule.ACCUMULATED, rho=0.1)
    optimizer_step(state, {"w": param}, {"w": np.array([3.0, -0.5])})
    # First step moves each coordinate by about rho against the gradient sign
    np.testing.assert_allclose(param, [0.9, -1.9], atol=1e-6)
    optimizer_step(state, {"w": param}, {"w": np.array([3.0, -0.5])})
    np.testing.assert_allclose(param, [0.9 - 0.1 / np.sqrt(2), -1.9 + 0.1 / np.sqrt(2)], atol=1e-6)


def test_adam_first_step():
    param = np.array([1.0])
    state = OptimizerState(rule=OptimizerRule.ADAM, rho=0.01)
    optimizer_step(state, {"w": param}, {"w": np.array([4.0])})
    np.testing.assert_allclose(param, [0.99], atol=1e-6)
    assert state.t == 1


def test_optimizer_validation():
    with pytest.raises(ParameterError):
        OptimizerState(rule="adam", rho=0.0)
    state = OptimizerState(rule="accumulated", rho=0.1)
    with pytest.raises(InputError):
        optimizer_step(state, {"w": np.zeros(2)}, {"v": np.zeros(2)})


def test_grad_check_detects_wrong_gradient():
    param = np.array([1.0, 2.0])

    def loss(params):
        return float(np.sum(params["w"] ** 2))

    assert grad_check(loss, {"w": param}, {"w": 2 * param}) < 1e-8
    assert grad_check(loss, {"w": param}, {"w": -2 * param}) > 1.0
    np.testing.assert_array_equal(param, [1.0, 2.0])


def test_grad_check_flags_slightly_scaled_gradient():
    rng = np.random.default_rng(3)
    param = rng.normal(size=6)

    def loss(params):
        return float(np.sum(np.sin(params["w"]) + params["w"] ** 2))

    exact = np.cos(param) + 2 * param
    assert grad_check(loss, {"w": param}, {"w": exact}) < 1e-8
    error = grad_check(loss, {"w": param}, {"w": 1.01 * exact})
    assert error > 1e-5
    assert error == pytest.approx(0.01 / 1.01, rel=1e-3)


@pytest.mark.parametrize("rule", [OptimizerRule.ACCUMULATED, OptimizerRule.ADAM])
def test_zero_gradient_leaves_parameters(rule):
    param = np.array([[0.5, -1.5], [2.0, 0.0]])
    before = param.copy()
    state = OptimizerState(rule=rule, rho=0.1)
    for _ in range(3):
        optimizer_step(state, {"w": param}, {"w": np.zeros_like(param)})
    np.testing.assert_array_equal(param, before)

"""
Unit tests for the Adam and SGD updates.
"""

from dataclasses import replace

import numpy as np
import pytest

from actbench.core.optim import OptimizerKind, create_optimizer, optimizer_step
from actbench.utils.error_handling import DivergenceError, ShapeMismatchError, ValidationError


class TestSGD:
    """Plain gradient descent."""

    def test_single_step(self):
        """theta - lr * g: 1 - 0.1 * 2 = 0.8."""
        params = [np.array([1.0])]
        state = create_optimizer(OptimizerKind.SGD, params, learning_rate=0.1)
        new_params, new_state = optimizer_step(state, params, [np.array([2.0])])
        assert new_params[0][0] == pytest.approx(0.8)
        assert new_state.step_count == 1

    def test_step_is_pure(self):
        """Inputs and the old state are left untouched."""
        params = [np.array([1.0, 2.0])]
        state = create_optimizer("sgd", params)
        optimizer_step(state, params, [np.array([1.0, 1.0])])
        np.testing.assert_array_equal(params[0], [1.0, 2.0])
        assert state.step_count == 0

    def test_default_learning_rate(self):
        assert create_optimizer(OptimizerKind.SGD, []).learning_rate == 0.01

    def test_keeps_parameter_dtype(self):
        params = [np.ones(3, dtype=np.float32)]
        state = create_optimizer(OptimizerKind.SGD, params)
        new_params, _ = optimizer_step(state, params, [np.ones(3)])
        assert new_params[0].dtype == np.float32


class TestAdam:
    """Bias-corrected Adam."""

    def test_first_step_moves_by_learning_rate(self):
        """After bias correction the first step is -lr * sign(g)."""
        params = [np.array([0.5, -0.5])]
        state = create_optimizer(OptimizerKind.ADAM, params)
        new_params, new_state = optimizer_step(state, params, [np.array([3.0, -0.2])])
        np.testing.assert_allclose(new_params[0] - params[0], [-0.001, 0.001], rtol=1e-5)
        assert new_state.step_count == 1

    def test_moments_accumulate(self):
        params = [np.zeros(2)]
        state = create_optimizer(OptimizerKind.ADAM, params, learning_rate=0.01)
        grads = [np.array([1.0, -1.0])]
        params, state = optimizer_step(state, params, grads)
        params, state = optimizer_step(state, params, grads)
        np.testing.assert_allclose(state.first_moment[0], [0.19, -0.19])
        np.testing.assert_allclose(state.second_moment[0], [1.0 - 0.999**2] * 2)
        np.testing.assert_allclose(params[0], [-0.02, 0.02], rtol=1e-5)

    def test_minimises_quadratic(self):
        params = [np.array([3.0, -4.0])]
        state = create_optimizer(OptimizerKind.ADAM, params, learning_rate=0.1)
        for _ in range(1000):
            params, state = optimizer_step(state, params, [2.0 * params[0]])
        np.testing.assert_allclose(params[0], [0.0, 0.0], atol=0.05)


class TestValidation:
    """Shape and finiteness checks."""

    def test_non_finite_gradient_diverges(self):
        params = [np.zeros(2)]
        state = create_optimizer(OptimizerKind.ADAM, params)
        with pytest.raises(DivergenceError):
            optimizer_step(state, params, [np.array([np.nan, 0.0])])

    def test_shape_mismatch(self):
        params = [np.zeros(2)]
        state = create_optimizer(OptimizerKind.SGD, params)
        with pytest.raises(ShapeMismatchError):
            optimizer_step(state, params, [np.zeros(3)])
        with pytest.raises(ShapeMismatchError):
            optimizer_step(state, params, [])

    @pytest.mark.parametrize("moment", ["first_moment", "second_moment"])
    def test_adam_moment_shapes_checked(self, moment):
        """A stale accumulator of the wrong shape is rejected for either moment."""
        params = [np.zeros(2)]
        state = replace(create_optimizer(OptimizerKind.ADAM, params), **{moment: [np.zeros(3)]})
        with pytest.raises(ShapeMismatchError) as exc_info:
            optimizer_step(state, params, [np.ones(2)])
        assert moment in exc_info.value.message

    def test_adam_moment_count_checked(self):
        params = [np.zeros(2), np.zeros(1)]
        state = replace(create_optimizer(OptimizerKind.ADAM, params),
                        second_moment=[np.zeros(2)])
        with pytest.raises(ShapeMismatchError):
            optimizer_step(state, params, [np.ones(2), np.ones(1)])

    @pytest.mark.parametrize("kwargs", [{"learning_rate": 0.0}, {"beta1": 1.0}, {"beta2": -0.1}])
    def test_bad_hyperparameters(self, kwargs):
        with pytest.raises(ValidationError):
            create_optimizer(OptimizerKind.ADAM, [np.zeros(1)], **kwargs)

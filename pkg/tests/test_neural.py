# -*- coding: utf-8 -*-
from .context import pyfedhql

import unittest

import numpy as np

from pyfedhql.env import makeGenerator
from pyfedhql.neural import (Activation, NetworkSpec, Weights, initWeights, forward, forwardBatch, backward,
                             backwardBatch, sgdStep, gradientNorm, clipGradient, finiteDifferenceGradient,
                             gradientRelativeError, randomInstance)


class NetworkSpecTestSuite(unittest.TestCase):

    def test_parse_notation(self):
        spec = NetworkSpec.parse('64x64 (Tanh)', 4, 2)

        self.assertEqual(spec.hiddenLayers, [(64, Activation.Tanh), (64, Activation.Tanh)])
        self.assertEqual(spec.layerShapes, [(64, 4), (64, 64), (2, 64)])

    def test_parse_mixed_groups(self):
        layers = NetworkSpec.parseHidden('8x8 (ReLU), 4 (Tanh)')

        self.assertEqual(layers, [(8, Activation.ReLU), (8, Activation.ReLU), (4, Activation.Tanh)])
        self.assertEqual(NetworkSpec.describeHidden(layers), '8x8 (ReLU), 4 (Tanh)')

    def test_invalid_notation(self):
        with self.assertRaises(ValueError):
            NetworkSpec.parseHidden('64x (Tanh)')

        with self.assertRaises(ValueError):
            NetworkSpec.parseHidden('64 (Sigmoid)')

    def test_validate(self):
        spec = NetworkSpec(0, [], 2)
        self.assertEqual(len(spec.validate()), 2)


class ForwardTestSuite(unittest.TestCase):

    def setUp(self):
        self.w = initWeights(NetworkSpec.parse('8x8 (ReLU)', 4, 2, initSeed=3))

    def test_shapes(self):
        self.assertEqual(forward(self.w, np.zeros(4)).shape, (2,))
        self.assertEqual(forwardBatch(self.w, np.zeros((5, 4))).shape, (5, 2))

    def test_batch_matches_single(self):
        states = makeGenerator(0).normal(size=(6, 4))
        Q = forwardBatch(self.w, states)

        for i in range(6):
            np.testing.assert_allclose(Q[i], forward(self.w, states[i]), atol=1e-12)

    def test_wrong_input_dimension(self):
        with self.assertRaises(ValueError):
            forward(self.w, np.zeros(3))

    def test_zero_biases_and_bounded_init(self):
        for W, b in zip(self.w.matrices, self.w.biases):
            self.assertTrue(np.all(b == 0.0))
            self.assertTrue(np.all(np.abs(W) <= 1.0 / np.sqrt(W.shape[1])))

    def test_init_reproducible(self):
        other = initWeights(NetworkSpec.parse('8x8 (ReLU)', 4, 2, initSeed=3))
        self.assertEqual(self.w, other)

    def test_flatten_inverse(self):
        flat = self.w.flatten()

        self.assertEqual(len(flat), self.w.size)
        self.assertEqual(Weights.fromFlat(self.w.spec, flat), self.w)

        with self.assertRaises(ValueError):
            Weights.fromFlat(self.w.spec, flat[:-1])


class GradientTestSuite(unittest.TestCase):

    def test_finite_differences(self):
        rng = makeGenerator(11)

        for i in range(20):
            w, state, action, target = randomInstance(rng)
            loss, grad = backward(w, state, action, target)
            numeric = finiteDifferenceGradient(w, state, action, target, 1e-5)

            self.assertLess(gradientRelativeError(grad, numeric), 1e-4)

    def test_only_target_action_row(self):
        w = initWeights(NetworkSpec.parse('5 (Tanh)', 3, 3, initSeed=1))
        loss, grad = backward(w, np.ones(3), 1, 2.0)

        self.assertTrue(np.all(grad.matrices[-1][[0, 2]] == 0.0))
        self.assertTrue(np.all(grad.biases[-1][[0, 2]] == 0.0))
        self.assertAlmostEqual(loss, (2.0 - forward(w, np.ones(3))[1]) ** 2)

    def test_batch_is_mean_of_single(self):
        w = initWeights(NetworkSpec.parse('4 (Tanh)', 2, 2, initSeed=5))
        states = np.array([[0.1, -0.3], [0.7, 0.2]])

        loss, grad = backwardBatch(w, states, [0, 1], [1.0, -1.0])
        lossA, gradA = backward(w, states[0], 0, 1.0)
        lossB, gradB = backward(w, states[1], 1, -1.0)

        self.assertAlmostEqual(loss, 0.5 * (lossA + lossB))
        np.testing.assert_allclose(grad.flatten(), 0.5 * (gradA.flatten() + gradB.flatten()), atol=1e-12)

    def test_invalid_action(self):
        w = initWeights(NetworkSpec.parse('4 (Tanh)', 2, 2))

        with self.assertRaises(ValueError):
            backward(w, np.zeros(2), 2, 0.0)

    def test_sgd_step_reduces_loss(self):
        w = initWeights(NetworkSpec.parse('16 (Tanh)', 2, 2, initSeed=2))
        state = np.array([0.5, -0.5])

        loss, grad = backward(w, state, 0, 1.0)
        w2 = sgdStep(w, grad, 0.01)
        loss2, _ = backward(w2, state, 0, 1.0)

        self.assertLess(loss2, loss)

    def test_sgd_step_below_inverse_smoothness(self):
        rng = makeGenerator(5)
        decreased = 0

        for i in range(1000):
            w, state, action, target = randomInstance(rng)
            loss, grad = backward(w, state, action, target)

            norm = gradientNorm(grad)
            if norm < 1e-12:
                decreased += 1
                continue

            # Curvature along the descent direction from a finite difference of the gradient
            h = 1e-6
            direction = grad.flatten() / norm
            shifted = Weights.fromFlat(w.spec, w.flatten() + h * direction)
            _, gradShifted = backward(shifted, state, action, target)
            smoothness = np.linalg.norm(gradShifted.flatten() - grad.flatten()) / h

            loss2, _ = backward(sgdStep(w, grad, 0.1 / max(smoothness, 1.0)), state, action, target)

            if loss2 <= loss:
                decreased += 1

        self.assertGreaterEqual(decreased, 990)

    def test_sgd_scalar_regression(self):
        # Zero weights leave only the output bias with a gradient, i.e. plain descent on (3 - x)^2
        w = Weights.zeros(NetworkSpec.parse('1 (Tanh)', 1, 1))
        state = np.zeros(1)

        for i in range(100):
            loss, grad = backward(w, state, 0, 3.0)
            w = sgdStep(w, grad, 0.1)

        self.assertLess(abs(w.biases[-1][0] - 3.0), 1e-6)
        self.assertLess(abs(forward(w, state)[0] - 3.0), 1e-6)

    def test_sgd_step_is_pure(self):
        w = initWeights(NetworkSpec.parse('4 (Tanh)', 2, 2, initSeed=2))
        before = w.copy()

        loss, grad = backward(w, np.ones(2), 0, 3.0)
        sgdStep(w, grad, 0.1)

        self.assertEqual(w, before)

        with self.assertRaises(ValueError):
            sgdStep(w, grad, 0.0)

    def test_clip_gradient(self):
        w = initWeights(NetworkSpec.parse('4 (Tanh)', 2, 2, initSeed=2))
        loss, grad = backward(w, np.ones(2), 0, 100.0)

        clipped = clipGradient(grad, 1.0)

        self.assertGreater(gradientNorm(grad), 1.0)
        self.assertAlmostEqual(gradientNorm(clipped), 1.0)
        self.assertIs(clipGradient(grad, 0.0), grad)


if __name__ == '__main__':
    unittest.main()

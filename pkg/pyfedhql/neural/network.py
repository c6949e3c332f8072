import re
import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np


class Activation(Enum):
    """ Hidden layer activation functions """
    Tanh = 'Tanh'
    ReLU = 'ReLU'

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self is Activation.Tanh:
            return np.tanh(z)

        return np.maximum(z, 0.0)

    def derivative(self, z: np.ndarray, h: np.ndarray) -> np.ndarray:
        """
        The derivative of the activation given the pre-activation `z` and the activation `h`. The ReLU derivative at
        zero is taken as zero.
        """
        if self is Activation.Tanh:
            return 1.0 - h * h

        return np.where(z > 0.0, 1.0, 0.0)


@dataclass
class NetworkSpec:
    """
    The architecture of a dense feed-forward Q-network: a stack of hidden layers each with a width and an
    :class:`Activation`, followed by a linear output layer with one unit per action.
    """
    inputDim: int
    hiddenLayers: List[Tuple[int, Activation]]
    outputDim: int
    initSeed: int = 0

    NOTATION = re.compile(r'^\s*(\d+(?:\s*x\s*\d+)*)\s*\(\s*(\w+)\s*\)\s*$')

    def validate(self) -> List[str]:
        errors = []

        if self.inputDim < 1:
            errors.append('network input dimension must be positive')

        if self.outputDim < 1:
            errors.append('network output dimension must be positive')

        if len(self.hiddenLayers) < 1:
            errors.append('network requires at least one hidden layer')

        for width, activation in self.hiddenLayers:
            if width < 1:
                errors.append('hidden layer width must be >= 1, got {:d}'.format(width))
            if not isinstance(activation, Activation):
                errors.append('invalid activation {:s}'.format(str(activation)))

        return errors

    @property
    def layerShapes(self) -> List[Tuple[int, int]]:
        """ The (out, in) shape of every weight matrix from the input to the output layer """
        dims = [self.inputDim] + [width for width, _ in self.hiddenLayers] + [self.outputDim]
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]

    @staticmethod
    def parseHidden(text: str) -> List[Tuple[int, Activation]]:
        """
        Parses the hidden layer notation used for describing agent networks, e.g. `64x64 (Tanh)` or `8x8x8 (ReLU)`.
        Groups with different activations are separated by commas i.e. `64 (Tanh), 32 (ReLU)`.

        :param text: The network notation
        :return: The list of (width, activation) pairs
        """
        layers = []

        for group in text.split(','):
            match = NetworkSpec.NOTATION.match(group)

            if not match:
                raise ValueError('Invalid network notation <{:s}>'.format(group.strip()))

            try:
                activation = Activation(match.group(2))
            except ValueError:
                raise ValueError('Unknown activation <{:s}>'.format(match.group(2)))

            widths = [int(w) for w in re.split(r'\s*x\s*', match.group(1))]
            layers += [(w, activation) for w in widths]

        return layers

    @staticmethod
    def describeHidden(hiddenLayers: List[Tuple[int, Activation]]) -> str:
        """ The inverse of :meth:`parseHidden` """
        groups = []

        for width, activation in hiddenLayers:
            if groups and groups[-1][1] is activation:
                groups[-1][0].append(width)
            else:
                groups.append(([width], activation))

        return ', '.join('{:s} ({:s})'.format('x'.join(str(w) for w in widths), act.value) for widths, act in groups)

    @classmethod
    def parse(cls, text: str, inputDim: int, outputDim: int, initSeed: Optional[int] = 0) -> 'NetworkSpec':
        return cls(inputDim, cls.parseHidden(text), outputDim, initSeed)

    def __str__(self):
        return '{:d} -> {:s} -> {:d}'.format(self.inputDim, NetworkSpec.describeHidden(self.hiddenLayers),
                                            self.outputDim)


class Weights:
    """
    The parameters :math:`\\omega_n` of a private Q-network, stored as one weight matrix (out x in) and one bias vector
    per layer. The same container represents a :class:`Gradient`, which is shape-congruent with the weights.

    Weights are exclusively owned by a single agent and never leave it.
    """

    def __init__(self, spec: NetworkSpec, matrices: List[np.ndarray], biases: List[np.ndarray]):

        if len(matrices) != len(spec.layerShapes) or len(biases) != len(matrices):
            raise ValueError('Number of layers does not match the network specification')

        matrices = [np.asarray(W, dtype=np.float64) for W in matrices]
        biases = [np.asarray(b, dtype=np.float64) for b in biases]

        for W, b, shape in zip(matrices, biases, spec.layerShapes):
            if W.shape != shape or b.shape != (shape[0],):
                raise ValueError('Layer shape {:s} does not match the specification {:s}'.format(str(W.shape),
                                                                                                  str(shape)))

        self._spec = spec
        self._matrices = matrices
        self._biases = biases

    @property
    def spec(self) -> NetworkSpec:
        return self._spec

    @property
    def matrices(self) -> List[np.ndarray]:
        return self._matrices

    @property
    def biases(self) -> List[np.ndarray]:
        return self._biases

    @property
    def numLayers(self) -> int:
        return len(self._matrices)

    @property
    def size(self) -> int:
        """ The total number of parameters """
        return int(sum(W.size + b.size for W, b in zip(self._matrices, self._biases)))

    def copy(self) -> 'Weights':
        return Weights(self._spec, [W.copy() for W in self._matrices], [b.copy() for b in self._biases])

    def flatten(self) -> np.ndarray:
        """ The parameters concatenated layer by layer (matrix then bias) into a single vector """
        parts = []
        for W, b in zip(self._matrices, self._biases):
            parts.append(W.ravel())
            parts.append(b)

        return np.concatenate(parts)

    @classmethod
    def fromFlat(cls, spec: NetworkSpec, vector: np.ndarray) -> 'Weights':
        """ The inverse of :meth:`flatten` """
        matrices, biases = [], []
        idx = 0

        for rows, cols in spec.layerShapes:
            matrices.append(np.array(vector[idx:idx + rows * cols], dtype=np.float64).reshape(rows, cols))
            idx += rows * cols
            biases.append(np.array(vector[idx:idx + rows], dtype=np.float64))
            idx += rows

        if idx != len(vector):
            raise ValueError('Flat parameter vector has the wrong length')

        return cls(spec, matrices, biases)

    @classmethod
    def zeros(cls, spec: NetworkSpec) -> 'Weights':
        return cls(spec, [np.zeros(shape) for shape in spec.layerShapes],
                   [np.zeros(shape[0]) for shape in spec.layerShapes])

    def isFinite(self) -> bool:
        return all(np.all(np.isfinite(W)) and np.all(np.isfinite(b)) for W, b in zip(self._matrices, self._biases))

    def __eq__(self, other):
        if not isinstance(other, Weights):
            return NotImplemented

        return all(np.array_equal(A, B) for A, B in zip(self._matrices + self._biases,
                                                         other._matrices + other._biases))

    __hash__ = None


Gradient = Weights
""" The gradient :math:`\\nabla_{\\omega_n} \\mathcal{L}` shares the layout of :class:`Weights` """


def initWeights(spec: NetworkSpec) -> Weights:
    """
    Initialises the network parameters. Every weight matrix entry is drawn uniformly on
    :math:`[-1/\\sqrt{fan_{in}}, 1/\\sqrt{fan_{in}}]` from a PCG64 stream seeded by :attr:`NetworkSpec.initSeed`; the
    biases are zero.

    :param spec: The network specification
    :return: The initial weights
    """
    errors = spec.validate()

    if errors:
        raise ValueError('Invalid network specification: {:s}'.format('; '.join(errors)))

    rng = np.random.Generator(np.random.PCG64(spec.initSeed))

    matrices = []
    biases = []

    for rows, cols in spec.layerShapes:
        bound = 1.0 / np.sqrt(cols)
        matrices.append(rng.uniform(-bound, bound, size=(rows, cols)))
        biases.append(np.zeros(rows))

    logging.debug('Initialised network {:s} with {:d} parameters'.format(str(spec), sum(W.size for W in matrices)))

    return Weights(spec, matrices, biases)


def _checkInput(w: Weights, states: np.ndarray) -> np.ndarray:
    states = np.asarray(states, dtype=np.float64)

    if states.shape[-1] != w.spec.inputDim:
        raise ValueError('State dimension {:d} does not match the network input dimension {:d}'.format(
                         states.shape[-1], w.spec.inputDim))

    return states


def _forwardPass(w: Weights, X: np.ndarray):
    """ Forward pass over a batch (B x inputDim) storing the pre-activations and activations of each hidden layer """
    activations = [X]
    preActivations = []

    H = X
    for (W, b), (_, act) in zip(zip(w.matrices[:-1], w.biases[:-1]), w.spec.hiddenLayers):
        Z = H @ W.T + b
        H = act.apply(Z)
        preActivations.append(Z)
        activations.append(H)

    Q = H @ w.matrices[-1].T + w.biases[-1]

    return Q, preActivations, activations


def forwardBatch(w: Weights, states: np.ndarray) -> np.ndarray:
    """
    Evaluates the action values for a batch of states

    :param w: The network weights
    :param states: The states (B x inputDim)
    :return: The action values (B x outputDim)
    """
    states = _checkInput(w, states)
    Q, _, _ = _forwardPass(w, np.atleast_2d(states))
    return Q


def forward(w: Weights, state: np.ndarray) -> np.ndarray:
    """
    Evaluates the action values :math:`Q_n(s, a)` for all actions at a single state. This is a pure function of the
    weights and the state.

    :param w: The network weights
    :param state: The state vector
    :return: The QVector (one value per action)
    """
    state = _checkInput(w, state)

    if state.ndim != 1:
        raise ValueError('forward expects a single state vector')

    return forwardBatch(w, state.reshape(1, -1))[0]


def backwardBatch(w: Weights, states: np.ndarray, actions: np.ndarray, targets: np.ndarray) -> Tuple[float, Weights]:
    """
    Computes the mean squared regression loss of the selected action values towards the targets

    .. math::
        \\mathcal{L} = \\frac{1}{B} \\sum_i (y_i - Q(s_i, a_i))^2

    and its exact gradient with respect to every parameter by back-propagation. Only the output row of the target
    action receives a non-zero upstream gradient.

    :param w: The network weights
    :param states: The states (B x inputDim)
    :param actions: The target action per state (B)
    :param targets: The regression target per state (B)
    :return: The loss and the :class:`Gradient`
    """
    states = np.atleast_2d(_checkInput(w, states))
    actions = np.asarray(actions, dtype=np.int64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)

    batch = states.shape[0]

    if len(actions) != batch or len(targets) != batch:
        raise ValueError('Batch size mismatch between states, actions and targets')

    Q, preActivations, activations = _forwardPass(w, states)

    rows = np.arange(batch)
    error = targets - Q[rows, actions]
    loss = float(np.mean(error * error))

    dQ = np.zeros_like(Q)
    dQ[rows, actions] = -2.0 * error / batch

    gradMatrices = [None] * w.numLayers
    gradBiases = [None] * w.numLayers

    delta = dQ
    for layer in range(w.numLayers - 1, -1, -1):
        gradMatrices[layer] = delta.T @ activations[layer]
        gradBiases[layer] = delta.sum(axis=0)

        if layer > 0:
            dH = delta @ w.matrices[layer]
            act = w.spec.hiddenLayers[layer - 1][1]
            delta = dH * act.derivative(preActivations[layer - 1], activations[layer])

    return loss, Weights(w.spec, gradMatrices, gradBiases)


def backward(w: Weights, state: np.ndarray, targetAction: int, targetValue: float) -> Tuple[float, Weights]:
    """
    The regression loss :math:`(y - Q(s, a))^2` of a single state and its exact gradient. This is the loss of the
    individual improvement step and of a single DQN temporal-difference sample.

    :param w: The network weights
    :param state: The state vector
    :param targetAction: The action whose value is regressed
    :param targetValue: The regression target :math:`y`
    :return: The loss and the :class:`Gradient`
    """
    state = _checkInput(w, state)

    if state.ndim != 1:
        raise ValueError('backward expects a single state vector')

    if not 0 <= int(targetAction) < w.spec.outputDim:
        raise ValueError('Target action {:d} is out of range'.format(int(targetAction)))

    return backwardBatch(w, state.reshape(1, -1), [int(targetAction)], [float(targetValue)])


def sgdStep(w: Weights, g: Weights, lr: float) -> Weights:
    """
    A plain stochastic gradient descent step :math:`\\omega' = \\omega - lr \\cdot g` applied elementwise

    :param w: The current weights
    :param g: The gradient
    :param lr: The learning rate (> 0)
    :return: The updated weights (the inputs are not modified)
    """
    if lr <= 0.0:
        raise ValueError('Learning rate must be positive')

    return Weights(w.spec,
                   [W - lr * dW for W, dW in zip(w.matrices, g.matrices)],
                   [b - lr * db for b, db in zip(w.biases, g.biases)])


def gradientNorm(g: Weights) -> float:
    """ The global L2 norm across all gradient components """
    return float(np.sqrt(sum(np.sum(dW * dW) + np.sum(db * db) for dW, db in zip(g.matrices, g.biases))))


def clipGradient(g: Weights, maxNorm: float) -> Weights:
    """
    Rescales the gradient so that its global norm does not exceed `maxNorm`

    :param g: The gradient
    :param maxNorm: The maximum global norm. A non-positive value disables clipping
    :return: The (possibly rescaled) gradient
    """
    if maxNorm is None or maxNorm <= 0.0:
        return g

    norm = gradientNorm(g)

    if norm <= maxNorm:
        return g

    scale = maxNorm / norm
    return Weights(g.spec, [dW * scale for dW in g.matrices], [db * scale for db in g.biases])

import numpy as np

from .network import Activation, NetworkSpec, Weights, forward, _forwardPass


def regressionLoss(w: Weights, state: np.ndarray, action: int, target: float) -> float:
    """ The squared error :math:`(y - Q(s,a))^2` evaluated by the forward pass only """
    err = float(target) - forward(w, state)[int(action)]
    return err * err


def finiteDifferenceGradient(w: Weights, state: np.ndarray, action: int, target: float,
                             h: float = 1e-5) -> Weights:
    """
    Central finite difference approximation of the gradient of the regression loss, used as an independent oracle for
    :func:`~pyfedhql.neural.backward`.

    :param w: The network weights
    :param state: The state vector
    :param action: The regressed action
    :param target: The regression target
    :param h: The finite difference step
    :return: The approximate gradient
    """
    theta = w.flatten()
    grad = np.zeros_like(theta)

    for i in range(len(theta)):
        orig = theta[i]

        theta[i] = orig + h
        lossPlus = regressionLoss(Weights.fromFlat(w.spec, theta), state, action, target)

        theta[i] = orig - h
        lossMinus = regressionLoss(Weights.fromFlat(w.spec, theta), state, action, target)

        theta[i] = orig
        grad[i] = (lossPlus - lossMinus) / (2.0 * h)

    return Weights.fromFlat(w.spec, grad)


def gradientRelativeError(analytic: Weights, numeric: Weights, floor: float = 1e-4) -> float:
    """
    The maximum component-wise relative error between two gradients

    .. math::
        \\max_i \\frac{|g_i - \\hat{g}_i|}{\\max(|g_i|, |\\hat{g}_i|, floor)}

    The floor keeps components that are zero in both gradients (up to finite difference round-off) from dominating.
    """
    a = analytic.flatten()
    b = numeric.flatten()

    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def randomInstance(rng: np.random.Generator, maxWidth: int = 6, kinkMargin: float = 1e-3):
    """
    Draws a random small network, state, action and target for gradient checking. States placing a ReLU
    pre-activation within `kinkMargin` of zero are redrawn, since the loss is not differentiable there.

    :param rng: The random stream
    :param maxWidth: The maximum hidden layer width
    :param kinkMargin: Minimum distance of every ReLU pre-activation from zero
    :return: A tuple of (weights, state, action, target)
    """
    inputDim = int(rng.integers(1, 5))
    outputDim = int(rng.integers(1, 4))
    numHidden = int(rng.integers(1, 4))
    hidden = [(int(rng.integers(1, maxWidth + 1)), Activation.Tanh if rng.random() < 0.5 else Activation.ReLU)
              for _ in range(numHidden)]

    spec = NetworkSpec(inputDim, hidden, outputDim, initSeed=int(rng.integers(0, 2 ** 31)))
    w = Weights.fromFlat(spec, rng.normal(size=Weights.zeros(spec).size))

    while True:
        state = rng.normal(size=inputDim)
        _, preActivations, _ = _forwardPass(w, state.reshape(1, -1))

        nearKink = any(act is Activation.ReLU and np.min(np.abs(Z)) < kinkMargin
                       for Z, (_, act) in zip(preActivations, hidden))
        if not nearKink:
            break

    action = int(rng.integers(0, outputDim))
    target = float(rng.normal() * 2.0)

    return w, state, action, target

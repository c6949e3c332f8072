import math
from typing import Optional

import numpy as np

from .environment import Environment, EnvConfig


class CartPole(Environment):
    """
    The classic cart-pole balancing task. A pole is attached by an un-actuated joint to a cart, which moves along a
    frictionless track. The state is :math:`(x, \\dot{x}, \\theta, \\dot{\\theta})` given in [m, m/s, rad, rad/s] and the
    two actions push the cart left (`0`) or right (`1`) with a fixed force.

    The dynamics are integrated with an explicit Euler step of :attr:`TAU` seconds. The episode terminates once
    :math:`|x| > 2.4` or :math:`|\\theta| > 12^{\\circ}`. A reward of `1` is given for every step that does not fail
    (including the step that reaches the horizon) and `0` for the failure step, so that :math:`r \\in [0, 1]`.
    """

    GRAVITY = 9.8
    CART_MASS = 1.0
    POLE_MASS = 0.1
    HALF_LENGTH = 0.5
    FORCE_MAG = 10.0
    TAU = 0.02
    """ Seconds between state updates """

    X_THRESHOLD = 2.4
    THETA_THRESHOLD = 12 * 2 * math.pi / 360

    INIT_RANGE = 0.05
    """ Each initial state component is drawn i.i.d. uniformly on :math:`[-0.05, 0.05]` """

    def __init__(self, config: EnvConfig, generator: Optional[np.random.Generator] = None):
        super().__init__(config, generator)

    @property
    def stateDim(self) -> int:
        return 4

    @property
    def numActions(self) -> int:
        return 2

    @property
    def rewardBound(self) -> float:
        return 1.0

    def _initialState(self) -> np.ndarray:
        return self._rng.uniform(low=-CartPole.INIT_RANGE, high=CartPole.INIT_RANGE, size=(4,))

    @staticmethod
    def dynamics(state: np.ndarray, action: int) -> np.ndarray:
        """
        Evaluates a single Euler step of the cart-pole equations of motion

        :param state: The state :math:`(x, \\dot{x}, \\theta, \\dot{\\theta})`
        :param action: `0` (push left) or `1` (push right)
        :return: The next state
        """
        x, xDot, theta, thetaDot = (float(v) for v in state)

        force = CartPole.FORCE_MAG if action == 1 else -CartPole.FORCE_MAG

        totalMass = CartPole.CART_MASS + CartPole.POLE_MASS
        poleMassLength = CartPole.POLE_MASS * CartPole.HALF_LENGTH

        cosTheta = math.cos(theta)
        sinTheta = math.sin(theta)

        temp = (force + poleMassLength * thetaDot ** 2 * sinTheta) / totalMass
        thetaAcc = (CartPole.GRAVITY * sinTheta - cosTheta * temp) / \
                   (CartPole.HALF_LENGTH * (4.0 / 3.0 - CartPole.POLE_MASS * cosTheta ** 2 / totalMass))
        xAcc = temp - poleMassLength * thetaAcc * cosTheta / totalMass

        x = x + CartPole.TAU * xDot
        xDot = xDot + CartPole.TAU * xAcc
        theta = theta + CartPole.TAU * thetaDot
        thetaDot = thetaDot + CartPole.TAU * thetaAcc

        return np.array([x, xDot, theta, thetaDot], dtype=np.float64)

    def _transition(self, state: np.ndarray, action: int):

        sNext = CartPole.dynamics(state, action)

        failed = bool(abs(sNext[0]) > CartPole.X_THRESHOLD or abs(sNext[2]) > CartPole.THETA_THRESHOLD)
        reward = 0.0 if failed else 1.0

        return sNext, reward, failed

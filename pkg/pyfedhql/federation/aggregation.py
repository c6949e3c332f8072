import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np


class UcbMode(Enum):
    Practical = 'practical'
    """ :math:`Q^{UCB} = \\bar{Q} + \\lambda Q^{std}` """

    Theoretical = 'theoretical'
    """ :math:`Q^{UCB} = \\bar{Q} + \\sqrt{2cV/N} + 3bc/N` """


@dataclass
class FedConfig:
    """
    The configuration of the central server. These values are chosen by the server alone and are never required to
    match any agent's private configuration.
    """

    lam: float = 1.0
    """ The inter-agent exploration coefficient :math:`\\lambda \\geq 0` """

    alphaS: float = 0.05
    """ The FedTD learning rate :math:`\\alpha_s` """

    hFed: int = 16
    """ The maximum federation time horizon :math:`H_{fed}` """

    gamma: Optional[float] = None
    """ Discount factor used by FedTD. Defaults to the discount factor of the environment """

    c: float = 1.0
    """ Confidence constant of the theoretical bound """

    b: Optional[float] = None
    """ Upper bound of the action values for the theoretical bound, default :math:`R(1-\\gamma^H)/(1-\\gamma)` """

    ucbMode: UcbMode = UcbMode.Practical

    def validate(self) -> List[str]:
        errors = []

        if self.lam < 0.0:
            errors.append('federation.lambda must be non-negative')

        if not 0.0 <= self.alphaS <= 1.0:
            errors.append('federation.alpha_s must lie in (0,1] (0 disables FedTD)')

        if self.hFed < 1:
            errors.append('federation.h_fed must be >= 1')

        if self.gamma is not None and not 0.0 < self.gamma < 1.0:
            errors.append('federation.gamma must lie in (0,1)')

        if self.c <= 0.0:
            errors.append('federation.c must be positive')

        if self.b is not None and self.b <= 0.0:
            errors.append('federation.b must be positive')

        return errors

    @staticmethod
    def defaultValueBound(rewardBound: float, gamma: float, horizon: int) -> float:
        """ The discounted return bound :math:`R (1-\\gamma^H)/(1-\\gamma)` """
        return rewardBound * (1.0 - gamma ** horizon) / (1.0 - gamma)


@dataclass(eq=False)
class AggregateStats:
    """
    The per-action statistics computed by the server from the QVectors of :math:`N` agents at one state: the mean
    :math:`\\bar{Q}(s,a)`, the population standard deviation :math:`Q^{std}(s,a)` and the optimistic score
    :math:`Q^{UCB}(s,a)`.
    """
    mean: np.ndarray
    std: np.ndarray
    ucb: np.ndarray

    @property
    def numActions(self) -> int:
        return len(self.mean)


def _stack(qs: Sequence[Sequence[float]]) -> np.ndarray:

    if len(qs) == 0:
        raise ValueError('Cannot aggregate an empty list of QVectors')

    lengths = set(len(q) for q in qs)

    if len(lengths) != 1:
        raise ValueError('QVectors have ragged lengths {:s}'.format(str(sorted(lengths))))

    if lengths.pop() == 0:
        raise ValueError('QVectors must contain at least one action')

    Q = np.array([np.asarray(q, dtype=np.float64) for q in qs])

    if not np.all(np.isfinite(Q)):
        raise ValueError('QVectors must be finite')

    return Q


def _meanVar(values: np.ndarray):
    """ Mean and population variance using exactly rounded sums, so the result is independent of the agent order """
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return mean, var


def aggregate(qs: Sequence[Sequence[float]], lam: float = 0.0) -> AggregateStats:
    """
    Aggregates the knowledge of :math:`N` agents at a single state. For every action :math:`a`

    .. math::
        \\bar{Q}(s,a) = \\frac{1}{N} \\sum_n Q_n(s,a), \\quad
        Q^{std}(s,a) = \\sqrt{\\frac{1}{N} \\sum_n (\\bar{Q}(s,a) - Q_n(s,a))^2}, \\quad
        Q^{UCB}(s,a) = \\bar{Q}(s,a) + \\lambda Q^{std}(s,a)

    The standard deviation uses the population divisor :math:`N`.

    :param qs: The list of :math:`N` QVectors
    :param lam: The inter-agent exploration coefficient :math:`\\lambda`
    :return: The :class:`AggregateStats`
    """
    Q = _stack(qs)

    mean = np.zeros(Q.shape[1])
    std = np.zeros(Q.shape[1])

    for a in range(Q.shape[1]):
        m, v = _meanVar(Q[:, a])
        mean[a] = m
        std[a] = math.sqrt(v)

    return AggregateStats(mean, std, mean + lam * std)


def theoreticalUcb(values: Sequence[float], c: float, b: float) -> float:
    """
    The empirical Bernstein upper confidence bound of the action value given :math:`N` i.i.d. estimates bounded in
    :math:`[0, b]`

    .. math::
        Q^{UCB}(s,a) = \\bar{Q}(s,a) + \\sqrt{\\frac{2 c V_{s,a}}{N}} + \\frac{3 b c}{N}

    where :math:`V_{s,a}` is the population variance of the estimates.

    :param values: The estimates :math:`Q_n(s,a)` of each agent
    :param c: The confidence constant :math:`c > 0`
    :param b: The value upper bound :math:`b > 0`
    :return: The upper confidence bound
    """
    if c <= 0.0 or b <= 0.0:
        raise ValueError('The confidence constant c and bound b must be positive')

    values = np.asarray(values, dtype=np.float64).ravel()

    if len(values) == 0:
        raise ValueError('At least one value is required')

    if np.any(values < 0.0) or np.any(values > b) or not np.all(np.isfinite(values)):
        raise ValueError('Values must lie in [0, b={:g}] to satisfy the boundedness assumption'.format(b))

    n = len(values)
    mean, var = _meanVar(values)

    return mean + math.sqrt(2.0 * c * var / n) + 3.0 * b * c / n


def theoreticalAggregate(qs: Sequence[Sequence[float]], c: float, b: float) -> AggregateStats:
    """
    Aggregates QVectors scoring each action with :func:`theoreticalUcb` in place of the practical score

    :param qs: The list of :math:`N` QVectors with entries in :math:`[0, b]`
    :param c: The confidence constant
    :param b: The value upper bound
    :return: The :class:`AggregateStats`
    """
    Q = _stack(qs)
    stats = aggregate(Q, 0.0)
    stats.ucb = np.array([theoreticalUcb(Q[:, a], c, b) for a in range(Q.shape[1])])
    return stats


def selectAction(stats: AggregateStats) -> int:
    """
    Selects the server action :math:`\\bar{a}_t = \\arg\\max_a Q^{UCB}(s_t,a)`, ties broken by the lowest index

    :param stats: The aggregated statistics
    :return: The action index
    """
    if stats.numActions == 0:
        raise ValueError('Cannot select an action from empty statistics')

    return int(np.argmax(stats.ucb))


def fedTdUpdate(qbarSA: float, reward: float, qbarNext: Sequence[float], done: bool,
                alphaS: float, gamma: float) -> float:
    """
    The federated temporal difference update of the aggregated value of the server action

    .. math::
        \\bar{Q}(s_t,\\bar{a}_t) \\leftarrow \\bar{Q}(s_t,\\bar{a}_t)
            + \\alpha_s \\left(r_t + \\gamma \\max_b \\bar{Q}(s_{t+1},b) - \\bar{Q}(s_t,\\bar{a}_t)\\right)

    The bootstrap term is zero when :math:`s_{t+1}` terminates the episode.

    :param qbarSA: The aggregated value :math:`\\bar{Q}(s_t, \\bar{a}_t)`
    :param reward: The reward :math:`r_t` observed by the server
    :param qbarNext: The aggregated values :math:`\\bar{Q}(s_{t+1}, \\cdot)`
    :param done: Whether the transition terminated the episode
    :param alphaS: The FedTD learning rate :math:`\\alpha_s`
    :param gamma: The discount factor
    :return: The updated value
    """
    bootstrap = 0.0 if done else gamma * float(np.max(qbarNext))
    return qbarSA + alphaS * (reward + bootstrap - qbarSA)

import abc
import logging
import math
from typing import Optional

import numpy as np


class Sampler(abc.ABC):
    """
    A distribution of i.i.d. values bounded in :math:`[low, high]` with a known mean, used to validate the empirical
    Bernstein bound by Monte Carlo simulation.
    """

    def __init__(self, low: float, high: float):
        self._low = low
        self._high = high

    @property
    def low(self) -> float:
        return self._low

    @property
    def high(self) -> float:
        return self._high

    @property
    @abc.abstractmethod
    def mean(self) -> float:
        raise NotImplementedError('Abstract method should be implemented in derived class')

    @abc.abstractmethod
    def __call__(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError('Abstract method should be implemented in derived class')


class UniformSampler(Sampler):

    def __init__(self, low: float = 0.0, high: float = 1.0):
        super().__init__(low, high)

    def __str__(self):
        return 'Uniform[{:g},{:g}]'.format(self._low, self._high)

    @property
    def mean(self) -> float:
        return 0.5 * (self._low + self._high)

    def __call__(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.uniform(self._low, self._high, size=size)


class TwoPointSampler(Sampler):
    """ Takes the value `hi` with probability `p` and `lo` otherwise """

    def __init__(self, lo: float = 0.1, hi: float = 0.9, p: float = 0.5):
        super().__init__(lo, hi)
        self._p = p

    def __str__(self):
        return 'TwoPoint{{{:g},{:g}}}'.format(self._low, self._high)

    @property
    def mean(self) -> float:
        return self._p * self._high + (1.0 - self._p) * self._low

    def __call__(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.where(rng.random(size=size) < self._p, self._high, self._low)


class PointMassSampler(Sampler):

    def __init__(self, value: float = 0.5):
        super().__init__(value, value)

    def __str__(self):
        return 'PointMass({:g})'.format(self._low)

    @property
    def mean(self) -> float:
        return self._low

    def __call__(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.full(size, self._low, dtype=np.float64)


def requiredCoverage(c: float) -> float:
    """ The guaranteed coverage probability :math:`1 - 3e^{-c}` of the empirical Bernstein bound """
    return 1.0 - 3.0 * math.exp(-c)


def coverageTolerance(c: float, trials: int) -> float:
    """ Three standard deviations of a Bernoulli estimator of :func:`requiredCoverage` over `trials` """
    p = min(max(requiredCoverage(c), 0.0), 1.0)
    return 3.0 * math.sqrt(p * (1.0 - p) / trials)


def coverageTest(sampler: Sampler, N: int, c: float, b: float, trials: int = 10000,
                 seed: Optional[int] = 0) -> float:
    """
    Monte Carlo estimate of the probability that the empirical Bernstein interval covers the true mean,

    .. math::
        |\\bar{X}_N - \\mu| \\leq \\sqrt{\\frac{2 V_N c}{N}} + \\frac{3 b c}{N}

    where :math:`V_N` is the population variance of the :math:`N` samples. The bound guarantees a coverage of at least
    :math:`1 - 3e^{-c}`.

    :param sampler: The i.i.d. sampler with values in :math:`[0, b]` and known mean
    :param N: The number of samples per trial (agents)
    :param c: The confidence constant
    :param b: The upper bound of the samples
    :param trials: The number of Monte Carlo trials
    :param seed: The seed of the Monte Carlo stream
    :return: The empirical coverage in :math:`[0, 1]`
    """
    if N < 1 or trials < 1:
        raise ValueError('N and trials must be positive')

    if c <= 0.0 or b <= 0.0:
        raise ValueError('The confidence constant c and bound b must be positive')

    rng = np.random.Generator(np.random.PCG64(seed))
    X = np.asarray(sampler(rng, (trials, N)), dtype=np.float64)

    if np.any(X < 0.0) or np.any(X > b):
        raise ValueError('Sampler {:s} produced values outside [0, {:g}]'.format(str(sampler), b))

    mean = X.mean(axis=1)
    var = np.mean((X - mean[:, None]) ** 2, axis=1)
    radius = np.sqrt(2.0 * var * c / N) + 3.0 * b * c / N

    coverage = float(np.mean(np.abs(mean - sampler.mean) <= radius))

    logging.debug('Coverage {:s} (N={:d}, c={:g}): {:.5f}'.format(str(sampler), N, c, coverage))

    return coverage

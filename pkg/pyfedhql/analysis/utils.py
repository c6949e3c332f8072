import math
from typing import List, Optional, Sequence, Tuple

import numpy as np


def windowMeans(returns: Sequence[float], window: Optional[int] = 10) -> List[float]:
    """
    Partitions the evaluation returns into consecutive windows and averages each complete window. An incomplete
    trailing window is discarded.

    :param returns: The returns of consecutive evaluation episodes
    :param window: The number of episodes per window
    :return: The mean of every complete window
    """
    if window < 1:
        raise ValueError('Window must be >= 1')

    numWindows = len(returns) // window

    return [math.fsum(returns[i * window:(i + 1) * window]) / window for i in range(numWindows)]


def maxMeanReturn(returns: Sequence[float], window: Optional[int] = 10) -> float:
    """
    The max mean return metric: the maximum of the mean returns of consecutive windows of evaluation episodes.

    :param returns: The returns of consecutive evaluation episodes
    :param window: The number of episodes per window
    :return: The largest window mean
    """
    means = windowMeans(list(returns), window)

    if len(means) == 0:
        raise ValueError('Max mean return is undefined for fewer than {:d} returns'.format(window))

    return max(means)


def runningWindowStats(returns: Sequence[float],
                       window: Optional[int] = 10) -> Tuple[List[Optional[float]], List[Optional[float]]]:
    """
    The per-episode columns of a learning curve: the window mean on the episode which completes a window, and the
    running max mean return over the windows completed so far.

    :param returns: The returns of consecutive evaluation episodes
    :param window: The number of episodes per window
    :return: A tuple of the window mean and running max mean return of every episode, `None` where undefined
    """
    means = windowMeans(list(returns), window)

    windowColumn = [None] * len(returns)
    maxColumn = [None] * len(returns)
    best = None

    for i in range(len(returns)):

        if (i + 1) % window == 0:
            windowColumn[i] = means[(i + 1) // window - 1]
            best = windowColumn[i] if best is None else max(best, windowColumn[i])

        maxColumn[i] = best

    return windowColumn, maxColumn


def bootstrapCi(values: Sequence[float], level: Optional[float] = 0.8, resamples: Optional[int] = 10000,
                seed: Optional[int] = 0) -> Tuple[float, float]:
    """
    The percentile bootstrap confidence interval of the mean. The values are resampled with replacement and the
    :math:`(1 \\pm level)/2` percentiles of the resampled means are returned. The interval always contains the
    sample mean.

    :param values: The sample, at least two values
    :param level: The confidence level
    :param resamples: The number of bootstrap resamples
    :param seed: The seed of the PCG64 resampling stream
    :return: The lower and upper bound of the interval
    """
    values = np.asarray(values, dtype=np.float64).ravel()

    if len(values) < 2:
        raise ValueError('The bootstrap requires at least two values')

    if not 0.0 < level < 1.0:
        raise ValueError('Confidence level must lie in (0,1)')

    if np.all(values == values[0]):
        return float(values[0]), float(values[0])

    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, len(values), size=(resamples, len(values)))
    means = values[idx].mean(axis=1)

    lo, hi = np.percentile(means, [50.0 * (1.0 - level), 50.0 * (1.0 + level)])

    mean = float(values.mean())

    return min(float(lo), mean), max(float(hi), mean)

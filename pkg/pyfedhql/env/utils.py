import logging
from typing import List, Optional

import numpy as np


def makeGenerator(seed) -> np.random.Generator:
    """
    Constructs a random stream using the PCG64 bit generator. All random streams in the library are PCG64 streams so that
    a run is reproduced exactly from its seed.

    :param seed: An integer seed or a :class:`numpy.random.SeedSequence`
    :return: The generator
    """
    return np.random.Generator(np.random.PCG64(seed))


def spawnSeedSequences(seed, n: int) -> List[np.random.SeedSequence]:
    """
    Splits a seed into `n` statistically independent child seed sequences

    :param seed: An integer seed or an existing :class:`numpy.random.SeedSequence`
    :param n: The number of children
    :return: The child seed sequences
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))

    return seed.spawn(n)


def spawnGenerators(seed, n: int) -> List[np.random.Generator]:
    """
    Splits a seed into `n` independent PCG64 generators, e.g. one per private copy of the environment.

    :param seed: An integer seed or an existing :class:`numpy.random.SeedSequence`
    :param n: The number of generators
    :return: The list of generators
    """
    return [makeGenerator(ss) for ss in spawnSeedSequences(seed, n)]


def valueIteration(P: np.ndarray, R: np.ndarray, terminal: np.ndarray, gamma: float,
                   tol: Optional[float] = 1e-12, maxIterations: Optional[int] = 100000) -> np.ndarray:
    """
    Solves the Bellman optimality equation of a tabular MDP to a fixed point

    .. math::
        Q(s,a) = R(s,a) + \\gamma \\sum_{s'} P(s'|s,a) \\max_b Q(s',b)

    where the value of terminal states is zero.

    :param P: The transition tensor (S x A x S)
    :param R: The expected reward (S x A)
    :param terminal: Boolean mask (S) of terminal states
    :param gamma: The discount factor
    :param tol: The sup-norm tolerance between successive iterates
    :param maxIterations: Upper limit on the number of sweeps
    :return: The optimal action values :math:`Q^*` (S x A)
    """
    P = np.asarray(P, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    terminal = np.asarray(terminal, dtype=bool)

    Q = np.zeros_like(R)

    for i in range(maxIterations):

        V = np.where(terminal, 0.0, Q.max(axis=1))
        Qnew = R + gamma * np.einsum('sat,t->sa', P, V)
        Qnew[terminal] = 0.0

        delta = np.max(np.abs(Qnew - Q))
        Q = Qnew

        if delta < tol:
            logging.debug('Value iteration converged after {:d} sweeps'.format(i + 1))
            break

    return Q


def chainOptimalQ(length: int, gamma: float) -> np.ndarray:
    """
    The optimal action values of a :class:`~pyfedhql.env.ChainMDP` obtained via :func:`valueIteration`

    :param length: Number of cells in the chain
    :param gamma: The discount factor
    :return: :math:`Q^*` (length x 2)
    """
    from .chain import ChainMDP
    from .environment import EnvConfig, EnvironmentKind

    chain = ChainMDP(EnvConfig(kind=EnvironmentKind.ChainMDP, gamma=gamma, chainLength=length))

    return valueIteration(*chain.transitionModel(), gamma)

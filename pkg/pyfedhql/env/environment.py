import abc
import threading
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np


class EnvironmentKind(Enum):
    CartPole = 'CartPole'
    ChainMDP = 'ChainMDP'


class EpisodeTerminated(RuntimeError):
    """
    Raised when :meth:`Environment.step` is called on an episode that has already terminated. The environment is never
    silently reset; the caller must call :meth:`Environment.reset` explicitly.
    """
    pass


@dataclass
class EnvConfig:
    """
    The configuration of an episodic environment. The same configuration is used to construct every private copy of
    the MDP (one per agent, one for the server and one for evaluation), each copy drawing from its own random stream.
    """

    kind: EnvironmentKind = EnvironmentKind.CartPole
    horizon: int = 500
    """ The task horizon :math:`H` - maximum number of steps per episode """

    gamma: float = 0.99
    """ Discount factor :math:`\\gamma \\in (0,1)` """

    seed: int = 0
    chainLength: int = 5
    """ Number of cells for :attr:`EnvironmentKind.ChainMDP` (ignored otherwise) """

    def validate(self) -> list:
        errors = []

        if not 0.0 < self.gamma < 1.0:
            errors.append('env.gamma must lie in (0,1), got {:g}'.format(self.gamma))

        if self.horizon < 1:
            errors.append('env.horizon must be >= 1, got {:d}'.format(self.horizon))

        if self.kind == EnvironmentKind.ChainMDP and self.chainLength < 2:
            errors.append('env.chain_length must be >= 2, got {:d}'.format(self.chainLength))

        return errors


@dataclass(eq=False)
class Transition:
    """
    A single sample :math:`(s, a, s', r, done)` generated within a private copy of the MDP. `done` marks the end of
    the episode whereas `terminal` is only set when :math:`s'` is a terminal state. An episode truncated at the horizon
    is done but not terminal.
    """
    s: np.ndarray
    a: int
    sNext: np.ndarray
    r: float
    done: bool
    terminal: bool = False

    def bootstraps(self, bootstrapTruncation: bool = False) -> bool:
        """
        Whether a TD target built from the transition includes the discounted value of :math:`s'`. A done transition
        never bootstraps, unless `bootstrapTruncation` is set, in which case only a terminal :math:`s'` stops it.
        """
        return not (self.terminal if bootstrapTruncation else self.done)


class Environment(abc.ABC):
    """
    The base class for episodic MDP environments with deterministic, seedable dynamics. Derived classes provide the
    initial state distribution :math:`\\rho` in :meth:`_initialState` and the transition kernel in :meth:`_transition`.
    The base class owns the step counter, the horizon :math:`H` and the terminal flag so that the episode length never
    exceeds the horizon.

    Every call to :meth:`step` across all environment instances increments :attr:`Environment.totalSteps`, which is
    used to audit the budget accounting of an experiment.
    """

    _totalSteps = 0
    _counterLock = threading.Lock()

    def __init__(self, config: EnvConfig, generator: Optional[np.random.Generator] = None):

        self._config = config

        if generator is None:
            generator = np.random.Generator(np.random.PCG64(config.seed))

        self._rng = generator
        self._state = None
        self._stepCount = 0
        self._done = True

    def __str__(self):
        return '{:s} <H={:d}>'.format(self.name, self.horizon)

    @property
    def name(self) -> str:
        return type(self).__name__

    @property
    def config(self) -> EnvConfig:
        return self._config

    @property
    def horizon(self) -> int:
        """ The task horizon :math:`H` """
        return self._config.horizon

    @property
    def gamma(self) -> float:
        return self._config.gamma

    @property
    def state(self) -> np.ndarray:
        """ A copy of the current state """
        return None if self._state is None else self._state.copy()

    @property
    def stepCount(self) -> int:
        """ The number of steps taken in the current episode """
        return self._stepCount

    @property
    def isDone(self) -> bool:
        """ True when the current episode has terminated or has not been started """
        return self._done

    @property
    @abc.abstractmethod
    def stateDim(self) -> int:
        raise NotImplementedError('Abstract method should be implemented in derived class')

    @property
    @abc.abstractmethod
    def numActions(self) -> int:
        raise NotImplementedError('Abstract method should be implemented in derived class')

    @property
    @abc.abstractmethod
    def rewardBound(self) -> float:
        """ The upper bound :math:`R` of every reward emitted, :math:`r \\in [0, R]` """
        raise NotImplementedError('Abstract method should be implemented in derived class')

    @classmethod
    def totalSteps(cls) -> int:
        """ The total number of :meth:`step` invocations made by every environment in this process """
        with Environment._counterLock:
            return Environment._totalSteps

    @classmethod
    def resetTotalSteps(cls) -> None:
        with Environment._counterLock:
            Environment._totalSteps = 0

    def reset(self) -> np.ndarray:
        """
        Starts a new episode drawing the initial state from :math:`\\rho` and resets the step counter.

        :return: The initial state
        """
        self._state = np.asarray(self._initialState(), dtype=np.float64)
        self._stepCount = 0
        self._done = False

        return self._state.copy()

    def step(self, action: int) -> Transition:
        """
        Executes the action within the current episode. The episode terminates when the termination condition of the
        environment is met or the step counter reaches the horizon :math:`H`.

        :param action: The action index in :math:`[0, |\\mathcal{A}|)`
        :return: The generated :class:`Transition`
        """
        if self._done:
            raise EpisodeTerminated('{:s}: step called on a terminated episode (reset required)'.format(self.name))

        action = int(action)

        if action < 0 or action >= self.numActions:
            raise ValueError('Action {:d} is invalid for {:s} with {:d} actions'.format(action, self.name,
                                                                                        self.numActions))

        sNext, reward, terminal = self._transition(self._state, action)
        sNext = np.asarray(sNext, dtype=np.float64)

        self._stepCount += 1

        with Environment._counterLock:
            Environment._totalSteps += 1

        done = bool(terminal or self._stepCount >= self.horizon)

        transition = Transition(self._state, action, sNext.copy(), float(reward), done, bool(terminal))

        self._state = sNext
        self._done = done

        return transition

    @abc.abstractmethod
    def _initialState(self) -> np.ndarray:
        raise NotImplementedError('Abstract method should be implemented in derived class')

    @abc.abstractmethod
    def _transition(self, state: np.ndarray, action: int):
        """
        The transition kernel of the environment

        :return: A tuple of the next state, reward and whether the next state is terminal
        """
        raise NotImplementedError('Abstract method should be implemented in derived class')


def createEnvironment(config: EnvConfig, generator: Optional[np.random.Generator] = None) -> Environment:
    """
    Factory for the environment described by an :class:`EnvConfig`

    :param config: The environment configuration
    :param generator: The private random stream of this copy of the MDP
    :return: The constructed environment
    """
    from .cartpole import CartPole
    from .chain import ChainMDP

    logging.debug('Creating environment {:s}'.format(config.kind.value))

    if config.kind == EnvironmentKind.CartPole:
        return CartPole(config, generator)
    elif config.kind == EnvironmentKind.ChainMDP:
        return ChainMDP(config, generator)

    raise ValueError('Unknown environment kind {:s}'.format(str(config.kind)))

import abc
import logging
from typing import Optional

import numpy as np

from ..env import Environment, Transition
from ..env.utils import makeGenerator, spawnSeedSequences
from ..neural import Weights, initWeights, forward, forwardBatch, backward, backwardBatch, sgdStep, clipGradient
from .config import AgentConfig, AgentKind, Exploration
from .replay import ReplayBuffer


class BaseAgent(abc.ABC):
    """
    A black-box heterogeneous Q-learning agent :math:`\\mathcal{B}_n`. The agent owns its private parameterisation, its
    experience and its random stream. It interacts with the outside world in exactly three ways:

    * :meth:`selfLearn` - independent learning within its private copy of the MDP,
    * :meth:`answerQuery` - reporting its action values :math:`Q_n(s, \\cdot)` at a state chosen by the server,
    * :meth:`improve` - :math:`\\kappa` regression steps of :math:`Q_n(s, \\bar{a})` towards a target broadcast by the
      server.

    Derived classes provide the value function representation.
    """

    def __init__(self, agentId: int, config: AgentConfig, stateDim: int, numActions: int, gamma: float,
                 rng: np.random.Generator, bootstrapTruncation: bool = False):

        self._agentId = agentId
        self._config = config
        self._stateDim = stateDim
        self._numActions = numActions
        self._gamma = gamma
        self._rng = rng
        self._bootstrapTruncation = bootstrapTruncation

        self._interactions = 0
        self._improvementSteps = 0

    def __str__(self):
        return '{:s} <id: {:d}>'.format(type(self).__name__, self._agentId)

    @property
    def agentId(self) -> int:
        return self._agentId

    @property
    def config(self) -> AgentConfig:
        return self._config

    @property
    def numActions(self) -> int:
        return self._numActions

    @property
    def stateDim(self) -> int:
        return self._stateDim

    @property
    def bootstrapTruncation(self) -> bool:
        """ When set, an episode truncated at the horizon still bootstraps from its final state """
        return self._bootstrapTruncation

    @property
    def gamma(self) -> float:
        return self._gamma

    @property
    def interactions(self) -> int:
        """ The number of environment interactions :math:`|D_n|` consumed during self-learning """
        return self._interactions

    @property
    def improvementSteps(self) -> int:
        """ The total number of individual improvement gradient steps performed """
        return self._improvementSteps

    def _checkState(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=np.float64)

        if state.shape != (self._stateDim,):
            raise ValueError('State of shape {:s} does not match the state dimension {:d}'.format(str(state.shape),
                                                                                                 self._stateDim))
        return state

    @abc.abstractmethod
    def qValues(self, state: np.ndarray) -> np.ndarray:
        """ The current action value estimates at a state """
        raise NotImplementedError('Abstract method should be implemented in derived class')

    @abc.abstractmethod
    def _learn(self, transition: Transition) -> None:
        """ Processes a newly generated transition during self-learning """
        raise NotImplementedError('Abstract method should be implemented in derived class')

    @abc.abstractmethod
    def _improveStep(self, state: np.ndarray, action: int, target: float, lr: float) -> float:
        """ A single gradient step on :math:`(y - Q_n(s, a))^2`, returning the loss before the step """
        raise NotImplementedError('Abstract method should be implemented in derived class')

    def greedyAction(self, state: np.ndarray) -> int:
        """ The greedy action :math:`\\arg\\max_a Q_n(s,a)`, ties broken by the lowest action index """
        return int(np.argmax(self.qValues(self._checkState(state))))

    def act(self, state: np.ndarray) -> int:
        """
        Selects an action using :math:`\\epsilon`-greedy exploration: the greedy action with probability
        :math:`1-\\epsilon_n`, otherwise a uniformly random action drawn from the agent's private stream.

        :param state: The current state
        :return: The action index
        """
        if self._rng.random() < self._config.epsilon:
            return int(self._rng.integers(0, self._numActions))

        return self.greedyAction(state)

    def selfLearn(self, env: Environment, steps: int, budget: Optional[int] = None) -> int:
        """
        Performs a self-learning phase of `steps` interactions in the agent's private copy of the MDP. The current
        episode is continued across phases and a new episode is started whenever the previous one terminates.

        :param env: The agent's private environment
        :param steps: The number of interactions requested
        :param budget: The remaining interaction budget. The phase stops early once it is exhausted
        :return: The number of interactions consumed
        """
        if budget is not None:
            steps = min(steps, max(budget, 0))

        for i in range(steps):

            if env.isDone:
                env.reset()

            state = env.state
            transition = env.step(self.act(state))

            self._interactions += 1
            self._learn(transition)

        logging.debug('\t - agent {:d} self-learned {:d} steps ({:d} total)'.format(self._agentId, steps,
                                                                                   self._interactions))
        return steps

    def answerQuery(self, state: np.ndarray) -> np.ndarray:
        """
        Answers a server query with the action values :math:`Q_n(s, a)` for every action. The call has no side effects
        and reveals nothing else about the agent.

        :param state: The query state
        :return: The QVector
        """
        return np.array(self.qValues(self._checkState(state)), dtype=np.float64)

    def improve(self, state: np.ndarray, action: int, target: float) -> int:
        """
        Individual improvement: performs :math:`\\kappa` gradient steps of the regression loss
        :math:`(\\bar{Q}(s,\\bar{a}) - Q_n(s,\\bar{a}))^2` with step size :math:`\\tilde{\\alpha}_n`. Only the agent's
        own parameters are modified.

        :param state: The state :math:`s_t` of the server
        :param action: The server action :math:`\\bar{a}_t`
        :param target: The FedTD target :math:`\\bar{Q}(s_t, \\bar{a}_t)`
        :return: The number of gradient steps performed
        """
        state = self._checkState(state)

        if not np.isfinite(target):
            raise ValueError('Improvement target must be finite')

        if not 0 <= int(action) < self._numActions:
            raise ValueError('Action {:d} is out of range'.format(int(action)))

        lr = self._config.improvementLr

        for i in range(self._config.kappa):
            self._improveStep(state, int(action), float(target), lr)

        self._improvementSteps += self._config.kappa

        return self._config.kappa


class DQNAgent(BaseAgent):
    """
    An agent learning :math:`Q_n` with deep Q-learning. Every self-learning interaction is stored in a private
    :class:`ReplayBuffer` and followed by one minibatch update of the squared temporal-difference error

    .. math::
        y = r + \\gamma \\max_a Q_{target}(s', a) \\quad (y = r \\text{ when the transition is done})

    using plain SGD with learning rate :math:`\\alpha_n`. The target network is refreshed from the online weights every
    :attr:`AgentConfig.targetSyncEvery` interactions.
    """

    def __init__(self, agentId: int, config: AgentConfig, stateDim: int, numActions: int, gamma: float,
                 rng: np.random.Generator, initSeed: int = 0, bootstrapTruncation: bool = False):

        super().__init__(agentId, config, stateDim, numActions, gamma, rng, bootstrapTruncation)

        self._weights = initWeights(config.networkSpec(stateDim, numActions, initSeed))
        self._targetWeights = self._weights.copy()
        self._replay = ReplayBuffer(config.replayCapacity, stateDim)

        logging.debug('Created DQN agent {:d} with network {:s}'.format(agentId, str(self._weights.spec)))

    @property
    def weights(self) -> Weights:
        """ The online weights :math:`\\omega_n` (private to the agent's process) """
        return self._weights

    @weights.setter
    def weights(self, weights: Weights):
        self._weights = weights

    @property
    def targetWeights(self) -> Weights:
        return self._targetWeights

    @property
    def replayBuffer(self) -> ReplayBuffer:
        return self._replay

    def syncTarget(self) -> None:
        self._targetWeights = self._weights.copy()

    def qValues(self, state: np.ndarray) -> np.ndarray:
        return forward(self._weights, state)

    def tdTargets(self, rewards: np.ndarray, nextStates: np.ndarray, noBootstrap: np.ndarray) -> np.ndarray:
        """ The DQN regression targets. Transitions flagged in `noBootstrap` carry no bootstrap term """
        nextMax = forwardBatch(self._targetWeights, nextStates).max(axis=1)
        return np.where(noBootstrap, rewards, rewards + self._gamma * nextMax)

    def _learn(self, transition: Transition) -> None:

        self._replay.add(transition)

        if len(self._replay) >= self._config.batchSize:
            states, actions, rewards, nextStates, noBootstrap = self._replay.sample(self._rng, self._config.batchSize,
                                                                                 self._bootstrapTruncation)
            targets = self.tdTargets(rewards, nextStates, noBootstrap)

            loss, grad = backwardBatch(self._weights, states, actions, targets)
            grad = clipGradient(grad, self._config.maxGradNorm)
            self._weights = sgdStep(self._weights, grad, self._config.lr)

        if self._interactions % self._config.targetSyncEvery == 0:
            self.syncTarget()

    def _improveStep(self, state: np.ndarray, action: int, target: float, lr: float) -> float:
        loss, grad = backward(self._weights, state, action, target)
        self._weights = sgdStep(self._weights, grad, lr)
        return loss


class TabularAgent(BaseAgent):
    """
    An agent with an explicit Q-table over the cells of a one-hot encoded state (e.g. :class:`~pyfedhql.env.ChainMDP`).
    Self-learning applies the one-step Q-learning update

    .. math::
        Q(s,a) \\leftarrow Q(s,a) + \\alpha_n \\left(r + \\gamma \\max_b Q(s',b) - Q(s,a)\\right)

    and individual improvement performs gradient steps of :math:`(y - Q(s,a))^2` directly on the table entry. Exploration
    is either :math:`\\epsilon`-greedy or count based UCB,

    .. math::
        a_t = \\arg\\max_a \\left[Q(s_t, a) + c \\sqrt{\\ln t / N_t(s_t, a)}\\right]

    where untried actions are chosen first.
    """

    def __init__(self, agentId: int, config: AgentConfig, stateDim: int, numActions: int, gamma: float,
                 rng: np.random.Generator, initialTable: Optional[np.ndarray] = None,
                 bootstrapTruncation: bool = False):

        super().__init__(agentId, config, stateDim, numActions, gamma, rng, bootstrapTruncation)

        if initialTable is None:
            self._table = np.zeros((stateDim, numActions))
        else:
            self._table = np.array(initialTable, dtype=np.float64)

            if self._table.shape != (stateDim, numActions):
                raise ValueError('Initial Q-table has an incompatible shape')

        self._counts = np.zeros((stateDim, numActions), dtype=np.int64)

    @property
    def table(self) -> np.ndarray:
        return self._table

    @table.setter
    def table(self, table: np.ndarray):
        self._table = np.array(table, dtype=np.float64)

    @staticmethod
    def cellOf(state: np.ndarray) -> int:
        return int(np.argmax(state))

    def qValues(self, state: np.ndarray) -> np.ndarray:
        return self._table[TabularAgent.cellOf(state)].copy()

    def act(self, state: np.ndarray) -> int:

        if self._config.exploration != Exploration.UCB:
            return super().act(state)

        cell = TabularAgent.cellOf(self._checkState(state))
        counts = self._counts[cell]

        untried = np.flatnonzero(counts == 0)
        if len(untried) > 0:
            return int(untried[0])

        t = max(self._interactions + 1, 2)
        bonus = self._config.ucbC * np.sqrt(np.log(t) / counts)

        return int(np.argmax(self._table[cell] + bonus))

    def _learn(self, transition: Transition) -> None:

        cell = TabularAgent.cellOf(transition.s)
        nextCell = TabularAgent.cellOf(transition.sNext)

        self._counts[cell, transition.a] += 1

        target = transition.r
        if transition.bootstraps(self._bootstrapTruncation):
            target += self._gamma * np.max(self._table[nextCell])

        self._table[cell, transition.a] += self._config.lr * (target - self._table[cell, transition.a])

    def _improveStep(self, state: np.ndarray, action: int, target: float, lr: float) -> float:
        cell = TabularAgent.cellOf(state)
        error = target - self._table[cell, action]
        self._table[cell, action] += 2.0 * lr * error
        return error * error


def createAgent(agentId: int, config: AgentConfig, stateDim: int, numActions: int, gamma: float,
                seed, bootstrapTruncation: bool = False) -> BaseAgent:
    """
    Factory constructing an agent from its private configuration

    :param agentId: The agent id (1..N)
    :param config: The agent configuration
    :param stateDim: The dimension of the environment state
    :param numActions: The number of actions
    :param gamma: The discount factor of the task
    :param seed: An integer seed or :class:`numpy.random.SeedSequence` from which the agent's policy stream and network
                 initialisation seed are derived
    :param bootstrapTruncation: Bootstrap from the final state of an episode truncated at the horizon
    :return: The agent
    """
    policySeed, initSeed = spawnSeedSequences(seed, 2)

    if config.kind == AgentKind.Tabular:
        return TabularAgent(agentId, config, stateDim, numActions, gamma, makeGenerator(policySeed),
                            bootstrapTruncation=bootstrapTruncation)

    return DQNAgent(agentId, config, stateDim, numActions, gamma, makeGenerator(policySeed),
                    initSeed=int(initSeed.generate_state(1)[0]), bootstrapTruncation=bootstrapTruncation)

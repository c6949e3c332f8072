import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..env import Environment
from ..federation import (AggregateStats, FedConfig, UcbMode, aggregate, theoreticalAggregate, selectAction,
                          fedTdUpdate)
from ..transport import SERVER_ID, BaseChannel, QueryState, FedTDTarget, StateTag, toVector
from .ledger import BudgetLedger


@dataclass(eq=False)
class TraceEntry:
    """ A single federation step: the server transition and the aggregated value before and after FedTD """
    state: np.ndarray
    action: int
    reward: float
    qBefore: float
    qAfter: float
    done: bool
    improvementSteps: int = 0
    """ The total number of improvement steps acknowledged by the agents """


@dataclass(eq=False)
class RoundState:
    """ The outcome of a federation round """
    roundId: int
    initialState: Optional[np.ndarray] = None
    trace: List[TraceEntry] = field(default_factory=list)
    broadcasts: int = 0
    """ The number of :class:`QueryState` broadcasts issued """

    targetBroadcasts: int = 0
    """ The number of :class:`FedTDTarget` broadcasts issued """

    terminated: bool = False
    """ Whether the server episode terminated during the round """

    @property
    def steps(self) -> int:
        """ The federation time step :math:`t` reached by the round """
        return len(self.trace)


class FedServer:
    """
    The central server of the federation. The server holds its own copy of the MDP and communicates with the black-box
    agents only through a :class:`BaseChannel`. During a round, starting from the current state :math:`s_0` of its
    environment, it repeats until the state is terminal or :math:`H_{fed}` steps were taken:

    * broadcast :math:`s_t` and collect :math:`Q_n(s_t, \\cdot)` from every agent,
    * aggregate the knowledge and select :math:`\\bar{a}_t = \\arg\\max_a Q^{UCB}(s_t, a)`,
    * execute :math:`\\bar{a}_t` in its environment, charging the interaction to the ledger,
    * broadcast :math:`s_{t+1}` and compute :math:`\\bar{Q}(s_{t+1}, \\cdot)`,
    * update :math:`\\bar{Q}(s_t, \\bar{a}_t)` by FedTD and broadcast the result as the improvement target.

    When the step ends the server episode the next-state query is skipped and the target carries no bootstrap term.
    With `bootstrapTruncation` set, only a terminal :math:`s_{t+1}` does so and a horizon truncation still bootstraps.
    """

    def __init__(self, channel: BaseChannel, serverEnv: Environment, fedConfig: FedConfig, ledger: BudgetLedger,
                 strictBudget: bool = False, bootstrapTruncation: bool = False):

        self._channel = channel
        self._env = serverEnv
        self._config = fedConfig
        self._ledger = ledger
        self._strictBudget = strictBudget
        self._bootstrapTruncation = bootstrapTruncation

        self._gamma = serverEnv.gamma if fedConfig.gamma is None else fedConfig.gamma

        if fedConfig.b is None:
            self._b = FedConfig.defaultValueBound(serverEnv.rewardBound, self._gamma, serverEnv.horizon)
        else:
            self._b = fedConfig.b

        self._clipWarned = False
        self._rounds = 0

    @property
    def config(self) -> FedConfig:
        return self._config

    @property
    def env(self) -> Environment:
        return self._env

    @property
    def gamma(self) -> float:
        return self._gamma

    @property
    def valueBound(self) -> float:
        """ The upper bound :math:`b` of the action values used by the theoretical score """
        return self._b

    @property
    def rounds(self) -> int:
        """ The number of federation rounds performed """
        return self._rounds

    def query(self, roundId: int, state: np.ndarray, tag: StateTag = StateTag.Current) -> List[np.ndarray]:
        """
        Broadcasts a query state and collects the QVectors of every agent, in ascending agent id order

        :param roundId: The round id
        :param state: The query state
        :param tag: Whether the state is the current or the next server state
        :return: The QVectors
        """
        replies = self._channel.broadcast(QueryState(roundId, SERVER_ID, state=toVector(state), tag=tag))
        return [np.array(replies[agentId].values) for agentId in sorted(replies.keys())]

    def aggregate(self, qs: List[np.ndarray]) -> AggregateStats:
        """ Aggregates the QVectors using the configured optimistic score """

        if self._config.ucbMode == UcbMode.Practical:
            return aggregate(qs, self._config.lam)

        Q = np.array(qs)

        if np.any(Q < 0.0) or np.any(Q > self._b):
            if not self._clipWarned:
                logging.warning('Agent Q-values outside [0, {:g}] are clipped for the theoretical FedUCB score'.format(
                                self._b))
                self._clipWarned = True

            Q = np.clip(Q, 0.0, self._b)

        return theoreticalAggregate(Q, self._config.c, self._b)

    def federationRound(self, roundId: int) -> RoundState:
        """
        Performs a federation round. A round starting from a terminated server episode first resets the server's
        environment. The round ends when the server episode terminates, after :math:`H_{fed}` steps or, under a strict
        budget, once the system budget is exhausted.

        :param roundId: The round id stamped on every message of the round
        :return: The :class:`RoundState` with the trace of the round
        """
        if self._env.isDone:
            self._env.reset()

        roundState = RoundState(roundId, initialState=self._env.state)

        numAgents = self._channel.numAgents

        while not self._env.isDone and roundState.steps < self._config.hFed:

            if not self._ledger.serverMayStep(self._strictBudget):
                logging.debug('\t - system budget exhausted during round {:d}'.format(roundId))
                break

            state = self._env.state

            stats = self.aggregate(self.query(roundId, state, StateTag.Current))
            roundState.broadcasts += 1

            action = selectAction(stats)

            transition = self._env.step(action)
            self._ledger.chargeServer(1)

            qBefore = float(stats.mean[action])

            if not transition.bootstraps(self._bootstrapTruncation):
                qAfter = fedTdUpdate(qBefore, transition.r, [0.0], True, self._config.alphaS, self._gamma)
            else:
                nextStats = aggregate(self.query(roundId, transition.sNext, StateTag.Next), 0.0)
                roundState.broadcasts += 1
                qAfter = fedTdUpdate(qBefore, transition.r, nextStats.mean, False, self._config.alphaS, self._gamma)

            acks = self._channel.broadcast(FedTDTarget(roundId, SERVER_ID, state=toVector(state), action=action,
                                                       target=qAfter))
            roundState.targetBroadcasts += 1

            roundState.trace.append(TraceEntry(state, action, transition.r, qBefore, qAfter, transition.done,
                                               sum(ack.count for ack in acks.values())))

        roundState.terminated = self._env.isDone
        self._rounds += 1

        numBroadcasts = roundState.broadcasts + roundState.targetBroadcasts

        logging.info('Federation round {:d}: {:d} steps, {:d} broadcasts to {:d} agents '
                     '(server {:d}, agents {:d} interactions)'.format(roundId, roundState.steps, numBroadcasts,
                                                                      numAgents, self._ledger.server,
                                                                      self._ledger.agentsConsumed))
        return roundState

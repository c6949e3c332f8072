from typing import Dict


class BudgetLedger:
    """
    Accounts for the environment interactions consumed during an experiment: the self-learning interactions
    :math:`|\\bar{D}_n|` of every agent, the interactions :math:`|\\bar{D}_s|` of the server's own copy of the MDP and,
    separately, the interactions of evaluation episodes which are not charged against any budget.

    Every agent is given a cap of interactions. The system budget is the sum of the caps, so that the accounting
    constraint of the federated objective reads

    .. math::
        |\\bar{D}_s| + \\sum_n |\\bar{D}_n| \\leq N \\cdot cap

    In strict mode the server's interactions are deducted from the remaining system budget so the constraint holds at
    all times. In lenient mode every agent self-learns up to its own cap and the server's cost only appears in the
    adjusted consumption :math:`|\\bar{D}_n| + |\\bar{D}_s| / N`.

    All counters are monotone non-decreasing.
    """

    def __init__(self, numAgents: int, cap: int):

        if numAgents < 1:
            raise ValueError('The ledger requires at least one agent')

        if cap < 0:
            raise ValueError('The budget cap must be non-negative')

        self._numAgents = numAgents
        self._cap = int(cap)
        self._perAgent = {agentId: 0 for agentId in range(1, numAgents + 1)}
        self._server = 0
        self._evaluation = 0

    def __str__(self):
        return 'BudgetLedger <server: {:d}, agents: {:d}, cap: {:d}>'.format(self._server, self.agentsConsumed,
                                                                             self.systemCap)

    @property
    def numAgents(self) -> int:
        return self._numAgents

    @property
    def cap(self) -> int:
        """ The interaction budget of each agent """
        return self._cap

    @property
    def perAgent(self) -> Dict[int, int]:
        """ The interactions consumed by every agent, keyed by agent id """
        return dict(self._perAgent)

    @property
    def server(self) -> int:
        return self._server

    @property
    def evaluation(self) -> int:
        """ Interactions consumed by evaluation episodes, which are not charged """
        return self._evaluation

    @property
    def agentsConsumed(self) -> int:
        return sum(self._perAgent.values())

    @property
    def systemConsumed(self) -> int:
        return self._server + self.agentsConsumed

    @property
    def systemCap(self) -> int:
        return self._numAgents * self._cap

    @property
    def systemRemaining(self) -> int:
        return max(self.systemCap - self.systemConsumed, 0)

    def _checkCount(self, count: int) -> int:
        count = int(count)

        if count < 0:
            raise ValueError('Consumed interactions must be non-negative')

        return count

    def chargeAgent(self, agentId: int, count: int) -> None:

        if agentId not in self._perAgent:
            raise ValueError('Unknown agent {:d}'.format(agentId))

        self._perAgent[agentId] += self._checkCount(count)

    def chargeServer(self, count: int = 1) -> None:
        self._server += self._checkCount(count)

    def chargeEvaluation(self, count: int = 1) -> None:
        self._evaluation += self._checkCount(count)

    def agentRemaining(self, agentId: int, strict: bool = False) -> int:
        """
        The interactions an agent may still consume

        :param agentId: The agent id
        :param strict: Also bounds the agent by the remaining system budget
        :return: The number of remaining interactions
        """
        remaining = max(self._cap - self._perAgent[agentId], 0)

        if strict:
            remaining = min(remaining, self.systemRemaining)

        return remaining

    def serverMayStep(self, strict: bool = False) -> bool:
        """ Whether the server may execute another interaction in its copy of the MDP """
        return not strict or self.systemRemaining > 0

    def adjustedConsumed(self, agentId: int) -> float:
        """ The consumption of an agent including its share of the server's interactions """
        return self._perAgent[agentId] + self._server / self._numAgents

    def meanConsumed(self) -> float:
        """ The average raw consumption per agent """
        return self.agentsConsumed / self._numAgents

    def meanAdjustedConsumed(self) -> float:
        """ The average consumption per agent including the server, :math:`(|\\bar{D}_s| + \\sum_n |\\bar{D}_n|)/N` """
        return self.systemConsumed / self._numAgents

    def exhausted(self, strict: bool = False) -> bool:
        """ True once no agent may consume any further interactions """
        return all(self.agentRemaining(agentId, strict) == 0 for agentId in self._perAgent)

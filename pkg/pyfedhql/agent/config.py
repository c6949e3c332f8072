from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

from ..neural import NetworkSpec


class AgentKind(Enum):
    DQN = 'dqn'
    """ Deep Q-learning with a private dense network, replay buffer and target network """

    Tabular = 'tabular'
    """ Explicit Q-table over the cells of a one-hot encoded state space """


class Exploration(Enum):
    """ The intra-agent exploration strategy """
    Epsilon = 'epsilon'
    UCB = 'ucb'


@dataclass
class AgentConfig:
    """
    The private configuration of a black-box agent :math:`\\mathcal{B}_n`. None of these values are known to the server.
    The network is given in the notation of the agent configuration tables, e.g. `64x64 (Tanh)`.
    """

    network: str = '64x64 (Tanh)'
    lr: float = 0.005
    """ The learning rate :math:`\\alpha_n` used for self-learning """

    epsilon: float = 0.01
    """ The intra-exploration coefficient :math:`\\epsilon_n` """

    improveLr: Optional[float] = None
    """ The improvement step size :math:`\\tilde{\\alpha}_n` (defaults to :attr:`lr`) """

    kappa: int = 64
    """ Number of individual improvement gradient steps per received FedTD target """

    replayCapacity: int = 10000
    batchSize: int = 128
    targetSyncEvery: int = 1000
    """ Environment steps between copies of the online weights to the target network """

    selfLearnSteps: Optional[int] = None
    """ Per-agent override of the length of a self-learning phase """

    kind: AgentKind = AgentKind.DQN
    exploration: Exploration = Exploration.Epsilon
    ucbC: float = 1.0
    """ Confidence constant :math:`c` of count-based UCB exploration (tabular agents only) """

    maxGradNorm: float = 10.0
    """ Global gradient norm clipping of the DQN update. A non-positive value disables clipping """

    @property
    def improvementLr(self) -> float:
        return self.lr if self.improveLr is None else self.improveLr

    def networkSpec(self, inputDim: int, outputDim: int, initSeed: int = 0) -> NetworkSpec:
        return NetworkSpec.parse(self.network, inputDim, outputDim, initSeed)

    def validate(self, prefix: str = 'agent') -> List[str]:
        errors = []

        if self.lr <= 0.0:
            errors.append('{:s}.lr must be positive'.format(prefix))

        if not 0.0 <= self.epsilon <= 1.0:
            errors.append('{:s}.epsilon must lie in [0,1]'.format(prefix))

        if self.improveLr is not None and self.improveLr <= 0.0:
            errors.append('{:s}.improve_lr must be positive'.format(prefix))

        if self.kappa < 0:
            errors.append('{:s}.kappa must be non-negative'.format(prefix))

        if self.replayCapacity < 1:
            errors.append('{:s}.replay_capacity must be positive'.format(prefix))

        if self.batchSize < 1 or self.batchSize > self.replayCapacity:
            errors.append('{:s}.batch_size must lie in [1, replay_capacity]'.format(prefix))

        if self.targetSyncEvery < 1:
            errors.append('{:s}.target_sync_every must be positive'.format(prefix))

        if self.selfLearnSteps is not None and self.selfLearnSteps < 1:
            errors.append('{:s}.self_learn_steps must be positive'.format(prefix))

        if self.exploration == Exploration.UCB and self.kind != AgentKind.Tabular:
            errors.append('{:s}: ucb exploration is only available for tabular agents'.format(prefix))

        if self.kind == AgentKind.DQN:
            try:
                errors += ['{:s}: {:s}'.format(prefix, e) for e in self.networkSpec(1, 1).validate()]
            except ValueError as e:
                errors.append('{:s}.network: {:s}'.format(prefix, str(e)))

        return errors

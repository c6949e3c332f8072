from typing import Optional, Tuple

import numpy as np

from .environment import Environment, EnvConfig


class ChainMDP(Environment):
    """
    A deterministic chain of :math:`n` cells used as an analytically solvable target. The agent always starts at cell
    `0`. Action :attr:`LEFT` moves one cell left (clamped at cell `0`) and :attr:`RIGHT` moves one cell right.
    Reaching the last cell :math:`n-1` terminates the episode with reward `1`; every other transition has reward `0`.

    The state is a one-hot vector over the :math:`n` cells, so the optimal action value of moving right from cell
    :math:`k` is :math:`Q^*(k, \\text{right}) = \\gamma^{n-2-k}`.
    """

    LEFT = 0
    RIGHT = 1

    def __init__(self, config: EnvConfig, generator: Optional[np.random.Generator] = None):

        if config.chainLength < 2:
            raise ValueError('ChainMDP requires at least 2 cells')

        super().__init__(config, generator)

    @property
    def length(self) -> int:
        """ The number of cells :math:`n` in the chain """
        return self._config.chainLength

    @property
    def stateDim(self) -> int:
        return self.length

    @property
    def numActions(self) -> int:
        return 2

    @property
    def rewardBound(self) -> float:
        return 1.0

    @property
    def cell(self) -> int:
        """ The index of the current cell """
        return int(np.argmax(self._state))

    def oneHot(self, cell: int) -> np.ndarray:
        state = np.zeros(self.length, dtype=np.float64)
        state[cell] = 1.0
        return state

    def setCell(self, cell: int) -> np.ndarray:
        """
        Places the agent at a given cell within a fresh episode. This is used for constructing exact test cases.

        :param cell: The cell index
        :return: The one-hot state
        """
        self.reset()
        self._state = self.oneHot(cell)
        return self._state.copy()

    def _initialState(self) -> np.ndarray:
        return self.oneHot(0)

    def _nextCell(self, cell: int, action: int) -> int:
        if action == ChainMDP.RIGHT:
            return min(cell + 1, self.length - 1)

        return max(cell - 1, 0)

    def _transition(self, state: np.ndarray, action: int):

        nextCell = self._nextCell(int(np.argmax(state)), action)
        terminal = nextCell == self.length - 1

        return self.oneHot(nextCell), 1.0 if terminal else 0.0, terminal

    def transitionModel(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        The tabular model of the chain

        :return: A tuple of the transition tensor :math:`P[s,a,s']`, expected rewards :math:`R[s,a]` and the boolean
                 terminal mask over the cells
        """
        n = self.length

        P = np.zeros((n, 2, n))
        R = np.zeros((n, 2))
        terminal = np.zeros(n, dtype=bool)
        terminal[n - 1] = True

        for cell in range(n - 1):
            for action in (ChainMDP.LEFT, ChainMDP.RIGHT):
                nextCell = self._nextCell(cell, action)
                P[cell, action, nextCell] = 1.0
                R[cell, action] = 1.0 if nextCell == n - 1 else 0.0

        return P, R, terminal

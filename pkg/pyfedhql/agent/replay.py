from typing import List, Tuple

import numpy as np

from ..env import Transition


class ReplayBuffer:
    """
    A fixed capacity ring buffer housing the private experience :math:`D_n` of a single agent. Once the capacity is
    reached the oldest transition is evicted first. The buffer is never read by any party other than its owner.
    """

    def __init__(self, capacity: int, stateDim: int):

        if capacity < 1:
            raise ValueError('Replay buffer capacity must be positive')

        self._capacity = capacity
        self._states = np.zeros((capacity, stateDim))
        self._nextStates = np.zeros((capacity, stateDim))
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity)
        self._dones = np.zeros(capacity, dtype=bool)
        self._terminals = np.zeros(capacity, dtype=bool)

        self._pos = 0
        self._size = 0

    def __len__(self):
        return self._size

    @property
    def capacity(self) -> int:
        return self._capacity

    def add(self, transition: Transition) -> None:
        i = self._pos

        self._states[i] = transition.s
        self._nextStates[i] = transition.sNext
        self._actions[i] = transition.a
        self._rewards[i] = transition.r
        self._dones[i] = transition.done
        self._terminals[i] = transition.terminal

        self._pos = (self._pos + 1) % self._capacity
        self._size = min(self._size + 1, self._capacity)

    def sample(self, rng: np.random.Generator, batchSize: int,
               bootstrapTruncation: bool = False) -> Tuple[np.ndarray, ...]:
        """
        Samples a minibatch uniformly with replacement

        :param rng: The owner's private random stream
        :param batchSize: The number of transitions
        :param bootstrapTruncation: Mask only terminal transitions rather than every done transition
        :return: A tuple of arrays (states, actions, rewards, next states, no-bootstrap mask)
        """
        if self._size == 0:
            raise ValueError('Cannot sample from an empty replay buffer')

        idx = rng.integers(0, self._size, size=batchSize)

        noBootstrap = self._terminals[idx] if bootstrapTruncation else self._dones[idx]

        return self._states[idx], self._actions[idx], self._rewards[idx], self._nextStates[idx], noBootstrap

    def transitions(self) -> List[Transition]:
        """ The stored transitions ordered from the oldest to the newest """
        start = self._pos if self._size == self._capacity else 0
        order = [(start + k) % self._capacity for k in range(self._size)]

        return [Transition(self._states[i].copy(), int(self._actions[i]), self._nextStates[i].copy(),
                           float(self._rewards[i]), bool(self._dones[i]), bool(self._terminals[i])) for i in order]

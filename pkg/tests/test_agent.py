# -*- coding: utf-8 -*-
from .context import pyfedhql

import unittest

import numpy as np

from pyfedhql.agent import AgentConfig, AgentKind, DQNAgent, Exploration, ReplayBuffer, TabularAgent, createAgent
from pyfedhql.env import CartPole, ChainMDP, EnvConfig, EnvironmentKind, Transition, chainOptimalQ, makeGenerator


def smallDqnConfig(**kwargs) -> AgentConfig:
    params = dict(network='8 (Tanh)', lr=0.01, epsilon=0.1, kappa=4, replayCapacity=100, batchSize=8,
                  targetSyncEvery=20)
    params.update(kwargs)
    return AgentConfig(**params)


class ReplayBufferTestSuite(unittest.TestCase):

    def transition(self, i: int, terminal: bool = False) -> Transition:
        return Transition(np.full(2, float(i)), i % 2, np.full(2, float(i + 1)), float(i), terminal, terminal)

    def test_ring_eviction(self):
        buffer = ReplayBuffer(3, 2)

        for i in range(5):
            buffer.add(self.transition(i))

        self.assertEqual(len(buffer), 3)
        self.assertEqual([t.r for t in buffer.transitions()], [2.0, 3.0, 4.0])

    def test_sample(self):
        buffer = ReplayBuffer(10, 2)
        buffer.add(self.transition(0))
        buffer.add(self.transition(1, terminal=True))

        states, actions, rewards, nextStates, terminals = buffer.sample(makeGenerator(0), 16)

        self.assertEqual(states.shape, (16, 2))
        np.testing.assert_array_equal(terminals, rewards == 1.0)
        np.testing.assert_array_equal(nextStates[:, 0], states[:, 0] + 1.0)

    def test_sample_masks_truncation(self):
        buffer = ReplayBuffer(4, 2)
        buffer.add(Transition(np.zeros(2), 0, np.ones(2), 0.0, True, False))

        noBootstrap = buffer.sample(makeGenerator(0), 4)[-1]
        self.assertTrue(np.all(noBootstrap))

        noBootstrap = buffer.sample(makeGenerator(0), 4, bootstrapTruncation=True)[-1]
        self.assertFalse(np.any(noBootstrap))

    def test_empty(self):
        with self.assertRaises(ValueError):
            ReplayBuffer(4, 2).sample(makeGenerator(0), 1)

        with self.assertRaises(ValueError):
            ReplayBuffer(0, 2)


class AgentConfigTestSuite(unittest.TestCase):

    def test_defaults_valid(self):
        self.assertEqual(AgentConfig().validate(), [])
        self.assertEqual(AgentConfig().improvementLr, AgentConfig().lr)

    def test_invalid(self):
        config = AgentConfig(lr=0.0, epsilon=1.5, kappa=-1, batchSize=200, replayCapacity=100, network='x')
        self.assertEqual(len(config.validate()), 5)

    def test_ucb_requires_tabular(self):
        self.assertEqual(len(AgentConfig(exploration=Exploration.UCB).validate()), 1)
        self.assertEqual(AgentConfig(kind=AgentKind.Tabular, exploration=Exploration.UCB).validate(), [])


class DQNAgentTestSuite(unittest.TestCase):

    def setUp(self):
        self.agent = createAgent(1, smallDqnConfig(), 4, 2, 0.99, 0)
        self.env = CartPole(EnvConfig(), makeGenerator(1))

    def test_factory(self):
        self.assertIsInstance(self.agent, DQNAgent)
        self.assertIsInstance(createAgent(2, AgentConfig(kind=AgentKind.Tabular), 5, 2, 0.9, 0), TabularAgent)

    def test_self_learn_consumes_steps(self):
        consumed = self.agent.selfLearn(self.env, 50)

        self.assertEqual(consumed, 50)
        self.assertEqual(self.agent.interactions, 50)
        self.assertEqual(len(self.agent.replayBuffer), 50)

    def test_self_learn_respects_budget(self):
        self.assertEqual(self.agent.selfLearn(self.env, 50, budget=7), 7)
        self.assertEqual(self.agent.selfLearn(self.env, 50, budget=0), 0)
        self.assertEqual(self.agent.interactions, 7)

    def test_self_learn_reproducible(self):
        other = createAgent(1, smallDqnConfig(), 4, 2, 0.99, 0)

        self.agent.selfLearn(self.env, 40)
        other.selfLearn(CartPole(EnvConfig(), makeGenerator(1)), 40)

        self.assertEqual(self.agent.weights, other.weights)

    def test_answer_query_has_no_side_effects(self):
        self.agent.selfLearn(self.env, 20)
        weights = self.agent.weights.copy()
        interactions = self.agent.interactions

        state = np.array([0.01, -0.02, 0.03, 0.0])
        first = self.agent.answerQuery(state)
        second = self.agent.answerQuery(state)

        np.testing.assert_array_equal(first, second)
        self.assertEqual(self.agent.weights, weights)
        self.assertEqual(self.agent.interactions, interactions)

    def test_answer_query_wrong_dimension(self):
        with self.assertRaises(ValueError):
            self.agent.answerQuery(np.zeros(3))

    def test_improve_moves_towards_target(self):
        state = np.array([0.01, -0.02, 0.03, 0.0])
        before = abs(5.0 - self.agent.answerQuery(state)[1])

        steps = self.agent.improve(state, 1, 5.0)

        self.assertEqual(steps, 4)
        self.assertEqual(self.agent.improvementSteps, 4)
        self.assertLess(abs(5.0 - self.agent.answerQuery(state)[1]), before)

    def test_improve_zero_kappa_unchanged(self):
        agent = createAgent(1, smallDqnConfig(kappa=0), 4, 2, 0.99, 0)
        weights = agent.weights.copy()

        self.assertEqual(agent.improve(np.zeros(4), 0, 10.0), 0)
        self.assertEqual(agent.weights, weights)

    def test_improve_invalid(self):
        with self.assertRaises(ValueError):
            self.agent.improve(np.zeros(4), 2, 1.0)

        with self.assertRaises(ValueError):
            self.agent.improve(np.zeros(4), 0, np.nan)

    def test_td_targets(self):
        rewards = np.array([1.0, 1.0])
        nextStates = np.zeros((2, 4))
        nextMax = self.agent.answerQuery(np.zeros(4)).max()

        targets = self.agent.tdTargets(rewards, nextStates, np.array([True, False]))

        self.assertEqual(targets[0], 1.0)
        self.assertAlmostEqual(targets[1], 1.0 + 0.99 * nextMax)

    def test_improve_error_decreases_every_step(self):
        rng = makeGenerator(11)
        config = AgentConfig(network='16x16 (Tanh)', improveLr=1e-3, kappa=1)

        for i in range(100):
            agent = createAgent(1, config, 4, 2, 0.99, i)
            state = rng.normal(size=4)
            action = int(rng.integers(0, 2))
            target = float(rng.normal() * 2.0)

            error = abs(target - agent.answerQuery(state)[action])

            for step in range(64):
                agent.improve(state, action, target)
                newError = abs(target - agent.answerQuery(state)[action])

                self.assertLess(newError, error)
                error = newError

    def test_improve_single_step_output_layer(self):
        agent = createAgent(1, smallDqnConfig(network='3 (Tanh)', improveLr=0.01, kappa=1), 2, 2, 0.99, 5)
        state = np.array([0.3, -0.7])
        action, target = 1, 2.0

        # With a zero output row the hidden layer receives no gradient and Q(s, a) is linear in that row
        weights = agent.weights.copy()
        weights.matrices[-1][action] = 0.0
        weights.biases[-1][action] = 0.0
        agent.weights = weights

        h = np.tanh(weights.matrices[0] @ state + weights.biases[0])

        self.assertEqual(agent.answerQuery(state)[action], 0.0)

        agent.improve(state, action, target)

        expected = 2.0 * 0.01 * target * (np.dot(h, h) + 1.0)
        self.assertAlmostEqual(agent.answerQuery(state)[action], expected, places=12)

    def test_exploration_rate(self):
        agent = createAgent(1, smallDqnConfig(epsilon=1.0), 4, 2, 0.99, 3)
        actions = [agent.act(np.zeros(4)) for i in range(2000)]

        self.assertGreater(np.mean(actions), 0.4)
        self.assertLess(np.mean(actions), 0.6)

    def test_greedy_without_exploration(self):
        agent = createAgent(1, smallDqnConfig(epsilon=0.0), 4, 2, 0.99, 3)
        state = np.array([0.1, 0.0, -0.1, 0.0])

        self.assertTrue(all(agent.act(state) == agent.greedyAction(state) for i in range(20)))


class TabularAgentTestSuite(unittest.TestCase):

    def setUp(self):
        self.config = EnvConfig(kind=EnvironmentKind.ChainMDP, chainLength=5, gamma=0.9, horizon=50)

    def test_converges_to_optimal(self):
        config = EnvConfig(kind=EnvironmentKind.ChainMDP, chainLength=5, gamma=0.9, horizon=1000)
        agent = createAgent(1, AgentConfig(kind=AgentKind.Tabular, lr=0.5, epsilon=1.0), 5, 2, 0.9, 0)
        agent.selfLearn(ChainMDP(config, makeGenerator(0)), 10000)

        qStar = chainOptimalQ(5, 0.9)
        self.assertLessEqual(np.max(np.abs(agent.table[:-1] - qStar[:-1])), 0.05)

    def test_epsilon_greedy_learns_optimal_values(self):
        agent = createAgent(1, AgentConfig(kind=AgentKind.Tabular, lr=0.5, epsilon=0.3), 5, 2, 0.9, 0)
        agent.selfLearn(ChainMDP(self.config, makeGenerator(0)), 10000)

        for k in range(4):
            self.assertAlmostEqual(np.max(agent.table[k]), 0.9 ** (3 - k), delta=0.05)

    def test_truncation_does_not_bootstrap(self):
        config = EnvConfig(kind=EnvironmentKind.ChainMDP, chainLength=5, gamma=0.9, horizon=1)
        agentConfig = AgentConfig(kind=AgentKind.Tabular, lr=1.0, epsilon=0.0)

        # The greedy tie picks LEFT, so the single step stays in cell 0 and is truncated
        agent = TabularAgent(1, agentConfig, 5, 2, 0.9, makeGenerator(0), initialTable=np.ones((5, 2)))
        agent.selfLearn(ChainMDP(config), 1)
        self.assertEqual(agent.table[0, ChainMDP.LEFT], 0.0)

        agent = TabularAgent(1, agentConfig, 5, 2, 0.9, makeGenerator(0), initialTable=np.ones((5, 2)),
                             bootstrapTruncation=True)
        agent.selfLearn(ChainMDP(config), 1)
        self.assertAlmostEqual(agent.table[0, ChainMDP.LEFT], 0.9)

    def test_ucb_tries_every_action(self):
        agent = createAgent(1, AgentConfig(kind=AgentKind.Tabular, exploration=Exploration.UCB), 5, 2, 0.9, 0)
        env = ChainMDP(self.config, makeGenerator(0))

        agent.selfLearn(env, 200)

        self.assertGreater(np.max(agent.table[:, ChainMDP.RIGHT]), 0.0)

    def test_improve_is_exact_regression(self):
        config = AgentConfig(kind=AgentKind.Tabular, kappa=1, lr=0.1, improveLr=0.5)
        agent = TabularAgent(1, config, 5, 2, 0.9, makeGenerator(0))
        state = np.eye(5)[2]

        agent.improve(state, 1, 0.8)

        # A step of 2 * 0.5 on (y - Q)^2 lands on the target
        self.assertAlmostEqual(agent.table[2, 1], 0.8)
        self.assertEqual(np.count_nonzero(agent.table), 1)

    def test_initial_table_shape(self):
        with self.assertRaises(ValueError):
            TabularAgent(1, AgentConfig(kind=AgentKind.Tabular), 5, 2, 0.9, makeGenerator(0),
                         initialTable=np.zeros((4, 2)))


if __name__ == '__main__':
    unittest.main()

# -*- coding: utf-8 -*-
from .context import pyfedhql

import unittest

import numpy as np
import pandas as pd

from pyfedhql.agent import AgentConfig, AgentKind, TabularAgent, createAgent
from pyfedhql.config import ExperimentConfig
from pyfedhql.env import CartPole, ChainMDP, EnvConfig, EnvironmentKind, makeGenerator
from pyfedhql.federation import FedConfig, UcbMode
from pyfedhql.orchestrator import CURVE_COLUMNS, SYSTEM_ID, BudgetLedger, Experiment, FedServer, Transport
from pyfedhql.transport import AgentWorker, InProcessChannel


def chainConfig(**kwargs) -> ExperimentConfig:
    params = dict(env=EnvConfig(kind=EnvironmentKind.ChainMDP, chainLength=5, gamma=0.9, horizon=20),
                  agents=[AgentConfig(kind=AgentKind.Tabular, lr=0.5, epsilon=0.5, kappa=2),
                          AgentConfig(kind=AgentKind.Tabular, lr=0.1, epsilon=0.2, kappa=1, selfLearnSteps=50)],
                  fed=FedConfig(lam=1.0, alphaS=0.5, hFed=4),
                  budgetPerAgent=400, selfLearnSteps=100, evalEvery=200, evalEpisodes=2, seeds=[0], timeout=10.0)
    params.update(kwargs)
    return ExperimentConfig(**params)


class BudgetLedgerTestSuite(unittest.TestCase):

    def setUp(self):
        self.ledger = BudgetLedger(2, 100)

    def test_charges(self):
        self.ledger.chargeAgent(1, 60)
        self.ledger.chargeAgent(2, 30)
        self.ledger.chargeServer(10)
        self.ledger.chargeEvaluation(500)

        self.assertEqual(self.ledger.perAgent, {1: 60, 2: 30})
        self.assertEqual(self.ledger.agentsConsumed, 90)
        self.assertEqual(self.ledger.systemConsumed, 100)
        self.assertEqual(self.ledger.systemRemaining, 100)
        self.assertEqual(self.ledger.evaluation, 500)
        self.assertAlmostEqual(self.ledger.adjustedConsumed(1), 65.0)
        self.assertAlmostEqual(self.ledger.meanConsumed(), 45.0)
        self.assertAlmostEqual(self.ledger.meanAdjustedConsumed(), 50.0)

    def test_remaining(self):
        self.ledger.chargeAgent(1, 100)
        self.ledger.chargeServer(90)

        self.assertEqual(self.ledger.agentRemaining(1), 0)
        self.assertEqual(self.ledger.agentRemaining(2), 100)
        self.assertEqual(self.ledger.agentRemaining(2, strict=True), 10)
        self.assertTrue(self.ledger.serverMayStep(strict=True))

        self.ledger.chargeAgent(2, 10)

        self.assertTrue(self.ledger.exhausted(strict=True))
        self.assertFalse(self.ledger.exhausted())
        self.assertFalse(self.ledger.serverMayStep(strict=True))
        self.assertTrue(self.ledger.serverMayStep())

    def test_invalid(self):
        with self.assertRaises(ValueError):
            self.ledger.chargeAgent(3, 1)

        with self.assertRaises(ValueError):
            self.ledger.chargeServer(-1)

        with self.assertRaises(ValueError):
            BudgetLedger(0, 10)


class FedServerTestSuite(unittest.TestCase):

    def setUp(self):
        self.config = EnvConfig(kind=EnvironmentKind.ChainMDP, chainLength=5, gamma=0.9, horizon=50)

    def test_bellman_backups(self):
        table = makeGenerator(3).uniform(size=(5, 2))
        agent = TabularAgent(1, AgentConfig(kind=AgentKind.Tabular, kappa=0), 5, 2, 0.9, makeGenerator(0),
                             initialTable=table)

        ledger = BudgetLedger(1, 100)

        with InProcessChannel([AgentWorker(agent, ChainMDP(self.config, makeGenerator(1)))]) as channel:
            server = FedServer(channel, ChainMDP(self.config, makeGenerator(2)), FedConfig(lam=0.0, alphaS=1.0,
                                                                                          hFed=16), ledger)
            roundState = server.federationRound(1)

        self.assertGreater(roundState.steps, 0)
        self.assertEqual(ledger.server, roundState.steps)

        for entry in roundState.trace:
            cell = int(np.argmax(entry.state))
            nextCell = min(cell + 1, 4) if entry.action == ChainMDP.RIGHT else max(cell - 1, 0)
            bootstrap = 0.0 if nextCell == 4 else 0.9 * np.max(table[nextCell])

            self.assertEqual(entry.action, int(np.argmax(table[cell])))
            self.assertAlmostEqual(entry.qBefore, table[cell, entry.action])
            self.assertAlmostEqual(entry.qAfter, entry.reward + bootstrap)

    def test_terminal_step_skips_next_query(self):
        config = EnvConfig(kind=EnvironmentKind.ChainMDP, chainLength=2, gamma=0.9, horizon=10)
        table = np.array([[0.0, 0.5], [0.0, 0.0]])
        agent = TabularAgent(1, AgentConfig(kind=AgentKind.Tabular, kappa=1, lr=0.5), 2, 2, 0.9, makeGenerator(0),
                             initialTable=table)

        with InProcessChannel([AgentWorker(agent, ChainMDP(config))]) as channel:
            server = FedServer(channel, ChainMDP(config), FedConfig(lam=0.0, alphaS=0.5, hFed=16),
                               BudgetLedger(1, 100))
            roundState = server.federationRound(1)

        self.assertEqual(roundState.steps, 1)
        self.assertEqual(roundState.broadcasts, 1)
        self.assertEqual(roundState.targetBroadcasts, 1)
        self.assertTrue(roundState.terminated)
        self.assertAlmostEqual(roundState.trace[0].qAfter, 0.5 + 0.5 * (1.0 - 0.5))

        # Improvement regressed the agent's entry onto the target
        self.assertAlmostEqual(agent.table[0, 1], 0.75)

    def test_truncated_step_bootstrap_modes(self):
        config = EnvConfig(kind=EnvironmentKind.ChainMDP, chainLength=5, gamma=0.9, horizon=1)
        table = np.zeros((5, 2))
        table[0] = [0.0, 0.5]
        table[1] = [0.0, 0.8]

        def runRound(bootstrapTruncation: bool):
            agent = TabularAgent(1, AgentConfig(kind=AgentKind.Tabular, kappa=0), 5, 2, 0.9, makeGenerator(0),
                                 initialTable=table)

            with InProcessChannel([AgentWorker(agent, ChainMDP(config))]) as channel:
                server = FedServer(channel, ChainMDP(config), FedConfig(lam=0.0, alphaS=0.5, hFed=16),
                                   BudgetLedger(1, 100), bootstrapTruncation=bootstrapTruncation)
                return server.federationRound(1)

        # RIGHT from cell 0 reaches cell 1 and the horizon ends the episode there
        roundState = runRound(False)
        self.assertEqual(roundState.steps, 1)
        self.assertEqual(roundState.broadcasts, 1)
        self.assertTrue(roundState.terminated)
        self.assertAlmostEqual(roundState.trace[0].qAfter, 0.5 + 0.5 * (0.0 - 0.5))

        roundState = runRound(True)
        self.assertEqual(roundState.steps, 1)
        self.assertEqual(roundState.broadcasts, 2)
        self.assertTrue(roundState.terminated)
        self.assertAlmostEqual(roundState.trace[0].qAfter, 0.5 + 0.5 * (0.9 * 0.8 - 0.5))

    def test_exhausted_budget_gives_empty_round(self):
        ledger = BudgetLedger(1, 10)
        ledger.chargeAgent(1, 10)

        agent = createAgent(1, AgentConfig(kind=AgentKind.Tabular), 5, 2, 0.9, 0)

        with InProcessChannel([AgentWorker(agent, ChainMDP(self.config))]) as channel:
            server = FedServer(channel, ChainMDP(self.config), FedConfig(), ledger, strictBudget=True)
            roundState = server.federationRound(1)

        self.assertEqual(roundState.steps, 0)
        self.assertEqual(roundState.broadcasts, 0)
        self.assertEqual(ledger.server, 0)

    def test_federation_horizon(self):
        agentConfig = AgentConfig(network='8 (Tanh)', epsilon=1.0, kappa=2, batchSize=8)
        workers = [AgentWorker(createAgent(k, agentConfig, 4, 2, 0.99, k), CartPole(EnvConfig(), makeGenerator(k)))
                   for k in (1, 2, 3)]
        ledger = BudgetLedger(3, 1000)

        with InProcessChannel(workers) as channel:
            server = FedServer(channel, CartPole(EnvConfig(), makeGenerator(9)), FedConfig(hFed=16), ledger)

            for roundId in range(1, 6):
                roundState = server.federationRound(roundId)

                self.assertLessEqual(roundState.steps, 16)
                self.assertLessEqual(roundState.broadcasts, 2 * roundState.steps)
                self.assertEqual(roundState.targetBroadcasts, roundState.steps)
                self.assertTrue(roundState.steps == 16 or roundState.terminated)
                self.assertTrue(all(entry.improvementSteps == 6 for entry in roundState.trace))

        self.assertEqual(server.rounds, 5)

    def test_theoretical_mode_clips(self):
        agent = TabularAgent(1, AgentConfig(kind=AgentKind.Tabular, kappa=0), 5, 2, 0.9, makeGenerator(0),
                             initialTable=np.full((5, 2), 50.0))

        with InProcessChannel([AgentWorker(agent, ChainMDP(self.config))]) as channel:
            server = FedServer(channel, ChainMDP(self.config), FedConfig(ucbMode=UcbMode.Theoretical),
                               BudgetLedger(1, 100))

            with self.assertLogs(level='WARNING'):
                stats = server.aggregate([np.array([50.0, -1.0])])

        self.assertAlmostEqual(stats.mean[0], server.valueBound)
        self.assertAlmostEqual(stats.mean[1], 0.0)


class ExperimentTestSuite(unittest.TestCase):

    def test_curves(self):
        experiment = Experiment(chainConfig(), 0)
        curves = experiment.run()

        self.assertEqual(list(curves.columns), CURVE_COLUMNS)
        self.assertEqual(len(curves), 12)
        self.assertEqual(list(curves['agent_id'].unique()), ['1', '2', SYSTEM_ID])
        self.assertEqual(list(curves[curves['agent_id'] == '1']['consumed']), [200, 200, 400, 400])
        self.assertTrue(curves['window_mean'].isna().all())
        self.assertEqual(experiment.server.rounds, 8)

    def test_budget_conservation(self):
        experiment = Experiment(chainConfig(), 1)
        experiment.run()
        ledger = experiment.ledger

        self.assertEqual(ledger.perAgent, {1: 400, 2: 400})
        self.assertGreater(ledger.server, 0)
        self.assertEqual(ledger.server + ledger.agentsConsumed + ledger.evaluation, experiment.environmentSteps)

    def test_strict_budget(self):
        experiment = Experiment(chainConfig(strictBudget=True), 0)
        experiment.run()
        ledger = experiment.ledger

        self.assertLessEqual(ledger.systemConsumed, ledger.systemCap)
        self.assertLess(ledger.agentsConsumed, 800)

    def test_deterministic(self):
        first = Experiment(chainConfig(), 4).run()
        second = Experiment(chainConfig(), 4).run()

        pd.testing.assert_frame_equal(first, second)

    def test_transports_agree(self):
        inproc = Experiment(chainConfig(), 2, Transport.InProcess).run()
        tcp = Experiment(chainConfig(), 2, Transport.Tcp).run()

        pd.testing.assert_frame_equal(inproc, tcp)

    def test_no_op_federation_matches_baseline(self):
        config = chainConfig(agents=[AgentConfig(kind=AgentKind.Tabular, lr=0.5, epsilon=0.5, kappa=0)],
                             fed=FedConfig(lam=0.0, alphaS=0.0, hFed=4))

        federated = Experiment(config, 3, federated=True).run()
        baselineExperiment = Experiment(config, 3, federated=False)
        baseline = baselineExperiment.run()

        self.assertIsNone(baselineExperiment.server)

        for column in ('agent_id', 'consumed', 'episode_return'):
            self.assertEqual(list(federated[column]), list(baseline[column]))


if __name__ == '__main__':
    unittest.main()

# -*- coding: utf-8 -*-
from .context import pyfedhql

import os
import tempfile
import unittest

from pyfedhql.agent import AgentKind, Exploration
from pyfedhql.config import (ConfigError, ExperimentConfig, dumpConfig, loadConfig, parseConfig, saveConfig,
                             validateConfig, withOverrides)
from pyfedhql.env import EnvironmentKind
from pyfedhql.federation import UcbMode

CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')

MINIMAL = """
[experiment]
budget_per_agent = 1000

[env]
kind = ChainMDP
chain_length = 4

[federation]
lambda = 3 # inter-agent exploration

[agent.1]
kind = tabular
"""


class ConfigTestSuite(unittest.TestCase):

    def test_shipped_configs(self):
        table1 = loadConfig(os.path.join(CONFIG_DIR, 'table1.cfg'))
        table2 = loadConfig(os.path.join(CONFIG_DIR, 'table2.cfg'))
        chain = loadConfig(os.path.join(CONFIG_DIR, 'chain.cfg'))

        self.assertEqual(table1.numAgents, 5)
        self.assertEqual(table2.numAgents, 10)
        self.assertEqual(table1.agents[0].network, '64x64 (Tanh)')
        self.assertEqual(table1.env.kind, EnvironmentKind.CartPole)
        self.assertEqual(table1.fed.hFed, 16)
        self.assertEqual(table1.env.gamma, 0.99)
        self.assertEqual(table2.env.gamma, 0.99)
        self.assertEqual(chain.agents[2].exploration, Exploration.UCB)

    def test_round_trip(self):
        for name in ('table1.cfg', 'table2.cfg', 'chain.cfg'):
            config = loadConfig(os.path.join(CONFIG_DIR, name))
            self.assertEqual(parseConfig(dumpConfig(config)), config)

    def test_minimal(self):
        config = parseConfig(MINIMAL)

        self.assertEqual(config.budgetPerAgent, 1000)
        self.assertEqual(config.env.chainLength, 4)
        self.assertEqual(config.fed.lam, 3.0)
        self.assertEqual(config.fed.ucbMode, UcbMode.Practical)
        self.assertEqual(config.agents[0].kind, AgentKind.Tabular)
        self.assertEqual(config.agentSelfLearnSteps(1), config.selfLearnSteps)
        self.assertFalse(config.bootstrapTruncation)

    def test_bootstrap_truncation(self):
        text = MINIMAL.replace('budget_per_agent = 1000', 'budget_per_agent = 1000\nbootstrap_truncation = yes')
        config = parseConfig(text)

        self.assertTrue(config.bootstrapTruncation)
        self.assertIn('bootstrap_truncation = true', dumpConfig(config))
        self.assertEqual(parseConfig(dumpConfig(config)), config)

    def test_save(self):
        config = parseConfig(MINIMAL)

        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'config.cfg')
            saveConfig(config, path)

            self.assertEqual(loadConfig(path), config)

    def test_parse_errors_enumerated(self):
        text = MINIMAL.replace('[federation]', '[federation]\nh_fed = many\nbogus = 1') + '\n[agent.3]\n\n[extra]\n'

        with self.assertRaises(ConfigError) as context:
            parseConfig(text)

        errors = context.exception.errors
        self.assertEqual(len(errors), 4)
        self.assertTrue(any('h_fed' in e for e in errors))
        self.assertTrue(any('bogus' in e for e in errors))
        self.assertTrue(any('[extra]' in e for e in errors))
        self.assertTrue(any('consecutively' in e for e in errors))

    def test_missing_section(self):
        with self.assertRaises(ConfigError) as context:
            parseConfig('[experiment]\n[agent.1]\n')

        self.assertEqual(len(context.exception.errors), 2)

    def test_validation_errors_enumerated(self):
        text = MINIMAL.replace('lambda = 3', 'lambda = -1').replace('kind = tabular', 'kind = tabular\nkappa = -2')

        with self.assertRaises(ConfigError) as context:
            parseConfig(text)

        self.assertEqual(len(context.exception.errors), 2)

    def test_tabular_requires_chain(self):
        config = parseConfig(MINIMAL.replace('kind = ChainMDP', 'kind = CartPole'), validate=False)

        with self.assertRaises(ConfigError):
            validateConfig(config)

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            loadConfig('does-not-exist.cfg')

    def test_overrides(self):
        config = parseConfig(MINIMAL)
        updated = withOverrides(config, lam=5.0, ucbMode=UcbMode.Theoretical, seeds=[7], outputDir=None)

        self.assertEqual(updated.fed.lam, 5.0)
        self.assertEqual(updated.fed.ucbMode, UcbMode.Theoretical)
        self.assertEqual(updated.seeds, [7])
        self.assertEqual(updated.outputDir, config.outputDir)
        self.assertEqual(config.fed.lam, 3.0)

    def test_defaults(self):
        config = ExperimentConfig()

        self.assertEqual(config.budgetPerAgent, 200000)
        self.assertEqual(config.selfLearnSteps, 5000)
        validateConfig(config)


if __name__ == '__main__':
    unittest.main()

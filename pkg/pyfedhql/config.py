"""
Reading and writing experiment configurations. A configuration is a plain-text INI file with an ``[experiment]``,
``[env]`` and ``[federation]`` section followed by one ``[agent.<k>]`` section per agent, numbered from 1. Agent
networks are given in the notation ``64x64 (Tanh)``. See ``docs/config.rst`` for the complete grammar.
"""

import configparser
import dataclasses
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .agent import AgentConfig, AgentKind, Exploration
from .env import EnvConfig, EnvironmentKind
from .federation import FedConfig, UcbMode

FULL_SCALE_BUDGET = 2000000
""" The per-agent interaction budget of the full scale CartPole experiments """

DESK_SCALE_BUDGET = 200000


class ConfigError(ValueError):
    """ Raised with every violated constraint of a configuration """

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__('Invalid configuration:\n' + '\n'.join('\t - {:s}'.format(e) for e in self.errors))


@dataclass
class ExperimentConfig:
    """
    The complete description of an experiment: the task, the heterogeneous agents, the server and the budget.
    """

    env: EnvConfig = field(default_factory=EnvConfig)
    agents: List[AgentConfig] = field(default_factory=lambda: [AgentConfig()])
    fed: FedConfig = field(default_factory=FedConfig)

    name: str = 'fedhql'
    budgetPerAgent: int = DESK_SCALE_BUDGET
    """ The total number of environment interactions :math:`|D_n|` available to every agent """

    selfLearnSteps: int = 5000
    """ The length of a self-learning phase between federation rounds """

    evalEvery: int = 10000
    """ Interactions of an agent between evaluation checkpoints """

    evalEpisodes: int = 10
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    outputDir: str = 'results'
    strictBudget: bool = False
    """ Deduct the server's interactions from the system budget """

    bootstrapTruncation: bool = False
    """ Bootstrap from the final state of an episode truncated at the horizon instead of treating it as terminal """

    timeout: float = 30.0
    """ Seconds the server waits for the reply of any agent """

    @property
    def numAgents(self) -> int:
        return len(self.agents)

    def agentSelfLearnSteps(self, agentId: int) -> int:
        """ The self-learning phase length of an agent (1..N), honouring its private override """
        override = self.agents[agentId - 1].selfLearnSteps
        return self.selfLearnSteps if override is None else override


# (field, key, converter) per section
_EXPERIMENT_KEYS = [('name', 'name', str),
                    ('budgetPerAgent', 'budget_per_agent', int),
                    ('selfLearnSteps', 'self_learn_steps', int),
                    ('evalEvery', 'eval_every', int),
                    ('evalEpisodes', 'eval_episodes', int),
                    ('seeds', 'seeds', lambda v: [int(s) for s in v.split(',') if s.strip()]),
                    ('outputDir', 'output_dir', str),
                    ('strictBudget', 'strict_budget', 'bool'),
                    ('bootstrapTruncation', 'bootstrap_truncation', 'bool'),
                    ('timeout', 'timeout', float)]

_ENV_KEYS = [('kind', 'kind', EnvironmentKind),
             ('horizon', 'horizon', int),
             ('gamma', 'gamma', float),
             ('chainLength', 'chain_length', int)]

_FED_KEYS = [('lam', 'lambda', float),
             ('alphaS', 'alpha_s', float),
             ('hFed', 'h_fed', int),
             ('gamma', 'gamma', float),
             ('c', 'c', float),
             ('b', 'b', float),
             ('ucbMode', 'ucb', UcbMode)]

_AGENT_KEYS = [('kind', 'kind', AgentKind),
               ('network', 'network', str),
               ('lr', 'lr', float),
               ('epsilon', 'epsilon', float),
               ('improveLr', 'improve_lr', float),
               ('kappa', 'kappa', int),
               ('replayCapacity', 'replay_capacity', int),
               ('batchSize', 'batch_size', int),
               ('targetSyncEvery', 'target_sync_every', int),
               ('selfLearnSteps', 'self_learn_steps', int),
               ('exploration', 'exploration', Exploration),
               ('ucbC', 'ucb_c', float),
               ('maxGradNorm', 'max_grad_norm', float)]


def _parseBool(value: str) -> bool:
    value = value.strip().lower()

    if value in configparser.ConfigParser.BOOLEAN_STATES:
        return configparser.ConfigParser.BOOLEAN_STATES[value]

    raise ValueError('not a boolean')


def _readSection(section: configparser.SectionProxy, keys: List, errors: List[str]) -> Dict[str, Any]:

    known = {key: (name, convert) for name, key, convert in keys}
    values = {}

    for key, raw in section.items():

        if key not in known:
            errors.append('[{:s}] unknown key <{:s}>'.format(section.name, key))
            continue

        name, convert = known[key]

        if convert == 'bool':
            convert = _parseBool

        try:
            values[name] = convert(raw.strip())
        except ValueError:
            errors.append('[{:s}] {:s}: invalid value <{:s}>'.format(section.name, key, raw))

    return values


def _formatValue(value) -> str:

    if isinstance(value, bool):
        return 'true' if value else 'false'
    elif isinstance(value, float):
        return repr(value)
    elif isinstance(value, list):
        return ', '.join(str(v) for v in value)
    elif hasattr(value, 'value'):
        return str(value.value)

    return str(value)


def _writeSection(parser: configparser.ConfigParser, name: str, record, keys: List) -> None:

    parser.add_section(name)

    for attr, key, convert in keys:
        value = getattr(record, attr)

        if value is not None:
            parser.set(name, key, _formatValue(value))


def validateConfig(config: ExperimentConfig) -> None:
    """
    Checks every constraint of an experiment configuration

    :param config: The configuration
    :raises ConfigError: Listing every violated constraint
    """
    errors = []

    errors += config.env.validate()
    errors += config.fed.validate()

    if config.numAgents < 1:
        errors.append('at least one [agent.<k>] section is required')

    if config.numAgents > 65535:
        errors.append('at most 65535 agents are supported')

    for i, agent in enumerate(config.agents, 1):
        errors += agent.validate('agent.{:d}'.format(i))

        if agent.kind == AgentKind.Tabular and config.env.kind != EnvironmentKind.ChainMDP:
            errors.append('agent.{:d}: tabular agents require a ChainMDP environment'.format(i))

    if config.budgetPerAgent < 1:
        errors.append('experiment.budget_per_agent must be positive')

    if config.selfLearnSteps < 1:
        errors.append('experiment.self_learn_steps must be positive')

    if config.evalEvery < 1:
        errors.append('experiment.eval_every must be positive')

    if config.evalEpisodes < 1:
        errors.append('experiment.eval_episodes must be positive')

    if len(config.seeds) == 0:
        errors.append('experiment.seeds must not be empty')

    if any(s < 0 for s in config.seeds):
        errors.append('experiment.seeds must be non-negative')

    if config.timeout <= 0.0:
        errors.append('experiment.timeout must be positive')

    if errors:
        raise ConfigError(errors)


def parseConfig(text: str, validate: Optional[bool] = True) -> ExperimentConfig:
    """
    Parses an experiment configuration from its textual form

    :param text: The configuration text
    :param validate: Whether the parsed configuration is validated
    :return: The experiment configuration
    :raises ConfigError: If the text is malformed or the configuration is invalid
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#', ';'))

    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(['malformed configuration: {:s}'.format(str(e).splitlines()[0])])

    errors = []
    config = ExperimentConfig()
    agentSections = {}

    for name in parser.sections():

        if name == 'experiment':
            config = dataclasses.replace(config, **_readSection(parser[name], _EXPERIMENT_KEYS, errors))
        elif name == 'env':
            config.env = EnvConfig(**_readSection(parser[name], _ENV_KEYS, errors))
        elif name == 'federation':
            config.fed = FedConfig(**_readSection(parser[name], _FED_KEYS, errors))
        elif name.startswith('agent.'):
            try:
                agentSections[int(name[len('agent.'):])] = AgentConfig(**_readSection(parser[name], _AGENT_KEYS,
                                                                                      errors))
            except ValueError:
                errors.append('[{:s}] agent sections must be numbered [agent.<k>]'.format(name))
        else:
            errors.append('unknown section [{:s}]'.format(name))

    for required in ('experiment', 'env', 'federation'):
        if not parser.has_section(required):
            errors.append('missing section [{:s}]'.format(required))

    if sorted(agentSections.keys()) != list(range(1, len(agentSections) + 1)):
        errors.append('agent sections must be numbered consecutively from [agent.1]')

    config.agents = [agentSections[k] for k in sorted(agentSections.keys())]

    if errors:
        for error in errors:
            logging.error(error)

        raise ConfigError(errors)

    if validate:
        validateConfig(config)

    return config


def loadConfig(path: str, validate: Optional[bool] = True) -> ExperimentConfig:
    """
    Loads an experiment configuration from a file

    :param path: The path of the configuration file
    :param validate: Whether the parsed configuration is validated
    :return: The experiment configuration
    """
    if not os.path.exists(path):
        raise FileNotFoundError('Configuration file <{:s}> does not exist'.format(path))

    logging.info('Loading configuration {:s}'.format(path))

    with open(path, 'r') as f:
        return parseConfig(f.read(), validate)


def dumpConfig(config: ExperimentConfig) -> str:
    """
    Serialises an experiment configuration. Parsing the output gives back an identical configuration.

    :param config: The configuration
    :return: The configuration text
    """
    parser = configparser.ConfigParser(interpolation=None)

    _writeSection(parser, 'experiment', config, _EXPERIMENT_KEYS)
    _writeSection(parser, 'env', config.env,
                  _ENV_KEYS if config.env.kind == EnvironmentKind.ChainMDP else _ENV_KEYS[:-1])
    _writeSection(parser, 'federation', config.fed, _FED_KEYS)

    for i, agent in enumerate(config.agents, 1):
        _writeSection(parser, 'agent.{:d}'.format(i), agent, _AGENT_KEYS)

    lines = []

    for section in parser.sections():
        lines.append('[{:s}]'.format(section))
        lines += ['{:s} = {:s}'.format(key, value) for key, value in parser.items(section)]
        lines.append('')

    return '\n'.join(lines)


def saveConfig(config: ExperimentConfig, path: str) -> None:
    with open(path, 'w') as f:
        f.write(dumpConfig(config))


def withOverrides(config: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """
    Returns a copy of the configuration with command line overrides applied. Supported overrides are `lam`, `ucbMode`,
    `seeds`, `outputDir` and `budgetPerAgent`; `None` values are ignored.
    """
    overrides = {k: v for k, v in overrides.items() if v is not None}

    fed = dataclasses.replace(config.fed, **{k: overrides.pop(k) for k in ('lam', 'ucbMode') if k in overrides})

    return dataclasses.replace(config, fed=fed, **overrides)

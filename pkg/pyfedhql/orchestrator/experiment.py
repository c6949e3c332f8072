import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..agent import createAgent
from ..analysis import runningWindowStats
from ..config import ExperimentConfig, saveConfig, validateConfig
from ..env import Environment, createEnvironment
from ..env.utils import makeGenerator, spawnSeedSequences
from ..transport import SERVER_ID, AgentWorker, BaseChannel, InProcessChannel, TcpChannel, QueryState, \
                        SelfLearnSignal, StateTag, toVector
from .ledger import BudgetLedger
from .server import FedServer

CURVE_COLUMNS = ['run_seed', 'agent_id', 'consumed', 'consumed_adjusted', 'episode_return', 'window_mean',
                 'max_mean_return']
""" The columns of a learning curve in order """

SYSTEM_ID = 'system'

WINDOW = 10
""" Evaluation episodes per window of the max mean return metric """


class Transport(Enum):
    InProcess = 'inproc'
    Tcp = 'tcp'


@dataclass
class EvalRecord:
    checkpoint: int
    consumed: int
    consumedAdjusted: float
    episodeReturn: float


class Experiment:
    """
    A single seeded run of the federation: heterogeneous agents alternate between self-learning phases and federation
    rounds with the server until every agent has consumed its interaction budget. With `federated` disabled the same
    loop runs without any federation rounds, which gives the independently learning baseline.

    Every source of randomness derives from the run seed. The seed is split into independent PCG64 streams for the
    private environment and the policy of each agent, an evaluation environment per agent and the server environment.

    Agents are periodically evaluated with greedy episodes on their evaluation environment. The orchestrator performs
    these through the channel by querying the agent's action values, so no policy ever leaves an agent. Evaluation
    interactions are recorded separately and never charged against a budget.
    """

    def __init__(self, config: ExperimentConfig, seed: int, transport: Optional[Transport] = Transport.InProcess,
                 tcpPort: Optional[int] = 0, federated: Optional[bool] = True):

        self._config = config
        self._seed = int(seed)
        self._transport = Transport(transport)
        self._tcpPort = tcpPort
        self._federated = federated

        numAgents = config.numAgents

        seeds = spawnSeedSequences(self._seed, 3 * numAgents + 1)

        self._envSeeds = seeds[:numAgents]
        self._agentSeeds = seeds[numAgents:2 * numAgents]
        self._evalSeeds = seeds[2 * numAgents:3 * numAgents]
        self._serverSeed = seeds[3 * numAgents]

        self._ledger = BudgetLedger(numAgents, config.budgetPerAgent)
        self._records = {}
        self._channel = None
        self._server = None
        self._evalEnvs = {}
        self._envSteps = 0

    @property
    def config(self) -> ExperimentConfig:
        return self._config

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def federated(self) -> bool:
        return self._federated

    @property
    def ledger(self) -> BudgetLedger:
        return self._ledger

    @property
    def environmentSteps(self) -> int:
        """ The environment steps taken in this process during the last :meth:`run`, including evaluation """
        return self._envSteps

    @property
    def server(self) -> Optional[FedServer]:
        return self._server

    @property
    def agentIds(self) -> List[int]:
        return list(range(1, self._config.numAgents + 1))

    def _createWorkers(self) -> List[AgentWorker]:

        workers = []

        for agentId, agentConfig in zip(self.agentIds, self._config.agents):

            env = createEnvironment(self._config.env, makeGenerator(self._envSeeds[agentId - 1]))
            agent = createAgent(agentId, agentConfig, env.stateDim, env.numActions, env.gamma,
                                self._agentSeeds[agentId - 1], self._config.bootstrapTruncation)

            logging.debug('\t - created {:s} with {:s}'.format(str(agent), agentConfig.network))

            workers.append(AgentWorker(agent, env))

        return workers

    def _createChannel(self, workers: List[AgentWorker]) -> BaseChannel:

        if self._transport == Transport.Tcp:
            return TcpChannel(workers, port=self._tcpPort, timeout=self._config.timeout)

        return InProcessChannel(workers, timeout=self._config.timeout)

    def _grants(self) -> Dict[int, int]:
        """ The number of interactions each agent is asked to self-learn in this cycle """
        strict = self._config.strictBudget
        pool = self._ledger.systemRemaining
        grants = {}

        for agentId in self.agentIds:
            steps = min(self._config.agentSelfLearnSteps(agentId), self._ledger.agentRemaining(agentId, strict))

            if strict:
                steps = min(steps, pool)
                pool -= steps

            if steps > 0:
                grants[agentId] = steps

        return grants

    def evaluate(self, agentId: int, roundId: int = 0) -> float:
        """
        Runs a single greedy evaluation episode of an agent without learning. The greedy action is selected by the
        orchestrator from the agent's reply to a state query.

        :param agentId: The agent id
        :param roundId: The round id stamped on the queries
        :return: The undiscounted return of the episode
        """
        env = self._evalEnvs[agentId]
        state = env.reset()
        episodeReturn = 0.0

        while not env.isDone:
            reply = self._channel.request(agentId, QueryState(roundId, SERVER_ID, state=toVector(state),
                                                              tag=StateTag.Current))

            transition = env.step(int(np.argmax(reply.values)))
            self._ledger.chargeEvaluation(1)

            episodeReturn += transition.r
            state = transition.sNext

        return episodeReturn

    def _checkpoint(self, agentId: int, roundId: int) -> None:

        records = self._records[agentId]
        checkpoint = records[-1].checkpoint + 1 if records else 0

        consumed = self._ledger.perAgent[agentId]
        adjusted = self._ledger.adjustedConsumed(agentId)

        returns = [self.evaluate(agentId, roundId) for i in range(self._config.evalEpisodes)]
        records += [EvalRecord(checkpoint, consumed, adjusted, r) for r in returns]

        logging.info('Agent {:d} evaluation at {:d} interactions: mean return {:.2f}'.format(agentId, consumed,
                                                                                            float(np.mean(returns))))

    def run(self) -> pd.DataFrame:
        """
        Runs the experiment until the budget is exhausted

        :return: The learning curves of every agent and of the system as a :class:`pandas.DataFrame`
        """
        validateConfig(self._config)

        logging.info('Running {:s} (seed {:d}, {:s}, {:d} agents)'.format(
                     self._config.name, self._seed, 'federated' if self._federated else 'baseline',
                     self._config.numAgents))

        startSteps = Environment.totalSteps()
        startTime = time.time()

        workers = self._createWorkers()

        self._evalEnvs = {agentId: createEnvironment(self._config.env, makeGenerator(self._evalSeeds[agentId - 1]))
                          for agentId in self.agentIds}
        self._records = {agentId: [] for agentId in self.agentIds}

        strict = self._config.strictBudget
        nextEval = {agentId: self._config.evalEvery for agentId in self.agentIds}

        with self._createChannel(workers) as channel:

            self._channel = channel

            if self._federated:
                serverEnv = createEnvironment(self._config.env, makeGenerator(self._serverSeed))
                self._server = FedServer(channel, serverEnv, self._config.fed, self._ledger, strict,
                                         self._config.bootstrapTruncation)

            cycle = 0

            while not self._ledger.exhausted(strict):

                cycle += 1

                grants = self._grants()

                if len(grants) == 0:
                    break

                acks = channel.scatter({agentId: SelfLearnSignal(cycle, SERVER_ID, steps=steps)
                                        for agentId, steps in grants.items()})

                for agentId, ack in acks.items():
                    self._ledger.chargeAgent(agentId, ack.count)

                logging.debug('\t - cycle {:d} self-learning complete ({:d} interactions)'.format(
                              cycle, self._ledger.agentsConsumed))

                if self._federated:
                    self._server.federationRound(cycle)

                for agentId in self.agentIds:
                    consumed = self._ledger.perAgent[agentId]

                    if consumed >= nextEval[agentId]:
                        self._checkpoint(agentId, cycle)

                        while nextEval[agentId] <= consumed:
                            nextEval[agentId] += self._config.evalEvery

            # Final checkpoint
            for agentId in self.agentIds:
                records = self._records[agentId]

                if not records or records[-1].consumed != self._ledger.perAgent[agentId]:
                    self._checkpoint(agentId, cycle)

            self._channel = None

        self._envSteps = Environment.totalSteps() - startSteps

        logging.info('Finished {:s} (seed {:d}) in {:.1f} s - server {:d}, agents {:d}, evaluation {:d} '
                     'interactions'.format(self._config.name, self._seed, time.time() - startTime,
                                           self._ledger.server, self._ledger.agentsConsumed,
                                           self._ledger.evaluation))

        logging.debug('\t - {:d} environment steps recorded in this process'.format(self._envSteps))

        return self.curves()

    def curves(self) -> pd.DataFrame:
        """
        Assembles the learning curves from the evaluation records: one row per evaluation episode and agent, followed
        by the system rows which average the agents over the same checkpoint and episode index.
        """
        rows = []

        for agentId in self.agentIds:
            records = self._records[agentId]
            windowColumn, maxColumn = runningWindowStats([r.episodeReturn for r in records], WINDOW)

            for record, windowMean, maxMean in zip(records, windowColumn, maxColumn):
                rows.append([self._seed, str(agentId), record.consumed, record.consumedAdjusted,
                             record.episodeReturn, windowMean, maxMean])

        # System rows exist for every episode index evaluated by all agents
        numEpisodes = min(len(self._records[agentId]) for agentId in self.agentIds)
        numAgents = self._config.numAgents

        systemReturns = [float(np.mean([self._records[a][i].episodeReturn for a in self.agentIds]))
                         for i in range(numEpisodes)]

        windowColumn, maxColumn = runningWindowStats(systemReturns, WINDOW)

        for i in range(numEpisodes):
            consumed = sum(self._records[a][i].consumed for a in self.agentIds) / numAgents
            adjusted = sum(self._records[a][i].consumedAdjusted for a in self.agentIds) / numAgents

            rows.append([self._seed, SYSTEM_ID, consumed, adjusted, systemReturns[i], windowColumn[i], maxColumn[i]])

        return pd.DataFrame(rows, columns=CURVE_COLUMNS, dtype=object)


def _runSeed(config: ExperimentConfig, seed: int, transport: Transport, tcpPort: int,
             federated: bool) -> pd.DataFrame:
    return Experiment(config, seed, transport, tcpPort, federated).run()


def runExperiment(config: ExperimentConfig, seeds: Optional[Sequence[int]] = None,
                  transport: Optional[Transport] = Transport.InProcess, tcpPort: Optional[int] = 0,
                  outputDir: Optional[str] = None, federated: Optional[bool] = True,
                  workers: Optional[int] = 1) -> Dict[int, pd.DataFrame]:
    """
    Runs an experiment for every seed and writes the learning curves `curves_seed<k>.csv` together with the
    configuration `config.cfg` into the output directory.

    :param config: The validated experiment configuration
    :param seeds: The run seeds, defaults to the seeds of the configuration
    :param transport: The transport between server and agents
    :param tcpPort: The TCP port of the server. Parallel runs always use ephemeral ports
    :param outputDir: The output directory, defaults to that of the configuration
    :param federated: Whether federation rounds are performed
    :param workers: The number of seeds run in parallel processes
    :return: The learning curves keyed by seed
    """
    from ..export import writeCurves

    validateConfig(config)

    seeds = list(config.seeds if seeds is None else seeds)
    outputDir = config.outputDir if outputDir is None else outputDir

    os.makedirs(outputDir, exist_ok=True)
    saveConfig(config, os.path.join(outputDir, 'config.cfg'))

    curves = {}

    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {seed: pool.submit(_runSeed, config, seed, transport, 0, federated) for seed in seeds}
            curves = {seed: future.result() for seed, future in futures.items()}
    else:
        for seed in seeds:
            curves[seed] = _runSeed(config, seed, transport, tcpPort, federated)

    for seed, frame in curves.items():
        writeCurves(frame, os.path.join(outputDir, 'curves_seed{:d}.csv'.format(seed)))

    return curves

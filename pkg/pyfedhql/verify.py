"""
Self-checks of the numerical core and the protocol against independent oracles: finite difference gradients, value
iteration, the algebra of the optimistic score, the coverage of the empirical Bernstein bound and codec fuzzing.
"""

import itertools
import logging
import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy import stats

from .agent import AgentConfig, AgentKind, TabularAgent, createAgent
from .env import ChainMDP, EnvConfig, EnvironmentKind, chainOptimalQ, makeGenerator
from .federation import FedConfig, TwoPointSampler, UniformSampler, aggregate, coverageTest, coverageTolerance, \
                        requiredCoverage, selectAction
from .neural import backward, finiteDifferenceGradient, gradientRelativeError, randomInstance
from .orchestrator import BudgetLedger, FedServer
from .transport import (MESSAGE_TYPES, AgentWorker, FedTDTarget, FrameError, ImproveAck, InProcessChannel,
                        QueryState, QValuesReply, SelfLearnSignal, Shutdown, StateTag, decode, encode)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def gradientSuite(instances: int = 100, seed: int = 0) -> SuiteResult:
    """ Compares the analytic gradient of random networks with central finite differences (h = 1e-5) """
    rng = makeGenerator(seed)
    worst = 0.0

    for i in range(instances):
        w, state, action, target = randomInstance(rng)
        loss, grad = backward(w, state, action, target)
        worst = max(worst, gradientRelativeError(grad, finiteDifferenceGradient(w, state, action, target, 1e-5)))

    return SuiteResult('gradient', worst < 1e-4, 'max relative error {:.2e} over {:d} networks'.format(worst, instances))


def chainSuite(steps: int = 10000, length: int = 5, gamma: float = 0.9, seed: int = 0) -> SuiteResult:
    """ Tabular self-learning on the chain converges to the value iteration solution """
    config = EnvConfig(kind=EnvironmentKind.ChainMDP, chainLength=length, gamma=gamma, horizon=1000)
    agentConfig = AgentConfig(kind=AgentKind.Tabular, lr=0.5, epsilon=1.0)

    env = ChainMDP(config, makeGenerator(seed))
    agent = createAgent(1, agentConfig, env.stateDim, env.numActions, gamma, seed)
    agent.selfLearn(env, steps)

    qStar = chainOptimalQ(length, gamma)
    error = float(np.max(np.abs(agent.table[:-1] - qStar[:-1])))

    return SuiteResult('chain-convergence', error <= 0.05,
                       'max |Q - Q*| = {:.2e} after {:d} steps'.format(error, steps))


def fixedPointSuite(rounds: int = 20, length: int = 5, gamma: float = 0.9) -> SuiteResult:
    """ With a single agent holding Q*, FedTD (lambda = 0, alpha_s = 1) leaves Q* unchanged """
    config = EnvConfig(kind=EnvironmentKind.ChainMDP, chainLength=length, gamma=gamma, horizon=50)
    qStar = chainOptimalQ(length, gamma)

    agent = TabularAgent(1, AgentConfig(kind=AgentKind.Tabular, kappa=8, lr=0.1), length, 2, gamma, makeGenerator(0),
                         initialTable=qStar)
    worker = AgentWorker(agent, ChainMDP(config, makeGenerator(1)))

    fed = FedConfig(lam=0.0, alphaS=1.0, hFed=16)
    ledger = BudgetLedger(1, 1000)
    worstTarget = 0.0

    with InProcessChannel([worker]) as channel:
        server = FedServer(channel, ChainMDP(config, makeGenerator(2)), fed, ledger)

        for roundId in range(1, rounds + 1):
            for entry in server.federationRound(roundId).trace:
                cell = int(np.argmax(entry.state))
                worstTarget = max(worstTarget, abs(entry.qAfter - qStar[cell, entry.action]))

    drift = float(np.max(np.abs(agent.table - qStar)))

    return SuiteResult('fedtd-fixed-point', drift <= 1e-9 and worstTarget <= 1e-9,
                       'table drift {:.2e}, target error {:.2e}'.format(drift, worstTarget))


def fedUcbSuite(instances: int = 10000, seed: int = 0) -> SuiteResult:
    """ Shift and scale equivariance, lambda monotonicity, permutation invariance and the greedy limit """
    rng = makeGenerator(seed)
    failures = []

    for i in range(instances):
        N = int(rng.integers(1, 11))
        A = int(rng.integers(1, 7))
        Q = rng.normal(size=(N, A)) * 10.0
        lam = float(rng.uniform(0.0, 10.0))
        shift = float(rng.normal() * 5.0)
        scale = float(rng.uniform(0.1, 10.0))

        base = aggregate(Q, lam)

        if not np.allclose(aggregate(Q + shift, lam).ucb, base.ucb + shift, rtol=1e-9, atol=1e-9):
            failures.append('shift')

        if not np.allclose(aggregate(Q * scale, lam).ucb, base.ucb * scale, rtol=1e-9, atol=1e-9):
            failures.append('scale')

        if np.any(aggregate(Q, lam + 1.0).ucb < base.ucb):
            failures.append('monotonicity')

        permuted = aggregate(Q[rng.permutation(N)], lam)

        if not np.array_equal(permuted.ucb, base.ucb):
            failures.append('permutation')

        if selectAction(aggregate(Q, 0.0)) != int(np.argmax(Q.mean(axis=0))) and \
                not np.isclose(np.max(Q.mean(axis=0)), base.mean[selectAction(aggregate(Q, 0.0))]):
            failures.append('greedy')

    detail = '{:d} instances'.format(instances) if not failures else 'violations: {:s}'.format(
        ', '.join(sorted(set(failures))))

    return SuiteResult('feducb-algebra', len(failures) == 0, detail)


def coverageSuite(trials: int = 10000, seed: int = 0) -> SuiteResult:
    """ Monte Carlo coverage of the empirical Bernstein bound for c in {1,2,3} and N in {3,5,10} """
    worst = np.inf
    passed = True

    for c, N, sampler in itertools.product([1.0, 2.0, 3.0], [3, 5, 10], [UniformSampler(), TwoPointSampler()]):
        coverage = coverageTest(sampler, N, c, 1.0, trials, seed)
        margin = coverage - (requiredCoverage(c) - coverageTolerance(c, trials))

        worst = min(worst, margin)
        passed = passed and margin >= 0.0

    return SuiteResult('bernstein-coverage', passed, 'worst margin {:+.4f} over 18 cases, {:d} trials'.format(worst,
                                                                                                          trials))


def randomMessage(rng: np.random.Generator):
    """ Draws a random message of any kind """
    roundId = int(rng.integers(0, 2 ** 63))
    agentId = int(rng.integers(0, 2 ** 16))
    dim = int(rng.integers(0, 9))
    vector = tuple(float(v) for v in rng.normal(size=dim) * 10.0 ** rng.integers(-5, 6))
    tag = StateTag(int(rng.integers(0, 2)))

    kind = int(rng.integers(1, len(MESSAGE_TYPES) + 1))

    if kind == 1:
        return SelfLearnSignal(roundId, agentId, steps=int(rng.integers(0, 2 ** 32)))
    elif kind == 2:
        return QueryState(roundId, agentId, state=vector, tag=tag)
    elif kind == 3:
        return QValuesReply(roundId, agentId, values=vector, tag=tag)
    elif kind == 4:
        return FedTDTarget(roundId, agentId, state=vector, action=int(rng.integers(0, 2 ** 32)),
                           target=float(rng.normal()))
    elif kind == 5:
        return ImproveAck(roundId, agentId, count=int(rng.integers(0, 2 ** 32)))

    return Shutdown(roundId, agentId)


def codecSuite(messages: int = 10000, fuzz: int = 10000, seed: int = 0) -> SuiteResult:
    """ Round trip of random messages and decoding of random and mutated byte strings """
    rng = makeGenerator(seed)
    mismatches = 0
    crashes = 0

    for i in range(messages):
        m = randomMessage(rng)
        if decode(encode(m)) != m:
            mismatches += 1

    valid = [encode(randomMessage(rng)) for i in range(64)]

    for i in range(fuzz):

        if i % 2 == 0:
            data = rng.bytes(int(rng.integers(0, 64)))
        else:
            data = bytearray(valid[int(rng.integers(0, len(valid)))])

            for k in range(int(rng.integers(1, 4))):
                if len(data) > 0:
                    data[int(rng.integers(0, len(data)))] = int(rng.integers(0, 256))

            data = bytes(data[:int(rng.integers(0, len(data) + 1))])

        try:
            decode(data)
        except FrameError:
            pass
        except Exception:
            crashes += 1

    return SuiteResult('codec', mismatches == 0 and crashes == 0,
                       '{:d} round trips ({:d} mismatches), {:d} fuzz inputs ({:d} untyped errors)'.format(
                           messages, mismatches, fuzz, crashes))


def explorationSuite(samples: int = 20000, seed: int = 0) -> SuiteResult:
    """ Random exploration actions are uniformly distributed (chi-square test) """
    agent = createAgent(1, AgentConfig(network='8 (ReLU)', epsilon=1.0), 4, 5, 0.99, seed)
    state = np.zeros(4)

    counts = np.bincount([agent.act(state) for i in range(samples)], minlength=5)
    result = stats.chisquare(counts)

    return SuiteResult('exploration-uniformity', result.pvalue > 1e-3, 'chi-square p-value {:.3f}'.format(result.pvalue))


def verifySuites(full: Optional[bool] = False) -> List[SuiteResult]:
    """
    Runs every verification suite. The `full` sizes use 10^5 coverage trials and 10^6 fuzz inputs.

    :param full: Whether the full sized suites are run
    :return: The results of every suite
    """
    suites: List[Callable[[], SuiteResult]] = [
        lambda: gradientSuite(100),
        lambda: chainSuite(10000),
        lambda: fixedPointSuite(),
        lambda: fedUcbSuite(10000),
        lambda: coverageSuite(100000 if full else 10000),
        lambda: codecSuite(10000, 1000000 if full else 10000),
        lambda: explorationSuite()
    ]

    results = []

    for suite in suites:
        start = time.time()
        result = suite()
        result.seconds = time.time() - start

        logging.info('{:s} {:s}: {:s} ({:.1f} s)'.format('PASS' if result.passed else 'FAIL', result.name,
                                                        result.detail, result.seconds))
        results.append(result)

    return results

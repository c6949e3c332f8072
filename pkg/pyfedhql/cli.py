"""
The command line interface ``pyfedhql`` with the sub-commands ``run``, ``baseline``, ``verify`` and ``report``.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

import colorlog
import pandas as pd

from .config import FULL_SCALE_BUDGET, ConfigError, loadConfig, validateConfig, withOverrides
from .export import writeReport
from .federation import UcbMode
from .orchestrator import Transport, runExperiment
from .transport import RoundAborted
from .version import __version__
from .verify import verifySuites

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

OUTPUT_ENV = 'FEDHQL_OUT'
""" Environment variable overriding the output directory of ``run`` and ``baseline`` """


def setupLogging(level: int = logging.INFO) -> None:
    """ Installs a coloured stream handler on the root logger """
    handler = colorlog.StreamHandler()
    handler.setFormatter(colorlog.ColoredFormatter('%(log_color)s%(asctime)s %(levelname)-8s%(reset)s %(message)s',
                                                   datefmt='%H:%M:%S'))

    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(level)


def parseSeeds(text: str) -> List[int]:
    try:
        return [int(s) for s in text.split(',') if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError('seeds must be a comma separated list of integers')


def _addRunArguments(parser: argparse.ArgumentParser, federated: bool) -> None:

    parser.add_argument('--config', required=True, help='Path of the experiment configuration')
    parser.add_argument('--seed', type=parseSeeds, help='Comma separated run seeds, overriding the configuration')
    parser.add_argument('--transport', choices=[t.value for t in Transport], default=Transport.InProcess.value,
                        help='Transport between server and agents')
    parser.add_argument('--tcp-port', type=int, default=0, help='Server port of the tcp transport (0 = ephemeral)')
    parser.add_argument('--out', help='Output directory (the {:s} environment variable takes precedence)'.format(
                        OUTPUT_ENV))
    parser.add_argument('--full-scale', action='store_true',
                        help='Use the full budget of {:d} interactions per agent'.format(FULL_SCALE_BUDGET))
    parser.add_argument('--workers', type=int, default=1, help='Seeds run in parallel processes')

    if federated:
        parser.add_argument('--lambda', dest='lam', type=float, help='Inter-agent exploration coefficient')
        parser.add_argument('--ucb', choices=[m.value for m in UcbMode], help='FedUCB score')


def buildParser() -> argparse.ArgumentParser:

    parser = argparse.ArgumentParser(prog='pyfedhql', description='Federated heterogeneous Q-learning')
    parser.add_argument('--version', action='version', version='%(prog)s {:s}'.format(__version__))
    parser.add_argument('-v', '--verbose', action='store_true', help='Log debug messages')
    parser.add_argument('-q', '--quiet', action='store_true', help='Log warnings and errors only')

    commands = parser.add_subparsers(dest='command', required=True)

    _addRunArguments(commands.add_parser('run', help='Run the federated experiment'), True)
    _addRunArguments(commands.add_parser('baseline', help='Run the agents without federation'), False)

    verify = commands.add_parser('verify', help='Run the verification suites')
    verify.add_argument('--full', action='store_true', help='Use the full Monte Carlo and fuzzing sizes')

    report = commands.add_parser('report', help='Summarise the curves of a results directory')
    report.add_argument('directory', help='Results directory containing curves_seed*.csv')
    report.add_argument('--level', type=float, default=0.8, help='Confidence level of the bootstrap intervals')

    return parser


def _run(args: argparse.Namespace) -> int:

    federated = args.command == 'run'

    config = loadConfig(args.config, validate=False)

    outputDir = os.environ.get(OUTPUT_ENV) or args.out

    overrides = dict(seeds=args.seed, outputDir=outputDir,
                     budgetPerAgent=FULL_SCALE_BUDGET if args.full_scale else None)

    if federated:
        overrides.update(lam=args.lam, ucbMode=None if args.ucb is None else UcbMode(args.ucb))

    config = withOverrides(config, **overrides)
    validateConfig(config)

    runExperiment(config, transport=Transport(args.transport), tcpPort=args.tcp_port, federated=federated,
                  workers=args.workers)

    logging.info('Results written to {:s}'.format(config.outputDir))

    return EXIT_OK


def _verify(args: argparse.Namespace) -> int:

    results = verifySuites(args.full)

    table = pd.DataFrame([[r.name, 'PASS' if r.passed else 'FAIL', '{:.1f}'.format(r.seconds), r.detail]
                          for r in results], columns=['suite', 'result', 'seconds', 'detail'])
    print(table.to_string(index=False))

    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


def _report(args: argparse.Namespace) -> int:

    summary = writeReport(args.directory, args.level)
    print(summary.to_string(index=False))

    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the command line interface

    :param argv: The arguments, defaults to :data:`sys.argv`
    :return: The exit status
    """
    try:
        args = buildParser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    setupLogging(logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO)

    try:
        if args.command == 'verify':
            return _verify(args)
        elif args.command == 'report':
            return _report(args)

        return _run(args)

    except ConfigError as e:
        for error in e.errors:
            logging.error(error)

        return EXIT_USAGE
    except FileNotFoundError as e:
        logging.error(str(e))
        return EXIT_USAGE
    except RoundAborted as e:
        logging.error(str(e))
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())

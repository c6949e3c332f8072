"""
Writing and reading learning curve CSV files and summarising the curves of repeated runs.
"""

import glob
import logging
import os
from typing import Optional

import numpy as np
import pandas as pd

from .analysis import bootstrapCi
from .orchestrator import CURVE_COLUMNS, SYSTEM_ID

SUMMARY_COLUMNS = ['agent_id', 'num_seeds', 'consumed', 'consumed_adjusted', 'max_mean_return', 'ci_lo', 'ci_hi']


def writeCurves(curves: pd.DataFrame, filename: str) -> None:
    """
    Writes the learning curves of a run. Undefined window statistics are left empty and reals are written with their
    shortest exact representation.

    :param curves: The curves with the columns :data:`CURVE_COLUMNS`
    :param filename: The CSV file path
    """
    if list(curves.columns) != CURVE_COLUMNS:
        raise ValueError('Curves must have the columns {:s}'.format(', '.join(CURVE_COLUMNS)))

    logging.info('Writing curves to {:s}'.format(filename))

    curves.to_csv(filename, index=False, na_rep='')


def readCurves(directory: str) -> pd.DataFrame:
    """
    Reads every `curves_seed<k>.csv` file within a directory

    :param directory: The results directory
    :return: The concatenated curves
    """
    files = sorted(glob.glob(os.path.join(directory, 'curves_seed*.csv')))

    if len(files) == 0:
        raise FileNotFoundError('No curves_seed*.csv files found in <{:s}>'.format(directory))

    logging.info('Reading {:d} curve files from {:s}'.format(len(files), directory))

    return pd.concat([pd.read_csv(f, dtype={'agent_id': str}) for f in files], ignore_index=True)


def _agentOrder(agentId: str):
    return (1, 0) if agentId == SYSTEM_ID else (0, int(agentId))


def summarise(curves: pd.DataFrame, level: Optional[float] = 0.8, resamples: Optional[int] = 10000,
              seed: Optional[int] = 0) -> pd.DataFrame:
    """
    Summarises repeated runs: for every agent and the system, the final max mean return of each run is averaged
    across the run seeds together with its percentile bootstrap confidence interval.

    :param curves: The concatenated curves of several runs
    :param level: The confidence level of the interval
    :param resamples: The number of bootstrap resamples
    :param seed: The seed of the bootstrap
    :return: The summary with the columns :data:`SUMMARY_COLUMNS`
    """
    final = curves.groupby(['agent_id', 'run_seed'], sort=False).last().reset_index()

    rows = []

    for agentId in sorted(final['agent_id'].unique(), key=_agentOrder):
        runs = final[final['agent_id'] == agentId]
        values = runs['max_mean_return'].dropna().to_numpy(dtype=np.float64)

        mean = float(values.mean()) if len(values) > 0 else np.nan
        lo, hi = bootstrapCi(values, level, resamples, seed) if len(values) >= 2 else (np.nan, np.nan)

        rows.append([agentId, len(runs), float(runs['consumed'].mean()), float(runs['consumed_adjusted'].mean()),
                     mean, lo, hi])

    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def writeReport(directory: str, level: Optional[float] = 0.8) -> pd.DataFrame:
    """
    Summarises the curves of a results directory into `summary.csv`

    :param directory: The results directory
    :param level: The confidence level of the intervals
    :return: The summary
    """
    summary = summarise(readCurves(directory), level)

    filename = os.path.join(directory, 'summary.csv')
    logging.info('Writing summary to {:s}'.format(filename))
    summary.to_csv(filename, index=False, na_rep='')

    return summary

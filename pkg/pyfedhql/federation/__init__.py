from .aggregation import AggregateStats, FedConfig, UcbMode, aggregate, theoreticalAggregate, theoreticalUcb, \
                         selectAction, fedTdUpdate
from .coverage import Sampler, UniformSampler, TwoPointSampler, PointMassSampler, requiredCoverage, \
                      coverageTolerance, coverageTest

from .environment import Environment, EnvConfig, EnvironmentKind, EpisodeTerminated, Transition, createEnvironment
from .cartpole import CartPole
from .chain import ChainMDP
from .utils import *

from .config import AgentConfig, AgentKind, Exploration
from .replay import ReplayBuffer
from .agent import BaseAgent, DQNAgent, TabularAgent, createAgent

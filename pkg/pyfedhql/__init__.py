from .version import __version__
from .env import *
from .neural import *
from .agent import *
from .federation import *
from .transport import *
from .orchestrator import *
from .config import ExperimentConfig, ConfigError, loadConfig, parseConfig, dumpConfig, validateConfig

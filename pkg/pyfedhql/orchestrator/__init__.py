from .ledger import BudgetLedger
from .server import FedServer, RoundState, TraceEntry
from .experiment import CURVE_COLUMNS, SYSTEM_ID, WINDOW, Experiment, EvalRecord, Transport, runExperiment

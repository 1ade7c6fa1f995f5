import cvqkd.log

from cvqkd.model import AttackKind, AttackModel, SessionConfig, SourceKind, SourceModel
from cvqkd.simulate import PulseLedger, simulate_session

cvqkd.log.setup_logging()

__all__ = (
    "AttackKind",
    "AttackModel",
    "PulseLedger",
    "SessionConfig",
    "SourceKind",
    "SourceModel",
    "simulate_session",
)
__version__ = "0.1.0"
_project_url = "https://github.com/unimelbmdap/cvqkd-robust"

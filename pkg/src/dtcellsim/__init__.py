"""Digital-twin cellular network simulator and multi-agent DRL trainer.

Core import entry points; torch-dependent modules (agent, trainer, evalkit)
are intentionally not imported here so that trace tooling and scenario
handling stay cheap to load.
"""

__version__ = "0.1.0"

from .errors import CheckpointError, ConfigError, ContractViolation, TraceFormatError
from .mobility import Trajectory
from .scenario import Band, BaseStation, HandoverModel, ScenarioConfig
from .scenario import default_config, desk_config

__all__ = [
    "Band",
    "BaseStation",
    "CheckpointError",
    "ConfigError",
    "ContractViolation",
    "HandoverModel",
    "ScenarioConfig",
    "TraceFormatError",
    "Trajectory",
    "default_config",
    "desk_config",
    "__version__",
]

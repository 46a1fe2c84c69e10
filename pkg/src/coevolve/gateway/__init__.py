from .client import SolverGateway, SolverResponse, answer, propose_auxiliary
from .config import (
    MalformedResponseError,
    RetryPolicy,
    SkillProfile,
    SolverConfig,
    SolverError,
    SolverTimeout,
    TransportError,
)
from .proposals import Proposal

__all__ = [
    "MalformedResponseError",
    "Proposal",
    "RetryPolicy",
    "SkillProfile",
    "SolverConfig",
    "SolverError",
    "SolverGateway",
    "SolverResponse",
    "SolverTimeout",
    "TransportError",
    "answer",
    "propose_auxiliary",
]

"""HTTP/WebSocket control service over the simulated card."""

from .session import CommandResult, DeviceHandle, FailureKind, SimulationSession
from .api import create_app

__all__ = [
    "CommandResult",
    "DeviceHandle",
    "FailureKind",
    "SimulationSession",
    "create_app",
]

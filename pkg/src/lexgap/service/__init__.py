from .app import create_app
from .engine import Engine, PlatformState
from .eventlog import EventLog

__all__ = ["create_app", "Engine", "PlatformState", "EventLog"]

"""
Simulator error hierarchy
"""

from typing import Optional


class SimulatorError(Exception):
    """Base class for every error the simulator raises on purpose"""


class InvalidArgumentError(SimulatorError, ValueError):
    """An operation received an argument outside its domain"""


class InvalidStateError(SimulatorError):
    """An object violates the invariants its producer guarantees"""


class DegenerateReceiverError(SimulatorError):
    """A receive vector cannot be formed for this draw (recorded as rate 0)"""

    def __init__(self, ue: int, reason: str):
        self.ue = ue
        self.reason = reason
        super().__init__(f"UE {ue}: {reason}")


class ConfigurationError(SimulatorError):
    """Invalid run configuration, reported with the offending key path"""

    def __init__(self, key_path: str, message: str):
        self.key_path = key_path
        self.message = message
        super().__init__(f"{key_path}: {message}" if key_path else message)


class OutputError(SimulatorError, OSError):
    """Output location is not writable"""


class RuntimeBudgetError(SimulatorError):
    """A preset run is estimated to exceed the configured runtime budget"""

    def __init__(self, estimate_s: float, budget_s: float, detail: Optional[str] = None):
        self.estimate_s = estimate_s
        self.budget_s = budget_s
        message = f"estimated {estimate_s:.0f}s exceeds budget {budget_s:.0f}s"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message + "; pass --force to run anyway")


class InternalError(SimulatorError):
    """Non-finite aggregates or other conditions that indicate a bug"""

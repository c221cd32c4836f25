"""
Exception hierarchy for fluxtrade
Every error the CLI reports maps onto one of these classes
"""

from typing import Any, Dict, Optional


class FluxtradeError(Exception):
    """Base class for all fluxtrade errors"""

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form written to stderr by the CLI"""
        return {
            'error': type(self).__name__,
            'message': str(self)
        }


class ValidationError(FluxtradeError, ValueError):
    """Invalid input, naming the offending field"""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data['field'] = self.field
        return data


class ConvergenceError(FluxtradeError, RuntimeError):
    """Basis doubling hit the dimension cap before meeting the tolerance"""

    def __init__(self, message: str, last_delta: float, dimension: int):
        super().__init__(message)
        self.last_delta = last_delta
        self.dimension = dimension

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data['last_delta'] = self.last_delta
        data['dimension'] = self.dimension
        return data


class ContractViolation(FluxtradeError, RuntimeError):
    """A solver input or output broke its stated contract"""


class DomainError(FluxtradeError, ValueError):
    """A closed-form expression was evaluated outside its domain"""


class InsufficientDataError(FluxtradeError, ValueError):
    """Too few usable points for a regression"""

    def __init__(self, message: str, usable: int, excluded: Optional[int] = None):
        super().__init__(message)
        self.usable = usable
        self.excluded = excluded

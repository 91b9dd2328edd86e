"""Verdicts of the decision procedures."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional

from .semantics import FiniteModel


class Status(Enum):
    SAT = 'sat'
    UNSAT = 'unsat'
    UNKNOWN = 'unknown'

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Verdict:
    """Sat (with a certificate or values), Unsat, or Unknown with a reason."""
    status: Status
    certificate: Optional[Any] = None
    values: Mapping[str, int] = field(default_factory=dict)
    model: Optional[FiniteModel] = None
    reason: str = ''

    @classmethod
    def sat(cls, certificate=None, values=None, model=None) -> 'Verdict':
        return cls(Status.SAT, certificate, dict(values or {}), model)

    @classmethod
    def unsat(cls) -> 'Verdict':
        return cls(Status.UNSAT)

    @classmethod
    def unknown(cls, reason: str) -> 'Verdict':
        return cls(Status.UNKNOWN, reason=reason)

    @property
    def is_sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def is_unsat(self) -> bool:
        return self.status is Status.UNSAT

    @property
    def is_unknown(self) -> bool:
        return self.status is Status.UNKNOWN

    def __str__(self) -> str:
        if self.status is Status.UNKNOWN and self.reason:
            return f"unknown ({self.reason})"
        return str(self.status)

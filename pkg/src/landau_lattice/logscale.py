"""Complex numbers carried as (log-magnitude, phase).

Kernel values at deeply negative energies decay like exp(-sqrt(|z|)) and
leave the double range long before the coefficients stop mattering.  Ratios
of such values are still O(1), so everything that is multiplied or divided
is kept in this form and only converted back at the end.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass


def _wrap(phase: float) -> float:
    """Reduce a phase to (-pi, pi]."""
    wrapped = math.remainder(phase, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class LogScaledComplex:
    """The number ``exp(log_mag) * exp(1j * phase)``.

    ``log_mag = -inf`` encodes exact zero.
    """

    log_mag: float
    phase: float = 0.0

    def __post_init__(self):
        if math.isnan(self.log_mag) or math.isnan(self.phase) or math.isinf(self.phase):
            raise ValueError(f"invalid log-scaled value ({self.log_mag}, {self.phase})")
        if self.log_mag == math.inf:
            raise OverflowError("log-scaled magnitude is +inf")
        object.__setattr__(self, "phase", _wrap(self.phase))

    @classmethod
    def from_complex(cls, value: complex) -> "LogScaledComplex":
        value = complex(value)
        if value == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(value)), cmath.phase(value))

    @classmethod
    def from_log(cls, log_value: complex) -> "LogScaledComplex":
        """Build from a complex logarithm ``log_mag + 1j*phase``."""
        log_value = complex(log_value)
        return cls(log_value.real, log_value.imag)

    def to_complex(self) -> complex:
        """Convert back; underflows to 0, raises OverflowError past the double range."""
        if self.log_mag == -math.inf:
            return 0j
        if self.log_mag > 709.0:
            raise OverflowError(f"magnitude exp({self.log_mag:.6g}) exceeds double range")
        return cmath.rect(math.exp(self.log_mag), self.phase)

    @property
    def is_zero(self) -> bool:
        return self.log_mag == -math.inf

    def __mul__(self, other):
        if not isinstance(other, LogScaledComplex):
            other = LogScaledComplex.from_complex(other)
        return LogScaledComplex(self.log_mag + other.log_mag, self.phase + other.phase)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogScaledComplex):
            other = LogScaledComplex.from_complex(other)
        if other.is_zero:
            raise ZeroDivisionError("division by a log-scaled zero")
        return LogScaledComplex(self.log_mag - other.log_mag, self.phase - other.phase)

    def __neg__(self):
        return LogScaledComplex(self.log_mag, self.phase + math.pi)

    def conjugate(self) -> "LogScaledComplex":
        return LogScaledComplex(self.log_mag, -self.phase)

    def __abs__(self) -> float:
        return 0.0 if self.is_zero else math.exp(min(self.log_mag, 709.0))

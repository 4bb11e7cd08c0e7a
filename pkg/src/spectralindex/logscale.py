"""Sign and log-magnitude pairs for quantities outside floating range."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LogScaledValue:
    """A real number stored as ``sign * exp(log_mag)``.

    Parameters
    ----------
    sign : int
        One of -1, 0, +1.  When zero, ``log_mag`` is ignored.
    log_mag : float
        Natural logarithm of the absolute value.
    """

    sign: int
    log_mag: float

    def __post_init__(self) -> None:
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")

    @classmethod
    def from_float(cls, value: float) -> "LogScaledValue":
        if math.isnan(value):
            raise ValueError("cannot represent NaN")
        if value == 0.0:
            return cls(0, -math.inf)
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def from_log(cls, log_mag: float, sign: int = 1) -> "LogScaledValue":
        return cls(int(sign), float(log_mag))

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_mag)

    __float__ = to_float

    def __mul__(self, other: "LogScaledValue") -> "LogScaledValue":
        if not isinstance(other, LogScaledValue):
            other = LogScaledValue.from_float(float(other))
        s = self.sign * other.sign
        return LogScaledValue(s, self.log_mag + other.log_mag if s else -math.inf)

    __rmul__ = __mul__

    def __truediv__(self, other: "LogScaledValue") -> "LogScaledValue":
        if not isinstance(other, LogScaledValue):
            other = LogScaledValue.from_float(float(other))
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogScaledValue")
        s = self.sign * other.sign
        return LogScaledValue(s, self.log_mag - other.log_mag if s else -math.inf)

    def __add__(self, other: "LogScaledValue") -> "LogScaledValue":
        if not isinstance(other, LogScaledValue):
            other = LogScaledValue.from_float(float(other))
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_mag >= other.log_mag else (other, self)
        r = hi.sign + lo.sign * math.exp(lo.log_mag - hi.log_mag)
        if r == 0.0:
            return LogScaledValue(0, -math.inf)
        return LogScaledValue(1 if r > 0 else -1, hi.log_mag + math.log(abs(r)))

    def __neg__(self) -> "LogScaledValue":
        return LogScaledValue(-self.sign, self.log_mag)

    def scale_log(self, shift: float) -> "LogScaledValue":
        """Multiply by ``exp(shift)``."""
        return LogScaledValue(self.sign, self.log_mag + shift if self.sign else -math.inf)


def to_arrays(values) -> tuple[np.ndarray, np.ndarray]:
    """Split an iterable of :class:`LogScaledValue` into sign and log arrays."""
    vals = list(values)
    return (np.array([v.sign for v in vals], dtype=float),
            np.array([v.log_mag for v in vals], dtype=float))

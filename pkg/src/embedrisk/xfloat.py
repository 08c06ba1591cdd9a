"""Extended-range scalars stored as (sign, log magnitude).

Bound formulas in this package combine quantities like cosh^2(40) with
sample-size thresholds around 1e70, which sit outside or near the edge of
what float64 expresses comfortably.  ``XFloat`` keeps the natural log of the
magnitude plus a sign, so products, powers and sums of such quantities stay
exact to ~15 digits.  Conversion to a plain float happens only at report
time; an overflowing conversion is flagged instead of silently saturating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["XFloat", "log_sinh", "log_cosh", "OverflowToFloat"]

_LN2 = math.log(2.0)


class OverflowToFloat(OverflowError):
    """Raised when a strict float conversion would overflow float64."""


def log_sinh(r: float) -> float:
    """log(sinh r) for r > 0, safe for very large r."""
    if r <= 0:
        raise ValueError("log_sinh needs r > 0")
    if r < 20.0:
        return math.log(math.sinh(r))
    # sinh r = e^r (1 - e^{-2r}) / 2
    return r + math.log1p(-math.exp(-2.0 * r)) - _LN2


def log_cosh(r: float) -> float:
    """log(cosh r), safe for very large |r|."""
    r = abs(r)
    if r < 20.0:
        return math.log(math.cosh(r))
    return r + math.log1p(math.exp(-2.0 * r)) - _LN2


@dataclass(frozen=True)
class XFloat:
    """A real number sign * exp(logmag)."""

    sign: int
    logmag: float

    # -- construction -------------------------------------------------

    @staticmethod
    def from_float(x: float) -> "XFloat":
        if x == 0:
            return XFloat(0, -math.inf)
        if not math.isfinite(x):
            raise ValueError(f"cannot represent {x!r}")
        return XFloat(1 if x > 0 else -1, math.log(abs(x)))

    @staticmethod
    def from_log(logmag: float, sign: int = 1) -> "XFloat":
        if sign == 0:
            return XFloat(0, -math.inf)
        return XFloat(1 if sign > 0 else -1, float(logmag))

    @staticmethod
    def cosh(r: float) -> "XFloat":
        return XFloat(1, log_cosh(r))

    @staticmethod
    def sinh(r: float) -> "XFloat":
        if r == 0:
            return XFloat(0, -math.inf)
        return XFloat(1 if r > 0 else -1, log_sinh(abs(r)))

    # -- conversion ----------------------------------------------------

    @property
    def overflows(self) -> bool:
        return self.sign != 0 and self.logmag > 709.0

    def to_float(self, strict: bool = False) -> float:
        """Plain float value; inf (or a raised error when strict) on overflow."""
        if self.sign == 0:
            return 0.0
        if self.overflows:
            if strict:
                raise OverflowToFloat(f"log magnitude {self.logmag:.3f} exceeds float64")
            return math.inf * self.sign
        return self.sign * math.exp(self.logmag)

    def log10(self) -> float:
        if self.sign <= 0:
            raise ValueError("log10 of a non-positive XFloat")
        return self.logmag / math.log(10.0)

    def ln(self) -> float:
        if self.sign <= 0:
            raise ValueError("ln of a non-positive XFloat")
        return self.logmag

    # -- arithmetic ----------------------------------------------------

    @staticmethod
    def _coerce(other) -> "XFloat":
        if isinstance(other, XFloat):
            return other
        return XFloat.from_float(float(other))

    def __neg__(self) -> "XFloat":
        return XFloat(-self.sign, self.logmag)

    def __abs__(self) -> "XFloat":
        return XFloat(abs(self.sign), self.logmag)

    def __mul__(self, other) -> "XFloat":
        o = self._coerce(other)
        s = self.sign * o.sign
        if s == 0:
            return XFloat(0, -math.inf)
        return XFloat(s, self.logmag + o.logmag)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "XFloat":
        o = self._coerce(other)
        if o.sign == 0:
            raise ZeroDivisionError("XFloat division by zero")
        if self.sign == 0:
            return XFloat(0, -math.inf)
        return XFloat(self.sign * o.sign, self.logmag - o.logmag)

    def __rtruediv__(self, other) -> "XFloat":
        return self._coerce(other) / self

    def __add__(self, other) -> "XFloat":
        o = self._coerce(other)
        if self.sign == 0:
            return o
        if o.sign == 0:
            return self
        a, b = self, o
        if a.logmag < b.logmag:
            a, b = b, a
        d = b.logmag - a.logmag  # <= 0
        if a.sign == b.sign:
            return XFloat(a.sign, a.logmag + math.log1p(math.exp(d)))
        diff = -math.expm1(d)  # |a| - |b| = |a| * diff, diff in [0, 1)
        if diff == 0.0:
            return XFloat(0, -math.inf)
        return XFloat(a.sign, a.logmag + math.log(diff))

    __radd__ = __add__

    def __sub__(self, other) -> "XFloat":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "XFloat":
        return self._coerce(other) + (-self)

    def __pow__(self, p: float) -> "XFloat":
        if self.sign == 0:
            if p <= 0:
                raise ZeroDivisionError("0 ** non-positive power")
            return self
        if self.sign < 0:
            if p != int(p):
                raise ValueError("fractional power of a negative XFloat")
            s = -1 if int(p) % 2 else 1
            return XFloat(s, self.logmag * p)
        return XFloat(1, self.logmag * p)

    def sqrt(self) -> "XFloat":
        if self.sign < 0:
            raise ValueError("sqrt of a negative XFloat")
        if self.sign == 0:
            return self
        return XFloat(1, self.logmag / 2.0)

    # -- comparison ----------------------------------------------------

    def _cmp(self, other) -> int:
        o = self._coerce(other)
        if self.sign != o.sign:
            return -1 if self.sign < o.sign else 1
        if self.sign == 0:
            return 0
        if self.logmag == o.logmag:
            return 0
        bigger_mag = self.logmag > o.logmag
        if self.sign > 0:
            return 1 if bigger_mag else -1
        return -1 if bigger_mag else 1

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self.sign, self.logmag))

    def __repr__(self):
        if self.sign == 0:
            return "XFloat(0)"
        return f"XFloat({'+' if self.sign > 0 else '-'}10^{self.logmag / math.log(10.0):.6f})"


def xmin(a: XFloat, b: XFloat) -> XFloat:
    return a if a <= b else b


def xmax(a: XFloat, b: XFloat) -> XFloat:
    return a if a >= b else b

"""Base-10 logarithms for probabilities far below the float range (such as 2^-10000)."""

from __future__ import annotations

import math
from decimal import Decimal, InvalidOperation

from .errors import OutOfRange

LOG10_2 = math.log10(2.0)


def log10_of(value) -> float:
    """``log10`` of a positive number given as float, int, Decimal or string.

    Strings go through :class:`~decimal.Decimal`, so ``"1e-5000"`` works even
    though it underflows as a float.
    """
    if isinstance(value, str):
        try:
            value = Decimal(value.strip())
        except InvalidOperation as exc:
            raise OutOfRange(f"not a number: {value!r}") from exc
    if isinstance(value, Decimal):
        if not value.is_finite() or value <= 0:
            raise OutOfRange(f"log10 of non-positive value {value}")
        return float(value.log10())
    value = float(value)
    if not value > 0 or math.isinf(value):
        raise OutOfRange(f"log10 of non-positive value {value}")
    return math.log10(value)


def log2_from_log10(x: float) -> float:
    return x / LOG10_2


def log10_from_log2(x: float) -> float:
    return x * LOG10_2


def mantissa_exponent(log10_value: float) -> tuple[float, int]:
    """Split ``10**log10_value`` into ``(mantissa, exponent)`` with ``1 ≤ mantissa < 10``."""
    if math.isinf(log10_value):
        return (0.0, 0) if log10_value < 0 else (math.inf, 0)
    exponent = math.floor(log10_value)
    mantissa = 10.0 ** (log10_value - exponent)
    if mantissa >= 10.0:
        mantissa, exponent = mantissa / 10.0, exponent + 1
    return mantissa, exponent


def format_log10(log10_value: float, digits: int = 1) -> str:
    """Scientific notation, for example ``format_log10(-3010.3) == '5.0e-3011'``."""
    mantissa, exponent = mantissa_exponent(log10_value)
    text = f"{mantissa:.{digits}f}"
    if float(text) >= 10.0:
        mantissa, exponent = mantissa / 10.0, exponent + 1
        text = f"{mantissa:.{digits}f}"
    return f"{text}e{exponent:+d}".replace("e+", "e")

"""
Parameter value lists for sweeps.

This module expands user-facing value specifications into concrete,
ordered lists of numbers.

Supported syntax
----------------
- ``a,b,c``               : explicit list, kept in the given order
- ``start:stop:factor``   : geometric range start, start*factor, ... up to
                            and including stop (factor > 1 or < 1)
- ``base^exponent``       : a power, usable anywhere a number is expected

Examples
--------
- ``2e-4,2e-5,2e-6``      -> [2e-4, 2e-5, 2e-6]
- ``2^-12:2^-24:2^-4``    -> [2^-12, 2^-16, 2^-20, 2^-24]
- ``256:4096:2``          -> [256, 512, 1024, 2048, 4096]
"""

from typing import Callable, TypeVar
import math
import re

from .lattice_errors import InvalidParameter

T = TypeVar("T", int, float)

_POWER = re.compile(r"^([^\^]+)\^([^\^]+)$")
_RANGE_TOLERANCE = 1e-9


def normalize_value_spec(value: str) -> str:
    """Strip whitespace and surrounding brackets."""
    value = re.sub(r"\s+", "", str(value))
    return value.strip("[]()")


def is_range(spec: str) -> bool:
    return ":" in normalize_value_spec(spec)


def parse_number(token: str) -> float:
    """
    Parse a float, accepting ``base^exponent``.

    Raises
    ------
    InvalidParameter
        If the token is not a finite number.
    """
    token = normalize_value_spec(token)
    m = _POWER.match(token)
    try:
        value = float(m.group(1)) ** float(m.group(2)) if m else float(token)
    except (ValueError, OverflowError, ZeroDivisionError):
        raise InvalidParameter(f"Not a number: {token!r}") from None
    if not math.isfinite(value):
        raise InvalidParameter(f"Not a finite number: {token!r}")
    return value


def geometric_range(start: float, stop: float, factor: float) -> list[float]:
    """
    Geometric progression from ``start`` towards ``stop``, both included.

    The endpoint is included when it is reached within a relative 1e-9.
    """
    if start <= 0.0 or stop <= 0.0:
        raise InvalidParameter(f"Geometric range bounds must be positive, got {start!r}:{stop!r}")
    if factor <= 0.0 or factor == 1.0:
        raise InvalidParameter(f"Geometric range factor must be positive and != 1, got {factor!r}")
    if (stop > start) != (factor > 1.0) and stop != start:
        raise InvalidParameter(f"Factor {factor!r} never reaches {stop!r} from {start!r}")

    steps = math.log(stop / start) / math.log(factor)
    count = int(math.floor(steps + _RANGE_TOLERANCE)) + 1
    return [start * factor**k for k in range(count)]


def _expand(spec: str, cast: Callable[[float], T]) -> list[T]:
    spec = normalize_value_spec(spec)
    if not spec:
        raise InvalidParameter("Empty value specification.")

    if is_range(spec):
        parts = spec.split(":")
        if len(parts) != 3:
            raise InvalidParameter(f"Range must read start:stop:factor, got {spec!r}")
        start, stop, factor = (parse_number(x) for x in parts)
        return [cast(v) for v in geometric_range(start, stop, factor)]

    return [cast(parse_number(x)) for x in spec.split(",") if x]


def _as_int(value: float) -> int:
    rounded = round(value)
    if abs(value - rounded) > _RANGE_TOLERANCE * max(1.0, abs(value)):
        raise InvalidParameter(f"Expected an integer, got {value!r}")
    return int(rounded)


def parse_float_values(spec: str) -> list[float]:
    """Expand a list or geometric range of floats."""
    return _expand(spec, float)


def parse_int_values(spec: str) -> list[int]:
    """Expand a list or geometric range of integers (e.g. system sizes)."""
    return _expand(spec, _as_int)

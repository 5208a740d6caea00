from typing import Any, Optional

class GPDisorderError(RuntimeError): ...
class LatticeError(GPDisorderError): ...
class InvalidParameter(LatticeError, ValueError): ...
class DimensionMismatch(LatticeError, ValueError): ...
class NotNormalized(LatticeError, ValueError): ...
class OutOfRegime(LatticeError): ...


class WaterFillError(LatticeError):
    """Raised when the multiplier cannot be bracketed or isolated."""

    def __init__(self, msg: str, *, lo: float, hi: float, sum_lo: float, sum_hi: float, target: float):
        super().__init__(f"{msg} (lambda in [{lo:.6g}, {hi:.6g}], mass in [{sum_lo:.6g}, {sum_hi:.6g}], target={target:.6g})")
        self.lo = lo
        self.hi = hi
        self.sum_lo = sum_lo
        self.sum_hi = sum_hi
        self.target = target


class ConfigError(GPDisorderError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")
        self.field = field


def _raise_invalid(name: str, value: Any, expected: str, *, where: Optional[str] = None) -> None:
    prefix = f"{where}: " if where else ""
    raise InvalidParameter(f"{prefix}{name}={value!r} is invalid, expected {expected}")


def check_probability(p: float, *, allow_one: bool = False, where: Optional[str] = None) -> float:
    p = float(p)
    upper_ok = p <= 1.0 if allow_one else p < 1.0
    if not (p > 0.0 and upper_ok):
        _raise_invalid("p", p, "0 < p <= 1" if allow_one else "0 < p < 1", where=where)
    return p


def check_positive(name: str, value: float, *, where: Optional[str] = None) -> float:
    value = float(value)
    if not value > 0.0:
        _raise_invalid(name, value, "a positive number", where=where)
    return value


def check_nonnegative(name: str, value: float, *, where: Optional[str] = None) -> float:
    value = float(value)
    if not value >= 0.0:
        _raise_invalid(name, value, "a nonnegative number", where=where)
    return value


def check_count(name: str, value: int, *, minimum: int = 1, where: Optional[str] = None) -> int:
    if isinstance(value, bool) or int(value) != value or int(value) < minimum:
        _raise_invalid(name, value, f"an integer >= {minimum}", where=where)
    return int(value)

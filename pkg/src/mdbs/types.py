"""Scalar layer of the common data model: canonical types, values and coercions."""
from __future__ import annotations

import math
from enum import Enum
from typing import Optional, Union


class CanonicalType(str, Enum):
    INT = "INT"
    FLOAT = "FLOAT"
    STRING = "STRING"
    BOOL = "BOOL"

    def __str__(self) -> str:
        return self.value


# A canonical value as held in rows and literals. None is NULL.
Value = Union[int, float, str, bool, None]

# Legal coercions (source -> allowed targets).  STRING parses strictly,
# INT widens exactly; lossy directions (FLOAT->INT, BOOL->numeric) are out.
COERCION_MATRIX: dict[CanonicalType, frozenset[CanonicalType]] = {
    CanonicalType.STRING: frozenset(
        {CanonicalType.INT, CanonicalType.FLOAT, CanonicalType.BOOL}
    ),
    CanonicalType.INT: frozenset({CanonicalType.FLOAT}),
    CanonicalType.FLOAT: frozenset(),
    CanonicalType.BOOL: frozenset(),
}


def legal_cast(source: CanonicalType, target: CanonicalType) -> bool:
    """Identity casts are always legal; anything else consults the matrix."""
    if source == target:
        return True
    return target in COERCION_MATRIX[source]


class CastError(ValueError):
    """A value failed a strict cast."""


def value_conforms(value: Value, ctype: CanonicalType) -> bool:
    if value is None:
        return True
    if ctype is CanonicalType.INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if ctype is CanonicalType.FLOAT:
        return isinstance(value, float)
    if ctype is CanonicalType.STRING:
        return isinstance(value, str)
    return isinstance(value, bool)


def cast_value(value: Value, source: CanonicalType, target: CanonicalType) -> Value:
    """Apply a declared (legal) cast to one value. NULL passes through.

    Strict: a STRING that does not parse as the target raises CastError,
    it is never silently nulled.
    """
    if value is None:
        return None
    if source == target:
        return value
    if not legal_cast(source, target):
        raise CastError(f"illegal cast {source} -> {target}")
    if source is CanonicalType.INT and target is CanonicalType.FLOAT:
        return float(value)
    # remaining legal paths parse a string
    text = str(value)
    if target is CanonicalType.INT:
        try:
            return int(text, 10)
        except ValueError:
            raise CastError(f"{text!r} is not an INT") from None
    if target is CanonicalType.FLOAT:
        try:
            out = float(text)
        except ValueError:
            raise CastError(f"{text!r} is not a FLOAT") from None
        if not math.isfinite(out):
            raise CastError(f"{text!r} is not a finite FLOAT")
        return out
    if target is CanonicalType.BOOL:
        lowered = text.strip().lower()
        if lowered == "true":
            return True
        if lowered == "false":
            return False
        raise CastError(f"{text!r} is not a BOOL")
    raise CastError(f"illegal cast {source} -> {target}")


def parse_cell(text: str, ctype: CanonicalType) -> Value:
    """Parse one textual store cell into a canonical value. Empty text is NULL."""
    if text == "":
        return None
    if ctype is CanonicalType.STRING:
        return text
    return cast_value(text, CanonicalType.STRING, ctype)


def render_cell(value: Value) -> str:
    """Textual store rendering; inverse of parse_cell for conforming values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def widen_literal(value: Value, target: CanonicalType) -> Optional[Value]:
    """Fit a literal to an attribute type, widening INT to FLOAT.

    Returns the (possibly widened) value, or None-marker ``_NO_FIT`` via
    raising ValueError when the literal cannot be used at that type.
    """
    if value is None:
        return None
    if value_conforms(value, target):
        return value
    if (
        target is CanonicalType.FLOAT
        and isinstance(value, int)
        and not isinstance(value, bool)
    ):
        return float(value)
    raise ValueError(f"literal {value!r} does not fit {target}")

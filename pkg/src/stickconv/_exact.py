"""Conversions between user-facing numbers and exact rationals."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

Number = "int | float | Fraction | str"


def to_fraction(x) -> Fraction:
    """Convert ``x`` to a Fraction without binary-float noise.

    Floats go through their shortest repr, so ``0.3`` becomes ``3/10``
    rather than ``5404319552844595/18014398509481984``.  Strings may be
    ``"a/b"`` or decimal literals.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(int(x.numerator), int(x.denominator))
    if isinstance(x, float):
        if x != x or x in (float("inf"), float("-inf")):
            raise ValueError(f"not a finite number: {x!r}")
        return Fraction(repr(float(x)))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational literal: {x!r}") from exc
    # numpy scalars and friends
    return to_fraction(float(x))


def fmt_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def fmt_value(x):
    """JSON-ready form: exact rationals become ``"p/q"`` strings."""
    if isinstance(x, Fraction):
        return fmt_rational(x)
    return float(x)


def parse_value(x):
    if isinstance(x, str):
        return Fraction(x)
    return float(x)

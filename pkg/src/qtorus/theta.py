"""Parsing of rotation parameters and rational approximation by convergents."""
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

NAMED_DIGITS = 50
DEFAULT_Q_MAX = 64


def _named(name: str, digits: int = NAMED_DIGITS) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = digits + 10
        if name == "sqrt2m1":
            value = Decimal(2).sqrt() - 1
        elif name == "golden":
            value = (Decimal(5).sqrt() - 1) / 2
        else:
            raise ValueError(f"unknown named constant {name!r}")
        ctx.prec = digits
        return +value


NAMED_CONSTANTS = ("sqrt2m1", "golden")


def convergents(x: Fraction):
    """Yield the continued-fraction convergents ``p/q`` of a non-negative rational."""
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    num, den = x.numerator, x.denominator
    while den:
        a, r = divmod(num, den)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        yield Fraction(h1, k1)
        num, den = den, r


def best_convergent(x: Fraction, q_max: int = DEFAULT_Q_MAX) -> Fraction:
    """Last convergent of ``x`` (reduced mod 1) with denominator ``<= q_max``."""
    x = x % 1
    best = Fraction(0)
    for c in convergents(x):
        if c.denominator > q_max:
            break
        best = c
    return best % 1


@dataclass(frozen=True)
class ThetaSpec:
    """A resolved rotation parameter.

    ``value`` is the exact rational used by the algebra and the clock/shift
    representation; ``high_precision`` carries the full-precision input
    (for named constants and decimals) and is what the Weyl search uses.
    """

    text: str
    value: Fraction
    high_precision: Fraction
    rational_input: bool
    q_max: int | None

    @property
    def label(self) -> str:
        return f"{self.value.numerator}/{self.value.denominator}"

    def as_json(self) -> dict:
        return {
            "input": self.text,
            "value": self.label,
            "rational_input": self.rational_input,
            "q_max": self.q_max,
        }


_FRAC = re.compile(r"^\s*(-?\d+)\s*/\s*(\d+)\s*$")


def parse_theta(text: str, q_max: int = DEFAULT_Q_MAX) -> ThetaSpec:
    """Parse ``"p/q"``, a decimal, or a named constant (``sqrt2m1``, ``golden``).

    Exact fractions are kept as they are. Decimals and named constants are
    replaced by their last convergent with denominator at most ``q_max``.
    """
    s = str(text).strip()
    m = _FRAC.match(s)
    if m:
        q = int(m.group(2))
        if q == 0:
            raise ValueError(f"zero denominator in theta {text!r}")
        x = Fraction(int(m.group(1)), q) % 1
        return ThetaSpec(s, x, x, True, None)
    if s in NAMED_CONSTANTS:
        hp = Fraction(_named(s))
        return ThetaSpec(s, best_convergent(hp, q_max), hp, False, q_max)
    try:
        hp = Fraction(Decimal(s)) % 1
    except Exception as exc:
        raise ValueError(f"cannot parse theta {text!r}") from exc
    value = best_convergent(hp, q_max)
    return ThetaSpec(s, value, hp, value == hp, q_max)


def parse_theta_list(text: str, q_max: int = DEFAULT_Q_MAX) -> list[ThetaSpec]:
    return [parse_theta(part, q_max) for part in str(text).split(",") if part.strip()]

"""Exact arithmetic in Q_p at a fixed working precision.

A nonzero value is kept in canonical form ``p**valuation * unit`` where
``unit`` is an integer in ``[1, p**eff)`` not divisible by ``p``.  ``eff``
counts the base-p digits of the unit that are actually reliable: it starts
at the context precision N and decreases only when addition cancels leading
digits.  A value is therefore pinned exactly modulo ``p**(valuation+eff)``.
Negative numbers are ordinary p-adic complements; there is no sign field.

Exact equality of two inexact values is undecidable, so ``==`` compares
digits down to the smaller of the two effective precisions.  Operations
whose result would keep no reliable digit raise ``PrecisionLossError``
instead of returning a silent zero; subtracting two identical
representations does return the zero element.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from sympy import isprime


class PadicError(Exception):
    """Base class for p-adic arithmetic errors."""


class PrecisionLossError(PadicError):
    """A result is indistinguishable from zero at the working precision."""


class DomainError(PadicError):
    """Argument lies outside an operation's domain of definition."""


def int_valuation(n: int, p: int) -> int:
    """Exponent of p in a nonzero integer."""
    if n == 0:
        raise ValueError("the valuation of 0 is undefined")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class PrimeContext:
    """Ambient odd prime p and working precision N >= 4 (unit digits tracked)."""

    p: int
    precision: int

    def __post_init__(self) -> None:
        if self.p == 2:
            raise ValueError("p = 2 is not supported; use an odd prime")
        if self.p < 3 or not isprime(self.p):
            raise ValueError(f"{self.p} is not an odd prime")
        if self.precision < 4:
            raise ValueError("working precision must be at least 4")

    def zero(self) -> "PadicNumber":
        return PadicNumber(self, 0, 0, 0)

    def one(self) -> "PadicNumber":
        return PadicNumber(self, 0, 1, self.precision)

    def integer(self, m: int) -> "PadicNumber":
        return from_rational(m, 1, self)

    def rational(self, m: int, n: int) -> "PadicNumber":
        return from_rational(m, n, self)


Coercible = Union["PadicNumber", int, Fraction]


@dataclass(frozen=True, eq=False)
class PadicNumber:
    """Immutable element of Q_p.  Zero is flagged by ``unit == 0``."""

    ctx: PrimeContext
    valuation: int
    unit: int
    eff: int

    @property
    def is_zero(self) -> bool:
        return self.unit == 0

    @property
    def abs_precision(self) -> int:
        """The value is known exactly modulo p**abs_precision."""
        return self.valuation + self.eff

    @property
    def norm(self) -> Fraction:
        """Exact p-adic norm as a rational power of p."""
        if self.is_zero:
            return Fraction(0)
        if self.valuation >= 0:
            return Fraction(1, self.ctx.p ** self.valuation)
        return Fraction(self.ctx.p ** (-self.valuation))

    @property
    def digits(self) -> tuple[int, ...]:
        """Reliable unit digits d0..d(eff-1), least significant first."""
        out = []
        u = self.unit
        for _ in range(self.eff):
            out.append(u % self.ctx.p)
            u //= self.ctx.p
        return tuple(out)

    # -- coercion ---------------------------------------------------------

    def _coerce(self, other: Coercible) -> "PadicNumber | None":
        if isinstance(other, PadicNumber):
            if other.ctx.p != self.ctx.p:
                raise ValueError("cannot mix different primes")
            return other
        if isinstance(other, int):
            return from_rational(other, 1, self.ctx)
        if isinstance(other, Fraction):
            return from_rational(other.numerator, other.denominator, self.ctx)
        return None

    # -- comparison -------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, (PadicNumber, int, Fraction)):
            return NotImplemented
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.is_zero or o.is_zero:
            return self.is_zero and o.is_zero
        if self.valuation != o.valuation:
            return False
        m = min(self.eff, o.eff)
        pm = self.ctx.p ** m
        return self.unit % pm == o.unit % pm

    __hash__ = None  # equality is precision-relative; not hashable

    # -- ring operations --------------------------------------------------

    def __add__(self, other: Coercible) -> "PadicNumber":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.is_zero:
            return o
        if o.is_zero:
            return self
        p = self.ctx.p
        v0 = min(self.valuation, o.valuation)
        abs_prec = min(self.abs_precision, o.abs_precision)
        span = abs_prec - v0
        s = self.unit * p ** (self.valuation - v0) + o.unit * p ** (o.valuation - v0)
        if s == 0:
            return self.ctx.zero()
        s_mod = s % p ** span
        if s_mod == 0:
            raise PrecisionLossError(
                f"result indistinguishable from zero modulo {p}^{abs_prec}"
            )
        t = int_valuation(s_mod, p)
        val = v0 + t
        eff = min(self.ctx.precision, abs_prec - val)
        unit = (s_mod // p ** t) % p ** eff
        return PadicNumber(self.ctx, val, unit, eff)

    def __radd__(self, other: Coercible) -> "PadicNumber":
        return self.__add__(other)

    def __neg__(self) -> "PadicNumber":
        if self.is_zero:
            return self
        pm = self.ctx.p ** self.eff
        return PadicNumber(self.ctx, self.valuation, (-self.unit) % pm, self.eff)

    def __sub__(self, other: Coercible) -> "PadicNumber":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.__add__(-o)

    def __rsub__(self, other: Coercible) -> "PadicNumber":
        return (-self).__add__(other)

    def __mul__(self, other: Coercible) -> "PadicNumber":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.is_zero or o.is_zero:
            return self.ctx.zero()
        eff = min(self.eff, o.eff)
        unit = (self.unit * o.unit) % self.ctx.p ** eff
        return PadicNumber(self.ctx, self.valuation + o.valuation, unit, eff)

    def __rmul__(self, other: Coercible) -> "PadicNumber":
        return self.__mul__(other)

    def __truediv__(self, other: Coercible) -> "PadicNumber":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.is_zero:
            raise ZeroDivisionError("division by p-adic zero")
        if self.is_zero:
            return self
        eff = min(self.eff, o.eff)
        pm = self.ctx.p ** eff
        unit = (self.unit * pow(o.unit, -1, pm)) % pm
        return PadicNumber(self.ctx, self.valuation - o.valuation, unit, eff)

    def __rtruediv__(self, other: Coercible) -> "PadicNumber":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def __pow__(self, e: int) -> "PadicNumber":
        if e < 0:
            return pow_int(self.ctx.one() / self, -e)
        return pow_int(self, e)

    # -- text / JSON forms --------------------------------------------------

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"PadicNumber({to_text(self)!r}, p={self.ctx.p})"


def from_rational(m: int, n: int, ctx: PrimeContext) -> PadicNumber:
    """Canonical expansion of m/n to the working precision."""
    if n == 0:
        raise ZeroDivisionError("zero denominator")
    if m == 0:
        return ctx.zero()
    p, N = ctx.p, ctx.precision
    vm = int_valuation(m, p)
    vn = int_valuation(n, p)
    mu = m // p ** vm
    nu = n // p ** vn
    pm = p ** N
    unit = (mu * pow(nu, -1, pm)) % pm
    return PadicNumber(ctx, vm - vn, unit, N)


def pow_int(x: PadicNumber, e: int) -> PadicNumber:
    """Exact nonnegative integer power by repeated squaring."""
    if e < 0:
        raise ValueError("pow_int requires a nonnegative exponent")
    if e == 0:
        return x.ctx.one()
    if x.is_zero:
        return x
    pm = x.ctx.p ** x.eff
    return PadicNumber(x.ctx, x.valuation * e, pow(x.unit, e, pm), x.eff)


def eq_mod(x: PadicNumber, y: PadicNumber, m: int) -> bool:
    """Decide x == y (mod p^m); both arguments must be pinned at least that far."""
    for z in (x, y):
        if not z.is_zero and z.abs_precision < m:
            raise PrecisionLossError(
                f"congruence mod p^{m} exceeds the tracked precision p^{z.abs_precision}"
            )
    try:
        d = x - y
    except PrecisionLossError:
        # cancellation beyond the shared absolute precision, which is >= m
        return True
    return d.is_zero or d.valuation >= m


def padic_sum(terms: Iterable[PadicNumber], ctx: PrimeContext) -> PadicNumber:
    """Exact sum of many values without intermediate normalization."""
    live = [t for t in terms if not t.is_zero]
    if not live:
        return ctx.zero()
    p = ctx.p
    floor = min(t.valuation for t in live)
    abs_prec = min(t.abs_precision for t in live)
    acc = 0
    for t in live:
        acc += t.unit * p ** (t.valuation - floor)
    return _from_aligned_int(acc, floor, abs_prec, ctx)


def _from_aligned_int(acc: int, floor: int, abs_prec: int, ctx: PrimeContext) -> PadicNumber:
    """Build a value from an exact integer at scale p**floor, pinned mod p**abs_prec."""
    p = ctx.p
    if acc == 0:
        return ctx.zero()
    span = abs_prec - floor
    s_mod = acc % p ** span
    if s_mod == 0:
        raise PrecisionLossError(
            f"sum indistinguishable from zero modulo {p}^{abs_prec}; "
            f"rerun at higher working precision"
        )
    t = int_valuation(s_mod, p)
    val = floor + t
    eff = min(ctx.precision, abs_prec - val)
    return PadicNumber(ctx, val, (s_mod // p ** t) % p ** eff, eff)


def norm_str(x: PadicNumber) -> str:
    """Exact norm rendered as a "p^e" string ("0" for the zero element)."""
    if x.is_zero:
        return "0"
    return f"{x.ctx.p}^{-x.valuation}"


def to_text(x: PadicNumber) -> str:
    """Render as "p^v * [d0,d1,...] (prec M)"; the zero element renders as "0"."""
    if x.is_zero:
        return "0"
    ds = ",".join(str(d) for d in x.digits)
    return f"{x.ctx.p}^{x.valuation} * [{ds}] (prec {x.eff})"


_TEXT_RE = re.compile(r"^(\d+)\^(-?\d+) \* \[([0-9,]+)\] \(prec (\d+)\)$")


def from_text(s: str, ctx: PrimeContext) -> PadicNumber:
    """Parse the textual form produced by ``to_text``."""
    s = s.strip()
    if s == "0":
        return ctx.zero()
    m = _TEXT_RE.match(s)
    if m is None:
        raise ValueError(f"not a p-adic literal: {s!r}")
    p, val, digits_s, eff = int(m.group(1)), int(m.group(2)), m.group(3), int(m.group(4))
    if p != ctx.p:
        raise ValueError(f"prime mismatch: literal has p={p}, context has p={ctx.p}")
    digits = [int(d) for d in digits_s.split(",")]
    return from_digits(ctx, val, digits, eff)


def from_digits(ctx: PrimeContext, valuation: int, digits: list[int], eff: int | None = None) -> PadicNumber:
    """Build a value from explicit unit digits (least significant first)."""
    if eff is None:
        eff = len(digits)
    if eff != len(digits) or eff < 1 or eff > ctx.precision:
        raise ValueError("digit count must equal eff and lie in [1, precision]")
    if any(d < 0 or d >= ctx.p for d in digits):
        raise ValueError(f"digits must lie in [0, {ctx.p - 1}]")
    if digits[0] == 0:
        raise ValueError("leading unit digit must be nonzero")
    unit = 0
    for d in reversed(digits):
        unit = unit * ctx.p + d
    return PadicNumber(ctx, valuation, unit, eff)


def to_json_dict(x: PadicNumber) -> dict:
    """JSON form {p, valuation, digits, effective_precision}; zero is {p, zero}."""
    if x.is_zero:
        return {"p": x.ctx.p, "zero": True}
    return {
        "p": x.ctx.p,
        "valuation": x.valuation,
        "digits": list(x.digits),
        "effective_precision": x.eff,
    }


def from_json_dict(d: dict, ctx: PrimeContext) -> PadicNumber:
    if d.get("p") != ctx.p:
        raise ValueError("prime mismatch between JSON value and context")
    if d.get("zero"):
        return ctx.zero()
    return from_digits(ctx, d["valuation"], list(d["digits"]), d["effective_precision"])

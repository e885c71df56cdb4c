"""p-adic exponential and logarithm, unit-group membership, residue counts,
roots of unity, and square roots.

For an odd prime the convergence threshold p^(-1/(p-1)) of exp_p lies
strictly between 1/p and 1, and norms are integer powers of p, so every
domain test below is a plain valuation comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from sympy import isprime
from sympy.ntheory import sqrt_mod
from sympy.ntheory.residue_ntheory import primitive_root

from . import hensel
from .padic import DomainError, PadicNumber, PrimeContext


def exp_p(x: PadicNumber) -> PadicNumber:
    """Exponential series sum(x^n / n!); requires |x|_p <= 1/p."""
    ctx = x.ctx
    if x.is_zero:
        return ctx.one()
    if x.valuation < 1:
        raise DomainError("exp_p requires |x|_p <= 1/p for odd p")
    p, N = ctx.p, ctx.precision
    v = x.valuation
    # val(x^n/n!) = n*v - (n - s_p(n))/(p-1) > n*(v - 1/(p-1)), so every term
    # beyond n_max has valuation above the working precision
    n_max = (N * (p - 1)) // (v * (p - 1) - 1) + 1
    total = ctx.one()
    term = ctx.one()
    for n in range(1, n_max + 1):
        term = term * x / n
        total = total + term
    return total


def log_p(x: PadicNumber) -> PadicNumber:
    """Logarithm series of 1 + (x-1); requires |x - 1|_p < 1."""
    ctx = x.ctx
    if x.is_zero:
        raise DomainError("log_p is undefined at zero")
    t = x - 1
    if t.is_zero:
        return ctx.zero()
    if x.valuation != 0 or t.valuation < 1:
        raise DomainError("log_p requires |x - 1|_p < 1")
    p, N = ctx.p, ctx.precision
    vt = t.valuation
    total = ctx.zero()
    tpow = ctx.one()
    n = 0
    while True:
        n += 1
        # stop once n*vt - floor(log_p n) exceeds N; nondecreasing for vt >= 1
        if n * vt - _ilog(n, p) > N:
            break
        tpow = tpow * t
        term = tpow / n
        total = total + term if n % 2 == 1 else total - term
    return total


def _ilog(n: int, p: int) -> int:
    out = 0
    while n >= p:
        n //= p
        out += 1
    return out


@dataclass(frozen=True)
class EpMembership:
    """Membership of a value in the principal unit group or its negation."""

    in_Ep: bool
    in_minus_Ep: bool
    witness_norm: Fraction


def ep_membership(x: PadicNumber) -> EpMembership:
    """Test |x|_p = 1 together with |x -+ 1|_p <= 1/p (odd-prime threshold)."""
    if x.is_zero or x.valuation != 0:
        return EpMembership(False, False, (x - 1).norm if not x.is_zero else Fraction(1))
    d0 = x.unit % x.ctx.p
    if d0 == 1:
        return EpMembership(True, False, (x - 1).norm)
    if d0 == x.ctx.p - 1:
        return EpMembership(False, True, (x + 1).norm)
    return EpMembership(False, False, (x - 1).norm)


def in_Ep(x: PadicNumber) -> bool:
    return ep_membership(x).in_Ep


def in_minus_Ep(x: PadicNumber) -> bool:
    return ep_membership(x).in_minus_Ep


def kth_residue_count(k: int, p: int) -> int:
    """Number of solutions of x^k = -1 in the prime field F_p."""
    _check_odd_prime(p)
    if k < 1:
        raise ValueError("k must be positive")
    d = math.gcd(k, p - 1)
    return d if ((p - 1) // d) % 2 == 0 else 0


def minus_one_residues(k: int, p: int) -> list[int]:
    """All residues x mod p with x^k = -1, by exhaustive search."""
    _check_odd_prime(p)
    return [x for x in range(1, p) if pow(x, k, p) == p - 1]


def minus_one_kth_root_exists_Qp(k: int, p: int) -> bool:
    """Solvability of x^k = -1 in Q_p: strip p-power from k, then parity test."""
    _check_odd_prime(p)
    if k < 1:
        raise ValueError("k must be positive")
    q = k
    while q % p == 0:
        q //= p
    d = math.gcd(q, p - 1)
    return ((p - 1) // d) % 2 == 0


def roots_of_unity(k: int, ctx: PrimeContext) -> list[PadicNumber]:
    """The gcd(k, p-1) k-th roots of unity in Q_p, each Hensel-lifted from a
    distinct residue mod p on X^d - 1.  Sorted by that residue."""
    if k < 1:
        raise ValueError("k must be positive")
    p = ctx.p
    d = math.gcd(k, p - 1)
    if d == 1:
        return [ctx.one()]
    g = primitive_root(p)
    step = (p - 1) // d
    seeds = sorted(pow(g, step * i, p) for i in range(d))
    poly = hensel.IntPolySystem(
        1,
        (
            (
                hensel.PolyTerm(ctx.one(), (d,)),
                hensel.PolyTerm(ctx.integer(-1), (0,)),
            ),
        ),
    )
    return [hensel.lift(poly, (s,), ctx)[0] for s in seeds]


def sqrt(x: PadicNumber) -> PadicNumber | None:
    """Square root in Q_p when it exists.

    Raises on odd valuation (no root exists in Q_p); returns None when the
    leading unit digit is a quadratic nonresidue.  The returned root is the
    Hensel lift of the smaller mod-p root; the other root is its negation.
    """
    ctx = x.ctx
    if x.is_zero:
        return x
    if x.valuation % 2 != 0:
        raise DomainError("odd valuation: no square root in Q_p")
    d0 = x.unit % ctx.p
    seed = sqrt_mod(d0, ctx.p)
    if seed is None:
        return None
    seed = min(seed, ctx.p - seed)
    unit_part = PadicNumber(ctx, 0, x.unit, x.eff)
    poly = hensel.IntPolySystem(
        1,
        (
            (
                hensel.PolyTerm(ctx.one(), (2,)),
                hensel.PolyTerm(-unit_part, (0,)),
            ),
        ),
    )
    root = hensel.lift(poly, (seed,), ctx)[0]
    return PadicNumber(ctx, x.valuation // 2 + root.valuation, root.unit, root.eff)


def _check_odd_prime(p: int) -> None:
    if p < 3 or not isprime(p):
        raise ValueError(f"{p} is not an odd prime")

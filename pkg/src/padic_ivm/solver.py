"""Fixed points of the boundary-field recurrence.

Covers the scalar recurrence map and its auxiliary unit map, the unique
principal-unit solution (found both by contraction iteration and by
multivariate Hensel lifting, which must agree), the census of diagonal
solutions congruent to -1, 2-periodic solutions on the order-two tree, and
the inward backward recursion together with its contraction certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from . import analysis, hensel
from .model import CouplingParams, ModelError, UTriple, recurrence_step
from .padic import (
    PadicError,
    PadicNumber,
    PrecisionLossError,
    eq_mod,
    int_valuation,
    pow_int,
    to_json_dict,
)
from .tree import Edge, TreeIndex


class IterationCapError(PadicError):
    """Contraction iteration failed to stabilize within its certified cap."""


class UnsupportedParameterRegimeError(PadicError):
    """p divides k with an even parity criterion: the census is not settled
    by any implemented branch, so no answer is fabricated."""


class InternalConsistencyError(PadicError):
    """Two independent computations of the same object disagree."""


class CensusAnomalyError(PadicError):
    """Solutions expected to be distinct collide at the dedup precision."""


Value = Union[PadicNumber, UTriple]


@dataclass(frozen=True)
class FixedPointCertificate:
    """A solved fixed point with the data needed to re-check it."""

    value: Value
    branch: str  # "Ep" | "MinusEp" | "TwoPeriodic"
    residual_norm: Fraction
    seed_residue: int
    contraction_factor: Fraction | None

    def to_json_dict(self) -> dict:
        if isinstance(self.value, UTriple):
            value = [to_json_dict(c) for c in self.value.components()]
        else:
            value = to_json_dict(self.value)
        cf = self.contraction_factor
        return {
            "branch": self.branch,
            "seed_residue": self.seed_residue,
            "value": value,
            "residual_norm": _norm_pow_str(self.residual_norm, _value_p(self.value)),
            "contraction_factor": None if cf is None else _norm_pow_str(cf, _value_p(self.value)),
        }


def _value_p(v: Value) -> int:
    return (v.u1 if isinstance(v, UTriple) else v).ctx.p


def _norm_pow_str(f: Fraction, p: int) -> str:
    if f == 0:
        return "0"
    num, den, e = f.numerator, f.denominator, 0
    while den % p == 0:
        den //= p
        e -= 1
    while num % p == 0:
        num //= p
        e += 1
    return f"{p}^{e}"


def ising_potts_map(u: PadicNumber, cp: CouplingParams) -> PadicNumber:
    """The scalar recurrence map a^2 ((b^2 u + 1)/(u + b^2))^k."""
    den = u + cp.b2
    if den.is_zero:
        raise ZeroDivisionError("vanishing denominator u + b^2")
    return cp.a2 * ((cp.b2 * u + 1) / den) ** cp.k


def aux_unit_map(x: PadicNumber, cp: CouplingParams) -> PadicNumber:
    """Auxiliary map (a^2 b^2 x^k + 1)/(a^2 x^k + b^2); a contraction on the
    principal units with factor |b^4 - 1|_p."""
    xk = x ** cp.k
    den = cp.a2 * xk + cp.b2
    if den.is_zero:
        raise ZeroDivisionError("vanishing denominator a^2 x^k + b^2")
    return (cp.a2 * cp.b2 * xk + 1) / den


def tru_map(u: UTriple, cp: CouplingParams) -> UTriple:
    """One application of the three-component translation-invariant system."""
    a2, b2, k = cp.a2, cp.b2, cp.k
    d3 = u.u3 + b2
    d2 = u.u2 + b2
    if d3.is_zero or d2.is_zero or u.u1.is_zero or u.u3.is_zero:
        raise ZeroDivisionError("vanishing denominator in the fixed-point system")
    f1 = a2 * ((b2 * u.u3 + 1) / d3) ** k
    f2 = a2 * ((b2 * u.u2 + 1) * u.u3 / (d3 * u.u1)) ** k
    f3 = a2 * ((b2 * u.u3 + 1) * u.u1 / (d2 * u.u3)) ** k
    return UTriple(f1, f2, f3)


def tru_residual(u: UTriple, cp: CouplingParams) -> Fraction:
    """Max componentwise norm of F(u) - u (zero for an exact fixed point)."""
    image = tru_map(u, cp)
    worst = Fraction(0)
    for lhs, rhs in zip(image.components(), u.components()):
        try:
            d = lhs - rhs
        except PrecisionLossError:
            continue
        if d.norm > worst:
            worst = d.norm
    return worst


def _iterate_to_fixed_point(step, x0: PadicNumber, factor_valuation: int, ctx) -> PadicNumber:
    cap = ctx.precision * max(1, -(-1 // factor_valuation))
    x = x0
    for _ in range(cap):
        nxt = step(x)
        if nxt == x:
            return nxt
        x = nxt
    raise IterationCapError(
        f"no stabilization within {cap} iterations at contraction exponent {factor_valuation}"
    )


def fix_in_Ep(cp: CouplingParams) -> FixedPointCertificate:
    """The unique fixed point of the scalar map among principal units,
    found by iterating the auxiliary map from seed 1."""
    ctx = cp.ctx
    b4m1 = pow_int(cp.b, 4) - 1
    v = b4m1.valuation  # certified contraction exponent, >= 1
    x = _iterate_to_fixed_point(lambda t: aux_unit_map(t, cp), ctx.one(), v, ctx)
    u = cp.a2 * x ** cp.k
    residual = _scalar_residual(u, cp)
    return FixedPointCertificate(
        value=u,
        branch="Ep",
        residual_norm=residual,
        seed_residue=1,
        contraction_factor=Fraction(1, ctx.p ** v),
    )


def _scalar_residual(u: PadicNumber, cp: CouplingParams) -> Fraction:
    try:
        d = ising_potts_map(u, cp) - u
    except PrecisionLossError:
        return Fraction(0)
    return d.norm


def _norms_allow_minus_one_ball(cp: CouplingParams) -> bool:
    """max(|k|_p, |a-1|_p) < |b-1|_p, the odd-k contraction premise."""
    p = cp.ctx.p
    vk = int_valuation(cp.k, p) if cp.k % p == 0 else 0
    norm_k = Fraction(1, p ** vk)
    norm_am1 = (cp.a - 1).norm
    norm_bm1 = (cp.b - 1).norm
    return max(norm_k, norm_am1) < norm_bm1


def minus_one_ball_contraction_factor(cp: CouplingParams) -> Fraction:
    p = cp.ctx.p
    vk = int_valuation(cp.k, p) if cp.k % p == 0 else 0
    vb = (cp.b - 1).valuation
    return Fraction(1, p ** (vk - vb))


def fix_in_minus_Ep(cp: CouplingParams) -> list[FixedPointCertificate]:
    """All fixed points of the scalar map congruent to -1 mod p.

    Empty when (p-1)/gcd(k,p-1) is odd.  When k is coprime to p and the
    ratio is even there are exactly gcd(k,p-1) of them, one Hensel lift per
    residue whose k-th power is -1.  When p divides k, only the odd-k
    contraction ball is implemented; any other regime raises rather than
    guessing.
    """
    ctx = cp.ctx
    p, k = ctx.p, cp.k
    d = math.gcd(k, p - 1)
    if ((p - 1) // d) % 2 == 1:
        return []
    certs: list[FixedPointCertificate] = []
    if k % p != 0:
        poly = diagonal_unit_poly(cp)
        for alpha in analysis.minus_one_residues(k, p):
            x = hensel.lift(poly, (alpha,), ctx)[0]
            u = cp.a2 * x ** k
            certs.append(
                FixedPointCertificate(
                    value=u,
                    branch="MinusEp",
                    residual_norm=_scalar_residual(u, cp),
                    seed_residue=alpha,
                    contraction_factor=None,
                )
            )
        _check_distinct(certs, ctx)
    elif not (k % 2 == 1 and _norms_allow_minus_one_ball(cp)):
        raise UnsupportedParameterRegimeError(
            f"p={p} divides k={k} with an even parity criterion; "
            "the census in this regime is not settled"
        )
    if k % 2 == 1 and _norms_allow_minus_one_ball(cp):
        factor = minus_one_ball_contraction_factor(cp)
        v = int_valuation(factor.denominator, p)
        u0 = ctx.integer(-1)
        u = _iterate_to_fixed_point(lambda t: ising_potts_map(t, cp), u0, v, ctx)
        cert = FixedPointCertificate(
            value=u,
            branch="MinusEp",
            residual_norm=_scalar_residual(u, cp),
            seed_residue=p - 1,
            contraction_factor=factor,
        )
        guard = ctx.precision - 2
        if not any(eq_mod(c.value, u, guard) for c in certs):
            certs.append(cert)
    return sorted(certs, key=lambda c: c.seed_residue)


def _check_distinct(certs: list[FixedPointCertificate], ctx) -> None:
    guard = ctx.precision - 2
    for i in range(len(certs)):
        for j in range(i + 1, len(certs)):
            if eq_mod(certs[i].value, certs[j].value, guard):
                raise CensusAnomalyError(
                    f"fixed points from seeds {certs[i].seed_residue} and "
                    f"{certs[j].seed_residue} collide mod p^{guard}"
                )


def diagonal_unit_poly(cp: CouplingParams) -> hensel.IntPolySystem:
    """The univariate polynomial a^2 x^(k+1) - a^2 b^2 x^k + b^2 x - 1 whose
    unit roots are the fixed points of the auxiliary map."""
    ctx = cp.ctx
    k = cp.k
    return hensel.IntPolySystem(
        1,
        (
            (
                hensel.PolyTerm(cp.a2, (k + 1,)),
                hensel.PolyTerm(-(cp.a2 * cp.b2), (k,)),
                hensel.PolyTerm(cp.b2, (1,)),
                hensel.PolyTerm(ctx.integer(-1), (0,)),
            ),
        ),
    )


def tru_polynomial_system(cp: CouplingParams) -> hensel.IntPolySystem:
    """Denominator-cleared polynomial form of the three-component system,
    suitable for multivariate Hensel lifting from the all-ones seed."""
    ctx = cp.ctx
    k = cp.k
    b2 = cp.b2
    a2 = cp.a2
    minus_a2 = -a2

    def binom_terms(scale: PadicNumber, var: int, fixed: dict[int, int], pow_b2_on_high: bool):
        """Terms of scale * (x_var + b^2)^k or scale * (b^2 x_var + 1)^k."""
        out = []
        for i in range(k + 1):
            c = ctx.integer(math.comb(k, i)) * scale
            c = c * pow_int(b2, k - i if pow_b2_on_high else i)
            exps = [0, 0, 0]
            exps[var] = i
            for v, e in fixed.items():
                exps[v] += e
            out.append(hensel.PolyTerm(c, tuple(exps)))
        return out

    # poly 1: u1 (u3 + b^2)^k - a^2 (b^2 u3 + 1)^k
    g1 = binom_terms(ctx.one(), 2, {0: 1}, True) + binom_terms(minus_a2, 2, {}, False)
    # poly 2: u1^k u2 (u3 + b^2)^k - a^2 (b^2 u2 + 1)^k u3^k
    g2 = binom_terms(ctx.one(), 2, {0: k, 1: 1}, True) + binom_terms(minus_a2, 1, {2: k}, False)
    # poly 3: (u2 + b^2)^k u3^(k+1) - a^2 u1^k (b^2 u3 + 1)^k
    g3 = binom_terms(ctx.one(), 1, {2: k + 1}, True) + binom_terms(minus_a2, 2, {0: k}, False)
    return hensel.IntPolySystem(3, (tuple(g1), tuple(g2), tuple(g3)))


def solve_translation_invariant(cp: CouplingParams) -> list[FixedPointCertificate]:
    """All constructed translation-invariant solutions as triples.

    The principal-unit solution is computed twice, by diagonal contraction
    and by multivariate Hensel lifting from (1,1,1); a mismatch is surfaced.
    The diagonal -1 family follows.  No completeness is claimed outside the
    principal-unit block.
    """
    ctx = cp.ctx
    ep = fix_in_Ep(cp)
    system = tru_polynomial_system(cp)
    lifted = hensel.lift(system, (1, 1, 1), ctx)
    for i, comp in enumerate(lifted):
        if comp != ep.value:
            raise InternalConsistencyError(
                f"component {i}: Hensel route disagrees with the contraction route"
            )
    certs = [
        FixedPointCertificate(
            value=UTriple(*lifted),
            branch="Ep",
            residual_norm=ep.residual_norm,
            seed_residue=1,
            contraction_factor=ep.contraction_factor,
        )
    ]
    for c in fix_in_minus_Ep(cp):
        certs.append(
            FixedPointCertificate(
                value=UTriple(c.value, c.value, c.value),
                branch="MinusEp",
                residual_norm=c.residual_norm,
                seed_residue=c.seed_residue,
                contraction_factor=c.contraction_factor,
            )
        )
    for cert in certs:
        trip = cert.value
        if trip.u2.valuation != 0 or trip.u3.valuation != 0:
            raise InternalConsistencyError(
                "solved triple violates the unit-norm law for u2, u3"
            )
    return certs


@dataclass(frozen=True)
class TwoPeriodicResult:
    certificates: list[FixedPointCertificate]
    reason: str | None
    discriminant: PadicNumber


def solve_two_periodic(cp: CouplingParams) -> TwoPeriodicResult:
    """Genuine period-two points of the scalar map on the order-two tree.

    Solves the quadratic for the auxiliary variable; its discriminant is
    congruent to -16 mod p, so square roots exist exactly when -1 is a
    square, i.e. p = 1 mod 4.  Each point u satisfies f(f(u)) = u with
    f(u) != u.
    """
    if cp.k != 2:
        raise ValueError("2-periodic solutions are implemented for k = 2 only")
    ctx = cp.ctx
    a, b2 = cp.a, cp.b2
    a2 = cp.a2
    b4 = b2 * b2
    qa = b2 * (a2 * b2 + 1)
    qb = a * (b4 - 1)
    qc = b2 * (b2 + a2)
    disc = qb * qb - 4 * qa * qc
    if ctx.p % 4 == 3:
        return TwoPeriodicResult([], "no-sqrt", disc)
    root = analysis.sqrt(disc)
    if root is None:
        raise InternalConsistencyError(
            "discriminant unexpectedly lacks a square root at p = 1 mod 4"
        )
    certs = []
    for sign in (1, -1):
        x = (-qb + sign * root) / (2 * qa)
        u = x * x
        f_u = ising_potts_map(u, cp)
        try:
            res = (ising_potts_map(f_u, cp) - u).norm
        except PrecisionLossError:
            res = Fraction(0)
        certs.append(
            FixedPointCertificate(
                value=UTriple(u, u, u),
                branch="TwoPeriodic",
                residual_norm=res,
                seed_residue=x.unit % ctx.p,
                contraction_factor=None,
            )
        )
    certs.sort(key=lambda c: c.seed_residue)
    return TwoPeriodicResult(certs, None, disc)


CONSTRAINTS = ("u1=u2", "u1=u3", "u2=u3")


def _unit_ratio(t: PadicNumber, cp: CouplingParams) -> PadicNumber:
    den = t + cp.b2
    if den.is_zero:
        raise ZeroDivisionError("vanishing denominator t + b^2")
    return (cp.b2 * t + 1) / den


def _restricted_step(
    child_field: Mapping[Edge, UTriple], t: TreeIndex, cp: CouplingParams, constraint: str
) -> dict[Edge, UTriple]:
    levels = {len(y) for _, y in child_field}
    m = levels.pop()
    out: dict[Edge, UTriple] = {}
    for edge in t.level_edges(m - 1):
        y = edge[1]
        children = [child_field[(y, z)] for z in t.successors(y)]
        p1 = cp.ctx.one()
        p2 = cp.ctx.one()
        if constraint == "u1=u2":
            for c in children:
                p1 = p1 * _unit_ratio(c.u3, cp)
                p2 = p2 * _unit_ratio(c.u1, cp)
            u1 = cp.a2 * p1
            u3 = cp.a2 * p2
            out[edge] = UTriple(u1, u1, u3)
        elif constraint == "u1=u3":
            for c in children:
                p1 = p1 * _unit_ratio(c.u1, cp)
                p2 = p2 * _unit_ratio(c.u2, cp)
            u1 = cp.a2 * p1
            out[edge] = UTriple(u1, cp.a2 * p2, u1)
        elif constraint == "u2=u3":
            for c in children:
                p1 = p1 * _unit_ratio(c.u3, cp)
            u = cp.a2 * p1
            out[edge] = UTriple(u, u, u)
        else:
            raise ValueError(f"unknown constraint {constraint!r}")
    return out


def _constraint_components(u: UTriple, constraint: str | None):
    if constraint is None:
        return u.components()
    if constraint == "u1=u2":
        return (u.u1, u.u3)
    if constraint == "u1=u3":
        return (u.u1, u.u2)
    return (u.u1,)


def _validate_leaf(field: Mapping[Edge, UTriple], t: TreeIndex, constraint: str | None) -> None:
    expected = set(t.level_edges(t.depth))
    if set(field) != expected:
        raise ModelError("leaf field must cover exactly the deepest generation of edges")
    for edge, trip in field.items():
        for c in trip.components():
            if c.is_zero or c.valuation != 0:
                raise ModelError(f"leaf value at {edge} must have unit norm componentwise")
        if constraint == "u1=u2" and trip.u1 != trip.u2:
            raise ModelError(f"leaf at {edge} violates constraint u1=u2")
        if constraint == "u1=u3" and trip.u1 != trip.u3:
            raise ModelError(f"leaf at {edge} violates constraint u1=u3")
        if constraint == "u2=u3" and not (trip.u2 == trip.u3 and trip.u1 == trip.u2):
            raise ModelError(f"leaf at {edge} violates constraint u2=u3")


def backward_recursion(
    t: TreeIndex,
    leaf: Mapping[Edge, UTriple],
    cp: CouplingParams,
    constraint: str | None = None,
) -> dict[int, dict[Edge, UTriple]]:
    """Propagate a leaf field inward, one generation at a time.

    With ``constraint`` set, the iteration is the corresponding restricted
    two- or one-component map on that constraint class.  Returns the field
    at every generation, leaves included.
    """
    if t.depth < 2:
        raise ValueError("backward recursion needs depth >= 2")
    _validate_leaf(leaf, t, constraint)
    fields: dict[int, dict[Edge, UTriple]] = {t.depth: dict(leaf)}
    for m in range(t.depth, 1, -1):
        if constraint is None:
            fields[m - 1] = recurrence_step(fields[m], t, cp)
        else:
            fields[m - 1] = _restricted_step(fields[m], t, cp, constraint)
    return fields


def field_distance(
    fa: Mapping[Edge, UTriple],
    fb: Mapping[Edge, UTriple],
    constraint: str | None = None,
) -> Fraction:
    """Max norm of the componentwise difference over a generation."""
    worst = Fraction(0)
    for edge, ta in fa.items():
        tb = fb[edge]
        for x, y in zip(_constraint_components(ta, constraint), _constraint_components(tb, constraint)):
            try:
                d = x - y
            except PrecisionLossError:
                continue
            if d.norm > worst:
                worst = d.norm
    return worst


def recursion_distance_profile(
    t: TreeIndex,
    leaf_a: Mapping[Edge, UTriple],
    leaf_b: Mapping[Edge, UTriple],
    cp: CouplingParams,
    constraint: str | None = None,
) -> list[Fraction]:
    """Distances between two backward recursions, outermost generation first."""
    ra = backward_recursion(t, leaf_a, cp, constraint)
    rb = backward_recursion(t, leaf_b, cp, constraint)
    return [field_distance(ra[m], rb[m], constraint) for m in range(t.depth, 0, -1)]

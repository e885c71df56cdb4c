"""Ising model with nearest-neighbor and prolonged next-nearest-neighbor
couplings on a rooted Cayley tree, over Q_p.

Configurations assign a spin to the root and to every vertex down to the
tree depth.  Bit i of a configuration integer is 1 when the vertex at
position i (root first, then level by level) carries spin +1.  The
Hamiltonian runs over all parent-child bonds including the k root edges and
over all prolonged pairs including the root-anchored ones; the finite-volume
measure weights carry the boundary field on the deepest generation of edges.

Boundary fields come in two equivalent forms: a per-edge quadruple h (one
weight per spin pair) with a one-parameter gauge freedom, and its gauge-free
reduction u = (u1, u2, u3).  Measures computed from either form agree
bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from . import analysis
from .padic import (
    DomainError,
    PadicError,
    PadicNumber,
    PrecisionLossError,
    PrimeContext,
    _from_aligned_int,
    norm_str,
    to_json_dict,
)
from .tree import Edge, EnumerationBudgetError, TreeIndex

DEFAULT_SPIN_BUDGET = 22  # 2^22 configurations at most


class ModelError(PadicError):
    """Structural failure in a model computation (bad field, denominator)."""


@dataclass(frozen=True)
class CouplingParams:
    """Couplings J (nearest-neighbor) and J1 (prolonged pairs) with their
    exponentials a, b; J1 must be nonzero so that b != 1."""

    ctx: PrimeContext
    k: int
    J: PadicNumber
    J1: PadicNumber
    a: PadicNumber
    b: PadicNumber

    @classmethod
    def create(cls, ctx: PrimeContext, k: int, J, J1) -> "CouplingParams":
        if k < 2:
            raise ValueError("tree order k must be at least 2")
        J = _coerce_coupling(J, ctx, "J")
        J1 = _coerce_coupling(J1, ctx, "J1")
        if not J.is_zero and J.valuation < 1:
            raise ValueError("|J|_p must be at most 1/p")
        if J1.is_zero or J1.valuation < 1:
            raise ValueError("J1 must satisfy 0 < |J1|_p <= 1/p")
        if J1.valuation >= ctx.precision:
            raise ValueError("J1 vanishes at this working precision; raise N")
        if not J.is_zero and J.valuation >= ctx.precision:
            raise ValueError("J vanishes at this working precision; use 0 or raise N")
        a = analysis.exp_p(J)
        b = analysis.exp_p(J1)
        return cls(ctx, k, J, J1, a, b)

    @property
    def a2(self) -> PadicNumber:
        return self.a * self.a

    @property
    def b2(self) -> PadicNumber:
        return self.b * self.b


def _coerce_coupling(x, ctx: PrimeContext, name: str) -> PadicNumber:
    if isinstance(x, PadicNumber):
        return x
    if isinstance(x, int):
        return ctx.integer(x)
    if isinstance(x, Fraction):
        return ctx.rational(x.numerator, x.denominator)
    raise TypeError(f"{name} must be a PadicNumber, int, or Fraction")


@dataclass(frozen=True)
class HQuadruple:
    """Per-edge boundary weights (h_pp, h_pm, h_mp, h_mm), all nonzero."""

    h_pp: PadicNumber
    h_pm: PadicNumber
    h_mp: PadicNumber
    h_mm: PadicNumber

    def components(self) -> tuple[PadicNumber, ...]:
        return (self.h_pp, self.h_pm, self.h_mp, self.h_mm)

    def factors(self, cp: "CouplingParams") -> dict[tuple[int, int], PadicNumber]:
        """Boundary weight (h_{s s'})^{s s'} for each spin pair (s, s')."""
        one = cp.ctx.one()
        return {
            (1, 1): self.h_pp,
            (1, -1): one / self.h_pm,
            (-1, 1): one / self.h_mp,
            (-1, -1): self.h_mm,
        }


@dataclass(frozen=True)
class UTriple:
    """Gauge-free boundary triple (u1, u2, u3)."""

    u1: PadicNumber
    u2: PadicNumber
    u3: PadicNumber

    def components(self) -> tuple[PadicNumber, PadicNumber, PadicNumber]:
        return (self.u1, self.u2, self.u3)

    def factors(self, cp: "CouplingParams") -> dict[tuple[int, int], PadicNumber]:
        a2 = cp.a2
        return {
            (1, 1): cp.ctx.one(),
            (1, -1): a2 / self.u3,
            (-1, 1): a2 / self.u1,
            (-1, -1): self.u2 / self.u1,
        }


BoundaryField = Union[UTriple, HQuadruple, Mapping[Edge, Union[UTriple, HQuadruple]]]


@dataclass(frozen=True)
class Configuration:
    """Spin assignment packed as an integer; bit i set means spin +1."""

    bits: int
    num_spins: int

    def spin(self, index: int) -> int:
        return 1 if (self.bits >> index) & 1 else -1

    def bit_string(self) -> str:
        return "".join("1" if (self.bits >> i) & 1 else "0" for i in range(self.num_spins))

    @classmethod
    def from_spins(cls, spins: Mapping, t: TreeIndex) -> "Configuration":
        bits = 0
        for v, s in spins.items():
            if s == 1:
                bits |= 1 << t.vertex_index[v]
            elif s != -1:
                raise ValueError("spins must be +1 or -1")
        return cls(bits, t.num_spins)

    def spins(self, t: TreeIndex) -> dict:
        return {v: self.spin(i) for i, v in enumerate(t.vertices)}


def pair_sums(bits: int, t: TreeIndex) -> tuple[int, int]:
    """Spin-product sums over bonds and over prolonged pairs."""
    idx = t.vertex_index
    s1 = 0
    for x, y in t.edges:
        s1 += 1 if ((bits >> idx[x]) ^ (bits >> idx[y])) & 1 == 0 else -1
    s2 = 0
    for x, y in t.prolonged:
        s2 += 1 if ((bits >> idx[x]) ^ (bits >> idx[y])) & 1 == 0 else -1
    return s1, s2


def hamiltonian(config: Configuration | int, t: TreeIndex, cp: CouplingParams) -> PadicNumber:
    """Exact energy J*(bond sum) + J1*(prolonged sum); norm is at most 1/p."""
    bits = config.bits if isinstance(config, Configuration) else config
    s1, s2 = pair_sums(bits, t)
    return cp.J * s1 + cp.J1 * s2


@dataclass(frozen=True)
class MeasureTable:
    """Finite-volume measure at depth n: normalized values and the exact Z."""

    p: int
    k: int
    n: int
    num_spins: int
    Z: PadicNumber
    Z_norm: Fraction
    values: dict[int, PadicNumber] | None

    def to_json(self) -> str:
        entries = None
        if self.values is not None:
            entries = [
                {
                    "config_bits": Configuration(bits, self.num_spins).bit_string(),
                    "value": to_json_dict(v),
                }
                for bits, v in sorted(self.values.items())
            ]
        return json.dumps(
            {
                "p": self.p,
                "k": self.k,
                "n": self.n,
                "Z": to_json_dict(self.Z),
                "Z_norm": norm_str(self.Z),
                "entries": entries,
            }
        )


class _StreamSum:
    """Exact running sum of p-adic values at a dynamically lowered floor."""

    __slots__ = ("p", "floor", "acc", "abs_prec")

    def __init__(self, p: int):
        self.p = p
        self.floor: int | None = None
        self.acc = 0
        self.abs_prec: int | None = None

    def add(self, x: PadicNumber) -> None:
        if x.is_zero:
            return
        if self.floor is None:
            self.floor = x.valuation
            self.abs_prec = x.abs_precision
        elif x.valuation < self.floor:
            self.acc *= self.p ** (self.floor - x.valuation)
            self.floor = x.valuation
        self.acc += x.unit * self.p ** (x.valuation - self.floor)
        self.abs_prec = min(self.abs_prec, x.abs_precision)

    def finalize(self, ctx: PrimeContext) -> PadicNumber:
        if self.floor is None or self.acc == 0:
            return ctx.zero()
        return _from_aligned_int(self.acc, self.floor, self.abs_prec, ctx)


def _resolve_factors(field: BoundaryField, edges, cp: CouplingParams):
    """Per-boundary-edge factor tables; second return flags a uniform field."""
    if isinstance(field, (UTriple, HQuadruple)):
        table = field.factors(cp)
        return [table] * len(edges), True
    tables = []
    for e in edges:
        try:
            entry = field[e]
        except KeyError:
            raise ModelError(f"boundary field missing edge {e}") from None
        tables.append(entry.factors(cp))
    return tables, False


def _check_budget(t: TreeIndex, spin_budget: int | None) -> None:
    budget = DEFAULT_SPIN_BUDGET if spin_budget is None else spin_budget
    if t.num_spins > budget:
        raise EnumerationBudgetError(
            f"{t.num_spins} spins ({2 ** t.num_spins} configurations) exceed the "
            f"enumeration budget of {budget} spins"
        )


def _enumerate(
    t: TreeIndex,
    cp: CouplingParams,
    field: BoundaryField,
    want_values: bool,
    prefix_spins: int | None = None,
):
    """Shared brute-force sweep over all configurations.

    Returns (Z_sum, weights, prefix_sums); weights maps configuration bits to
    the unnormalized p-adic weight, prefix_sums accumulates weights grouped
    by the leading ``prefix_spins`` bits.
    """
    ctx = cp.ctx
    idx = t.vertex_index
    boundary = t.level_edges(t.depth)
    factor_tables, uniform = _resolve_factors(field, boundary, cp)
    boundary_idx = [(idx[x], idx[y]) for x, y in boundary]
    edge_pairs = [(idx[x], idx[y]) for x, y in t.edges]
    prol_pairs = [(idx[x], idx[y]) for x, y in t.prolonged]
    ne, npr = len(edge_pairs), len(prol_pairs)

    a_inv = ctx.one() / cp.a
    b_inv = ctx.one() / cp.b

    exp_cache: dict[tuple[int, int], PadicNumber] = {}

    def exp_part(s1: int, s2: int) -> PadicNumber:
        w = exp_cache.get((s1, s2))
        if w is None:
            wa = cp.a ** s1 if s1 >= 0 else a_inv ** (-s1)
            wb = cp.b ** s2 if s2 >= 0 else b_inv ** (-s2)
            w = wa * wb
            exp_cache[(s1, s2)] = w
        return w

    weight_cache: dict[tuple, PadicNumber] = {}
    z_sum = _StreamSum(ctx.p)
    prefix_sums: dict[int, _StreamSum] | None = None
    prefix_mask = 0
    if prefix_spins is not None:
        prefix_sums = {}
        prefix_mask = (1 << prefix_spins) - 1
    weights: dict[int, PadicNumber] | None = {} if want_values else None

    for bits in range(1 << t.num_spins):
        s1 = ne
        for i, j in edge_pairs:
            if ((bits >> i) ^ (bits >> j)) & 1:
                s1 -= 2
        s2 = npr
        for i, j in prol_pairs:
            if ((bits >> i) ^ (bits >> j)) & 1:
                s2 -= 2
        if uniform:
            c_pm = c_mp = c_mm = 0
            for i, j in boundary_idx:
                sx = (bits >> i) & 1
                sy = (bits >> j) & 1
                if sx and not sy:
                    c_pm += 1
                elif sy and not sx:
                    c_mp += 1
                elif not sx:
                    c_mm += 1
            key = (s1, s2, c_pm, c_mp, c_mm)
            w = weight_cache.get(key)
            if w is None:
                tbl = factor_tables[0]
                c_pp = len(boundary_idx) - c_pm - c_mp - c_mm
                w = exp_part(s1, s2)
                w = w * tbl[(1, 1)] ** c_pp
                w = w * tbl[(1, -1)] ** c_pm
                w = w * tbl[(-1, 1)] ** c_mp
                w = w * tbl[(-1, -1)] ** c_mm
                weight_cache[key] = w
        else:
            w = exp_part(s1, s2)
            for (i, j), tbl in zip(boundary_idx, factor_tables):
                sx = 1 if (bits >> i) & 1 else -1
                sy = 1 if (bits >> j) & 1 else -1
                f = tbl[(sx, sy)]
                if f.valuation != 0 or f.unit != 1:
                    w = w * f
        z_sum.add(w)
        if weights is not None:
            weights[bits] = w
        if prefix_sums is not None:
            acc = prefix_sums.get(bits & prefix_mask)
            if acc is None:
                acc = _StreamSum(ctx.p)
                prefix_sums[bits & prefix_mask] = acc
            acc.add(w)
    return z_sum, weights, prefix_sums


def _build_table(t, cp, field, materialize, spin_budget) -> MeasureTable:
    _check_budget(t, spin_budget)
    if materialize is None:
        materialize = t.num_spins <= 16
    z_sum, weights, _ = _enumerate(t, cp, field, materialize)
    ctx = cp.ctx
    try:
        Z = z_sum.finalize(ctx)
    except PrecisionLossError as exc:
        raise PrecisionLossError(f"partition function: {exc}") from None
    if Z.is_zero:
        raise PrecisionLossError(
            "partition function indistinguishable from zero at working precision; "
            "rerun with a larger N"
        )
    values = None
    if weights is not None:
        values = {bits: w / Z for bits, w in weights.items()}
    return MeasureTable(
        ctx.p, cp.k, t.depth, t.num_spins, Z, Z.norm, values
    )


def measure_table_from_u(
    u: BoundaryField,
    t: TreeIndex,
    cp: CouplingParams,
    materialize: bool | None = None,
    spin_budget: int | None = None,
) -> MeasureTable:
    """Measure table from the gauge-free boundary field."""
    return _build_table(t, cp, u, materialize, spin_budget)


def measure_table_from_h(
    h: BoundaryField,
    t: TreeIndex,
    cp: CouplingParams,
    materialize: bool | None = None,
    spin_budget: int | None = None,
) -> MeasureTable:
    """Measure table from an h-field (any gauge)."""
    if isinstance(h, UTriple):
        raise TypeError("measure_table_from_h expects HQuadruple data")
    return _build_table(t, cp, h, materialize, spin_budget)


@dataclass(frozen=True)
class CompatReport:
    """Marginalization residuals of the depth-n table against depth n-1."""

    p: int
    k: int
    n: int
    max_residual_norm: Fraction
    threshold: Fraction
    passed: bool
    prefix_count: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "p": self.p,
                "k": self.k,
                "n": self.n,
                "max_residual_norm": _fraction_str(self.max_residual_norm, self.p),
                "threshold": _fraction_str(self.threshold, self.p),
                "passed": self.passed,
                "prefix_count": self.prefix_count,
            }
        )


def _fraction_str(f: Fraction, p: int) -> str:
    if f == 0:
        return "0"
    e = 0
    num, den = f.numerator, f.denominator
    while den % p == 0:
        den //= p
        e -= 1
    while num % p == 0:
        num //= p
        e += 1
    return f"{p}^{e}"


def compatibility_check(
    field: BoundaryField,
    t: TreeIndex,
    cp: CouplingParams,
    spin_budget: int | None = None,
) -> CompatReport:
    """Brute-force marginalization oracle.

    Sums the depth-n measure over the outermost spins for every depth-(n-1)
    configuration and compares against the depth-(n-1) measure computed
    independently.  A vanishing maximal residual certifies that the boundary
    field satisfies the edge recurrence; a failing check is a result, not an
    error.
    """
    if t.depth < 2:
        raise ValueError("compatibility check needs depth >= 2")
    _check_budget(t, spin_budget)
    ctx = cp.ctx
    sub = TreeIndex.build(t.k, t.depth - 1)
    prefix_spins = sub.num_spins

    z_sum, _, prefix_sums = _enumerate(t, cp, field, False, prefix_spins=prefix_spins)
    Z_n = z_sum.finalize(ctx)
    sub_table = _build_table(sub, cp, field, True, spin_budget)

    max_norm = Fraction(0)
    for bits_prev, w_prev in sub_table.values.items():
        marg = prefix_sums[bits_prev].finalize(ctx) / Z_n
        try:
            residual = marg - w_prev
        except PrecisionLossError:
            continue  # cancellation beyond working precision: residual is zero here
        if residual.norm > max_norm:
            max_norm = residual.norm
    threshold = Fraction(1, ctx.p ** (ctx.precision - 2))
    return CompatReport(
        ctx.p, cp.k, t.depth, max_norm, threshold, max_norm <= threshold,
        len(sub_table.values),
    )


def u_from_h(h: HQuadruple, cp: CouplingParams) -> UTriple:
    """Gauge-free reduction of an h-quadruple."""
    for c in h.components():
        if c.is_zero:
            raise ModelError("h components must be nonzero")
    a2 = cp.a2
    return UTriple(a2 * h.h_pp * h.h_mp, a2 * h.h_mm * h.h_mp, a2 * h.h_pp * h.h_pm)


def h_from_u(u: UTriple, free: PadicNumber, cp: CouplingParams) -> HQuadruple:
    """Invert the reduction with h_pp fixed to ``free`` (the gauge choice)."""
    if free.is_zero:
        raise ModelError("gauge component h_pp must be nonzero")
    for c in u.components():
        if c.is_zero:
            raise ModelError("u components must be nonzero")
    a2f = cp.a2 * free
    return HQuadruple(free, u.u3 / a2f, u.u1 / a2f, u.u2 * free / u.u1)


def _recurrence_components(children: list[UTriple], cp: CouplingParams) -> UTriple:
    ctx = cp.ctx
    b2 = cp.b2
    p1 = ctx.one()
    p2 = ctx.one()
    p3 = ctx.one()
    for c in children:
        d3 = c.u3 + b2
        d2 = c.u2 + b2
        if d3.is_zero or d2.is_zero or c.u1.is_zero or c.u3.is_zero:
            raise ZeroDivisionError("vanishing denominator")
        n3 = b2 * c.u3 + 1
        p1 = p1 * (n3 / d3)
        p2 = p2 * ((b2 * c.u2 + 1) * c.u3 / (d3 * c.u1))
        p3 = p3 * (n3 * c.u1 / (d2 * c.u3))
    a2 = cp.a2
    return UTriple(a2 * p1, a2 * p2, a2 * p3)


def recurrence_step(
    child_field: Mapping[Edge, UTriple], t: TreeIndex, cp: CouplingParams
) -> dict[Edge, UTriple]:
    """One inward sweep of the three-component edge recurrence."""
    levels = {len(y) for _, y in child_field}
    if len(levels) != 1:
        raise ModelError("child field must live on a single generation")
    m = levels.pop()
    if m < 2 or m > t.depth:
        raise ModelError(f"child generation {m} outside 2..{t.depth}")
    out: dict[Edge, UTriple] = {}
    for edge in t.level_edges(m - 1):
        y = edge[1]
        children = [child_field[(y, z)] for z in t.successors(y)]
        try:
            out[edge] = _recurrence_components(children, cp)
        except (ZeroDivisionError, PrecisionLossError) as exc:
            raise ModelError(f"recurrence failed at edge {edge}: {exc}") from None
    return out


def h_recurrence_residual(
    field: Mapping[Edge, HQuadruple], t: TreeIndex, cp: CouplingParams
) -> Fraction:
    """Max residual norm of the three h-consistency equations over all
    interior edges (edges whose child still has successors in the tree)."""
    ctx = cp.ctx
    a2, b2 = cp.a2, cp.b2
    ab2 = a2 * b2
    max_norm = Fraction(0)
    for edge in t.edges:
        y = edge[1]
        if len(y) >= t.depth:
            continue
        h = field[edge]
        r1 = ctx.one()
        r2 = ctx.one()
        r3 = ctx.one()
        for z in t.successors(y):
            hz = field[(y, z)]
            q3 = hz.h_pp * hz.h_pm
            q2 = hz.h_mm * hz.h_mp
            r1 = r1 * ((ab2 * q3 + 1) / (a2 * q3 + b2))
            r2 = r2 * ((ab2 * q2 + 1) / (a2 * q2 + b2))
            r3 = r3 * ((ab2 * q3 + 1) * hz.h_mp / ((a2 * q2 + b2) * hz.h_pm))
        for lhs, rhs in (
            (h.h_pp * h.h_mp, r1),
            (h.h_mm * h.h_pm, r2),
            (h.h_pp * h.h_pm, r3),
        ):
            try:
                diff = lhs - rhs
            except PrecisionLossError:
                continue
            if diff.norm > max_norm:
                max_norm = diff.norm
    return max_norm

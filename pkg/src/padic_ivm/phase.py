"""Exact norm analysis of partition functions and measures: boundedness
classification of solved boundary fields, phase-transition verdicts, and the
conditional strong-decay bookkeeping for a hypothetical unbounded field.

The partition function at depth n factors as an n-independent depth-1
anchor times a per-edge level factor raised to the number of edges strictly
inside the volume; the brute-force enumeration in the tests pins this form
bit-exactly.  Only the level factor grows with n, so boundedness is decided
by a single valuation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from . import solver
from .model import CouplingParams, UTriple
from .padic import DomainError, PadicNumber, pow_int, norm_str, to_json_dict
from .solver import FixedPointCertificate


def interior_count(k: int, n: int) -> int:
    """Number of non-root vertices to depth n: k(k^n - 1)/(k - 1)."""
    return (k * (k ** n - 1)) // (k - 1)


def partition_anchor(u: UTriple, cp: CouplingParams) -> PadicNumber:
    """Exact depth-1 partition function for a translation-invariant field:
    the two root-spin branches (a(u3+1)/u3)^k + ((a/u1)(1+u2))^k."""
    k = cp.k
    plus = pow_int(cp.a * (u.u3 + 1) / u.u3, k)
    minus = pow_int((cp.a / u.u1) * (u.u2 + 1), k)
    return plus + minus


def level_factor(u: UTriple, cp: CouplingParams) -> PadicNumber:
    """Per-edge factor (a(b^2 u3 + 1)/(b u3))^k of the partition telescoping."""
    return pow_int(cp.a * (cp.b2 * u.u3 + 1) / (cp.b * u.u3), cp.k)


def partition_closed_form(u: UTriple, n: int, cp: CouplingParams) -> PadicNumber:
    """Exact Z_n for a translation-invariant solution: anchor times the level
    factor to the power |V_(n-1)|.  Matches brute-force enumeration
    bit-exactly (see the acceptance tests)."""
    if n < 1:
        raise ValueError("depth must be at least 1")
    if u.u3.is_zero:
        raise ValueError("u3 must be nonzero")
    edges_inside = interior_count(cp.k, n - 1)
    return partition_anchor(u, cp) * pow_int(level_factor(u, cp), edges_inside)


def partition_norm_exponent(u: UTriple, n: int, cp: CouplingParams) -> int:
    """Valuation of Z_n by pure exponent arithmetic (safe for large n)."""
    anchor = partition_anchor(u, cp)
    lf = level_factor(u, cp)
    if anchor.is_zero or lf.is_zero:
        raise DomainError("partition factors vanish at working precision")
    return anchor.valuation + interior_count(cp.k, n - 1) * lf.valuation


@dataclass(frozen=True)
class MeasureClassification:
    """Boundedness classification of the measure attached to a solved field."""

    branch: str  # "GibbsBounded" | "QuasiUnbounded"
    k: int
    level_gap: int  # e = val(b^2 u3 + 1) - val(b u3), per-edge decay exponent
    anchor_valuation: int

    def level_exponent(self, n: int) -> int:
        """Growth part k |V_(n-1)| e of the partition valuation."""
        return self.k * interior_count(self.k, n - 1) * self.level_gap

    def Z_norm_exponent(self, n: int) -> int:
        """Exact valuation of Z_n (so |Z_n| = p^(-exponent))."""
        return self.level_exponent(n) + self.anchor_valuation

    def mu_norm_exponent(self, n: int) -> int:
        """|mu^(n)| = p^(+exponent): reciprocal of the partition norm."""
        return self.Z_norm_exponent(n)


def classify(u: UTriple, cp: CouplingParams) -> MeasureClassification:
    """Decide bounded vs unbounded from the valuation of b^2 u3 + 1."""
    if u.u2.valuation != 0 or u.u3.valuation != 0:
        raise DomainError("classification requires |u2|_p = |u3|_p = 1")
    num = cp.b2 * u.u3 + 1
    if num.is_zero:
        raise DomainError("b^2 u3 + 1 vanishes at working precision; raise N")
    e = num.valuation  # val(b u3) = 0
    anchor = partition_anchor(u, cp)
    if anchor.is_zero:
        raise DomainError("depth-1 anchor vanishes at working precision; raise N")
    branch = "GibbsBounded" if e == 0 else "QuasiUnbounded"
    return MeasureClassification(branch, cp.k, e, anchor.valuation)


@dataclass(frozen=True)
class PhaseReport:
    p: int
    k: int
    verdict: str  # "PHASE_TRANSITION" | "NO_TRANSITION"
    entries: list[tuple[FixedPointCertificate, MeasureClassification]]
    criterion_trace: dict

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "k": self.k,
            "verdict": self.verdict,
            "solutions": [
                {
                    **cert.to_json_dict(),
                    "classification": cls.branch,
                    "level_gap": cls.level_gap,
                    "anchor_valuation": cls.anchor_valuation,
                }
                for cert, cls in self.entries
            ],
            "criterion_trace": self.criterion_trace,
        }


def detect_phase_transition(cp: CouplingParams) -> PhaseReport:
    """Solve the translation-invariant census, classify every solution, and
    report coexistence of a bounded and an unbounded measure."""
    p, k = cp.ctx.p, cp.k
    certs = solver.solve_translation_invariant(cp)
    entries = [(c, classify(c.value, cp)) for c in certs]
    bounded = sum(1 for _, c in entries if c.branch == "GibbsBounded")
    unbounded = sum(1 for _, c in entries if c.branch == "QuasiUnbounded")
    verdict = "PHASE_TRANSITION" if bounded and unbounded else "NO_TRANSITION"
    d = math.gcd(k, p - 1)
    trace = {
        "gcd_k_p_minus_1": d,
        "ratio": (p - 1) // d,
        "ratio_even": ((p - 1) // d) % 2 == 0,
        "k_coprime_to_p": k % p != 0,
        "k_odd": k % 2 == 1,
        "norm_k": _norm_str_int(k, p),
        "norm_a_minus_1": norm_str(cp.a - 1) if not (cp.a - 1).is_zero else "0",
        "norm_b_minus_1": norm_str(cp.b - 1),
        "minus_one_ball_premise": solver._norms_allow_minus_one_ball(cp),
    }
    return PhaseReport(p, k, verdict, entries, trace)


def _norm_str_int(k: int, p: int) -> str:
    v = 0
    while k % p == 0:
        k //= p
        v += 1
    return f"{p}^{-v}"


@dataclass(frozen=True)
class DecayRow:
    n: int
    boundary_size: int  # |W_n|
    volume_size: int  # |V_n|
    mu_valuation: int  # val of mu^(n)(all-minus); |mu| = p^(-val)
    bound_valuation: int  # val threshold -v1 |V_n| from the claimed bound
    bound_holds: bool  # |mu| < |u1|^(-|V_n|)


@dataclass(frozen=True)
class DecayReport:
    p: int
    k: int
    u1_valuation: int
    level_gap: int
    rows: list[DecayRow]

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "k": self.k,
            "u1_valuation": self.u1_valuation,
            "level_gap": self.level_gap,
            "rows": [
                {
                    "n": r.n,
                    "W_n": r.boundary_size,
                    "V_n": r.volume_size,
                    "mu_norm": f"{self.p}^{-r.mu_valuation}",
                    "bound_norm": f"{self.p}^{-r.bound_valuation}",
                    "bound_holds": r.bound_holds,
                }
                for r in self.rows
            ],
        }


def strong_decay_check(u: UTriple, n_max: int, cp: CouplingParams) -> DecayReport:
    """Norm bookkeeping for a caller-supplied field with |u1|_p > 1.

    For the configuration that is all minus off the root, the measure norm
    at depth n is |u1|^(-|W_n|) / |Z_n| with Z_n taken in its telescoped
    level form.  Each row also evaluates the literal bound |u1|^(-|V_n|);
    whether it holds is reported, not assumed.  No such solution is known;
    this check has no search attached to it.
    """
    if u.u1.is_zero or u.u1.valuation >= 0:
        raise DomainError("strong decay requires |u1|_p > 1")
    if u.u2.valuation != 0 or u.u3.valuation != 0:
        raise DomainError("strong decay requires |u2|_p = |u3|_p = 1")
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    p, k = cp.ctx.p, cp.k
    v1 = u.u1.valuation  # negative
    num = cp.b2 * u.u3 + 1
    if num.is_zero:
        raise DomainError("b^2 u3 + 1 vanishes at working precision")
    w = num.valuation
    rows = []
    for n in range(2, n_max + 1):
        wn = k ** n
        vn = interior_count(k, n)
        z_val = k * interior_count(k, n - 1) * w
        mu_val = -wn * v1 - z_val
        bound_val = -v1 * vn
        rows.append(DecayRow(n, wn, vn, mu_val, bound_val, mu_val > bound_val))
    return DecayReport(p, k, v1, w, rows)

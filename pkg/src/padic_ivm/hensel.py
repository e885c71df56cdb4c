"""Multivariate Hensel lifting (Newton iteration over the p-adic integers)
and exact linear solving with unit pivots."""

from __future__ import annotations

from dataclasses import dataclass

from .padic import PadicError, PadicNumber, PrimeContext, int_valuation


class SeedNotRootError(PadicError):
    """The seed vector is not a root of the system modulo p."""


class SingularJacobianError(PadicError):
    """The Jacobian determinant vanishes modulo p at the seed."""


class SingularMatrixError(PadicError):
    """No unit pivot available during elimination."""


@dataclass(frozen=True)
class PolyTerm:
    """One sparse monomial: coeff * prod(x_j ** exps[j])."""

    coeff: PadicNumber
    exps: tuple[int, ...]


@dataclass(frozen=True)
class IntPolySystem:
    """Square polynomial system with p-adic integer coefficients."""

    nvars: int
    polys: tuple[tuple[PolyTerm, ...], ...]

    def __post_init__(self) -> None:
        if len(self.polys) != self.nvars:
            raise ValueError("system must be square")
        for poly in self.polys:
            for term in poly:
                if term.coeff.is_zero:
                    continue
                if term.coeff.valuation < 0:
                    raise ValueError("coefficients must be p-adic integers")
                if len(term.exps) != self.nvars:
                    raise ValueError("exponent arity mismatch")

    @property
    def abs_precision(self) -> int:
        """Largest m such that every coefficient is pinned mod p^m."""
        return min(
            term.coeff.abs_precision
            for poly in self.polys
            for term in poly
            if not term.coeff.is_zero
        )

    def _coeff_int(self, term: PolyTerm, modulus: int, p: int) -> int:
        if term.coeff.is_zero:
            return 0
        return (term.coeff.unit * p ** term.coeff.valuation) % modulus

    def eval_mod(self, point: tuple[int, ...], modulus: int, p: int) -> list[int]:
        out = []
        for poly in self.polys:
            acc = 0
            for term in poly:
                c = self._coeff_int(term, modulus, p)
                for xj, ej in zip(point, term.exps):
                    if ej:
                        c = (c * pow(xj, ej, modulus)) % modulus
                acc = (acc + c) % modulus
            out.append(acc)
        return out

    def jacobian_mod(self, point: tuple[int, ...], modulus: int, p: int) -> list[list[int]]:
        jac = [[0] * self.nvars for _ in range(self.nvars)]
        for i, poly in enumerate(self.polys):
            for term in poly:
                for j, ej in enumerate(term.exps):
                    if ej == 0:
                        continue
                    c = (self._coeff_int(term, modulus, p) * ej) % modulus
                    for l, el in enumerate(term.exps):
                        e = el - 1 if l == j else el
                        if e:
                            c = (c * pow(point[l], e, modulus)) % modulus
                    jac[i][j] = (jac[i][j] + c) % modulus
        return jac


def lift(
    system: IntPolySystem,
    seed: tuple[int, ...],
    ctx: PrimeContext,
    schedule: str = "doubling",
) -> tuple[PadicNumber, ...]:
    """Lift a nonsingular root mod p to a root mod p^N by Newton iteration.

    ``schedule`` selects the precision ladder: "doubling" (mod p, p^2, p^4, ...)
    or "linear" (one digit per step); both land on the same root.
    """
    p = ctx.p
    target = min(ctx.precision, system.abs_precision)
    if len(seed) != system.nvars:
        raise ValueError("seed arity mismatch")
    x = [s % p for s in seed]
    residues = system.eval_mod(tuple(x), p, p)
    for i, r in enumerate(residues):
        if r % p != 0:
            raise SeedNotRootError(f"component {i}: F(seed) != 0 (mod {p})")
    det = _det_mod_p(system.jacobian_mod(tuple(x), p, p), p)
    if det % p == 0:
        raise SingularJacobianError(f"det J(seed) == 0 (mod {p})")

    prec = 1
    while prec < target:
        nxt = min(2 * prec, target) if schedule == "doubling" else prec + 1
        modulus = p ** nxt
        fx = system.eval_mod(tuple(x), modulus, p)
        jac = system.jacobian_mod(tuple(x), modulus, p)
        delta = _solve_int_mod(jac, fx, p, nxt)
        x = [(xi - di) % modulus for xi, di in zip(x, delta)]
        prec = nxt

    final = system.eval_mod(tuple(x), p ** target, p)
    if any(r != 0 for r in final):
        raise PadicError("Newton iteration failed to reach the target precision")
    return tuple(_from_residue(xi, ctx, target) for xi in x)


def jacobian_det_mod_p(system: IntPolySystem, point: tuple[int, ...]) -> int:
    """Exact determinant of the Jacobian at an integer point, reduced mod p."""
    p = _infer_p(system)
    jac = system.jacobian_mod(tuple(s % p for s in point), p, p)
    return _det_mod_p(jac, p)


def linear_solve_Zp(
    matrix: list[list[PadicNumber]], rhs: list[PadicNumber]
) -> list[PadicNumber]:
    """Solve M x = rhs by Gaussian elimination with unit-norm pivot selection.

    Requires det M to be a unit mod p; every pivot is then chosen with
    p-adic norm 1, so the elimination is exact at the working precision.
    """
    n = len(matrix)
    if any(len(row) != n for row in matrix) or len(rhs) != n:
        raise ValueError("shape mismatch")
    rows = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = None
        for r in range(col, n):
            entry = rows[r][col]
            if not entry.is_zero and entry.valuation == 0:
                pivot = r
                break
        if pivot is None:
            raise SingularMatrixError(f"no unit pivot in column {col}: singular mod p")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        for r in range(n):
            if r == col:
                continue
            factor = rows[r][col] / rows[col][col]
            if factor.is_zero:
                continue
            rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col])]
    return [rows[i][n] / rows[i][i] for i in range(n)]


def _infer_p(system: IntPolySystem) -> int:
    for poly in system.polys:
        for term in poly:
            return term.coeff.ctx.p
    raise ValueError("empty system")


def _det_mod_p(mat: list[list[int]], p: int) -> int:
    """Determinant over F_p by elimination with row swaps."""
    n = len(mat)
    a = [[x % p for x in row] for row in mat]
    det = 1
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] % p != 0), None)
        if pivot is None:
            return 0
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = (-det) % p
        inv = pow(a[col][col], -1, p)
        det = (det * a[col][col]) % p
        for r in range(col + 1, n):
            f = (a[r][col] * inv) % p
            if f:
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[col])]
    return det % p


def _solve_int_mod(jac: list[list[int]], rhs: list[int], p: int, prec: int) -> list[int]:
    """Solve J d = rhs mod p^prec; J must be invertible mod p."""
    modulus = p ** prec
    n = len(jac)
    a = [row[:] + [rhs[i]] for i, row in enumerate(jac)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] % p != 0), None)
        if pivot is None:
            raise SingularMatrixError(f"no unit pivot in column {col}")
        a[col], a[pivot] = a[pivot], a[col]
        inv = pow(a[col][col], -1, modulus)
        a[col] = [(x * inv) % modulus for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [(x - f * y) % modulus for x, y in zip(a[r], a[col])]
    return [a[i][n] % modulus for i in range(n)]


def _from_residue(r: int, ctx: PrimeContext, abs_prec: int) -> PadicNumber:
    """Wrap an integer known mod p^abs_prec as a PadicNumber."""
    if r == 0:
        return ctx.zero()
    p = ctx.p
    v = int_valuation(r, p)
    if v >= abs_prec:
        return ctx.zero()
    eff = min(ctx.precision, abs_prec - v)
    return PadicNumber(ctx, v, (r // p ** v) % p ** eff, eff)

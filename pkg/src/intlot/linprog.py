"""Dense two-phase simplex (Bland's rule) plus small exact linear algebra.

Exact mode pivots on ``Fraction`` matrices.  The right-hand side and the
objective may additionally hold :class:`~intlot.scalar.LinearExt` values:
pivoting only ever multiplies them by rationals, so the whole run stays
exact.  Float mode runs the same code on binary64 numbers, or on mpmath
numbers when ``digits`` is given.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .errors import ExactModeError, InputError, NonlinearError, NumericalBreakdown
from .scalar import LinearExt, is_rational, scalar_sign, to_mpf

MAX_PIVOTS = 100_000


@dataclass
class LinearProgram:
    c: Sequence
    A: Sequence[Sequence]
    rel: Sequence[str]
    b: Sequence
    sense: str = "max"
    bounds: Sequence[tuple] | None = None  # (lo, hi) per variable, None = unbounded
    mode: str = "exact"
    digits: int | None = None  # float mode: None = binary64, else mpmath precision
    tol: float | None = None

    def __post_init__(self):
        n = len(self.c)
        if len(self.A) != len(self.rel) or len(self.A) != len(self.b):
            raise InputError("constraint rows, relations and rhs differ in length")
        for row in self.A:
            if len(row) != n:
                raise InputError("constraint row length differs from objective length")
        for r in self.rel:
            if r not in ("<=", "=", ">="):
                raise InputError(f"unknown relation {r!r}")
        if self.sense not in ("min", "max"):
            raise InputError(f"unknown sense {self.sense!r}")
        if self.bounds is None:
            self.bounds = [(0, None)] * n
        if len(self.bounds) != n:
            raise InputError("one (lo, hi) pair per variable")
        if self.mode not in ("exact", "float"):
            raise InputError(f"unknown mode {self.mode!r}")


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded
    x: list | None = None
    objective: object = None
    dual: list | None = None  # one multiplier per constraint row (then bound rows)
    farkas: list | None = None
    ray: list | None = None
    pivots: int = 0


# ---------------------------------------------------------------- fields

class _Exact:
    exact = True

    def __init__(self):
        self.zero = Fraction(0)
        self.one = Fraction(1)

    def coef(self, v):
        if is_rational(v):
            return Fraction(v)
        raise ExactModeError(f"exact mode needs rational coefficients, got {v!r}")

    def data(self, v):
        if is_rational(v):
            return Fraction(v)
        if isinstance(v, LinearExt):
            return v
        raise ExactModeError(f"exact mode cannot take {type(v).__name__} data")

    def sign(self, v):
        return scalar_sign(v)


class _Float:
    exact = False

    def __init__(self, digits, tol):
        self.mp = digits is not None
        if self.mp:
            self.zero, self.one = mpmath.mpf(0), mpmath.mpf(1)
            self.tol = mpmath.mpf(10) ** (-(2 * digits) // 3) if tol is None else mpmath.mpf(tol)
        else:
            self.zero, self.one = 0.0, 1.0
            self.tol = 1e-9 if tol is None else tol

    def coef(self, v):
        if self.mp:
            return to_mpf(v)
        return float(v)

    data = coef

    def sign(self, v):
        if v > self.tol:
            return 1
        if v < -self.tol:
            return -1
        return 0


# ---------------------------------------------------------------- simplex

class _Tableau:
    def __init__(self, F, rows, rhs, ncols):
        self.F = F
        self.T = rows
        self.rhs = rhs
        self.ncols = ncols
        self.m = len(rows)
        self.basis = [ncols + i for i in range(self.m)]
        self.d = None
        self.pivots = 0

    def pivot(self, r, e):
        F = self.F
        T = self.T
        p = T[r][e]
        if not F.exact and abs(p) <= F.tol:
            raise NumericalBreakdown("pivot element below tolerance")
        inv = F.one / p
        pr = [v * inv for v in T[r]]
        T[r] = pr
        self.rhs[r] = self.rhs[r] * inv
        for i in range(self.m):
            if i == r:
                continue
            f = T[i][e]
            if f:
                row = T[i]
                T[i] = [a - f * b if b else a for a, b in zip(row, pr)]
                self.rhs[i] = self.rhs[i] - f * self.rhs[r]
        f = self.d[e]
        if f:
            self.d = [a - f * b if b else a for a, b in zip(self.d, pr)]
        self.basis[r] = e
        self.pivots += 1
        if self.pivots > MAX_PIVOTS:
            raise NumericalBreakdown("pivot limit exceeded")

    def set_costs(self, cost):
        # reduced costs d_j = c_j - sum_i c_B(i) T[i][j]
        d = list(cost)
        for i, bi in enumerate(self.basis):
            cb = cost[bi]
            if cb:
                row = self.T[i]
                d = [a - cb * b if b else a for a, b in zip(d, row)]
        self.d = d

    def run(self, allowed):
        F = self.F
        while True:
            e = next((j for j in allowed if self.d[j] and F.sign(self.d[j]) > 0), None)
            if e is None:
                return None
            r = None
            best = None
            for i in range(self.m):
                a = self.T[i][e]
                if not a or F.sign(a) <= 0:
                    continue
                ratio = self.rhs[i] / a
                if r is None:
                    r, best = i, ratio
                    continue
                s = F.sign(ratio - best)
                if s < 0 or (s == 0 and self.basis[i] < self.basis[r]):
                    r, best = i, ratio
            if r is None:
                return e  # unbounded direction
            self.pivot(r, e)


def _dot(u, v):
    try:
        acc = 0
        for a, b in zip(u, v):
            if a and b:
                acc = acc + a * b
        return acc
    except NonlinearError:
        return None


def lp_solve(p: LinearProgram) -> LPResult:
    """Solve ``p``; exact mode certifies the result in rational arithmetic."""
    F = _Exact() if p.mode == "exact" else _Float(p.digits, p.tol)
    if F.exact or not F.mp:
        return _solve(p, F)
    with mpmath.workdps(p.digits):
        return _solve(p, F)


def _solve(p: LinearProgram, F) -> LPResult:
    n = len(p.c)
    A = [[F.coef(v) for v in row] for row in p.A]
    b = [F.data(v) for v in p.b]
    c = [F.data(v) for v in p.c]

    # variable substitution x_j = shift_j + sum sign * x'_col
    cols, shift, ub = [], [], []
    for j, (lo, hi) in enumerate(p.bounds):
        lo = None if lo is None else F.coef(lo)
        hi = None if hi is None else F.coef(hi)
        if lo is not None:
            cols.append((j, 1))
            shift.append(lo)
            if hi is not None:
                if F.sign(hi - lo) < 0:
                    return LPResult("infeasible")
                ub.append((len(cols) - 1, hi - lo))
        elif hi is not None:
            cols.append((j, -1))
            shift.append(hi)
        else:
            cols.append((j, 1))
            cols.append((j, -1))
            shift.append(F.zero)
    sh = shift  # one entry per original variable

    rows, rhs, rels = [], [], []
    for i, row in enumerate(A):
        rows.append([row[j] * s for j, s in cols])
        off = F.zero
        for j in range(n):
            if row[j] and sh[j]:
                off = off + row[j] * sh[j]
        rhs.append(b[i] - off)
        rels.append(p.rel[i])
    for ci, width in ub:
        r = [F.zero] * len(cols)
        r[ci] = F.one
        rows.append(r)
        rhs.append(width)
        rels.append("<=")
    m = len(rows)
    nslack = sum(r != "=" for r in rels)
    ncols = len(cols) + nslack
    s = len(cols)
    for i in range(m):
        ext = [F.zero] * nslack
        if rels[i] != "=":
            ext[s - len(cols)] = F.one if rels[i] == "<=" else -F.one
            s += 1
        rows[i] = rows[i] + ext
    flip = []
    for i in range(m):
        if F.sign(rhs[i]) < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]
            flip.append(-1)
        else:
            flip.append(1)
    for i in range(m):
        art = [F.zero] * m
        art[i] = F.one
        rows[i] = rows[i] + art

    tab = _Tableau(F, rows, rhs, ncols)
    cost1 = [F.zero] * ncols + [-F.one] * m
    tab.set_costs(cost1)
    tab.run(range(ncols))
    infeas = F.zero
    for i, bi in enumerate(tab.basis):
        if bi >= ncols:
            infeas = infeas + tab.rhs[i]
    if F.sign(infeas) > 0:
        y = [(-F.one - tab.d[ncols + i]) * flip[i] for i in range(m)]
        return LPResult("infeasible", farkas=y, pivots=tab.pivots)

    # drive artificials out of the basis where possible
    for i in range(m):
        if tab.basis[i] >= ncols:
            j = next((j for j in range(ncols) if tab.T[i][j] and F.sign(tab.T[i][j]) != 0), None)
            if j is not None:
                tab.pivot(i, j)

    sgn = 1 if p.sense == "max" else -1
    cstd = [c[j] * s * sgn for j, s in cols] + [F.zero] * (nslack + m)
    tab.set_costs(cstd)
    e = tab.run(range(ncols))

    def recover(vals):
        x = list(sh)
        for k, (j, s) in enumerate(cols):
            if vals[k]:
                x[j] = x[j] + vals[k] * s
        return x

    if e is not None:
        dirn = [F.zero] * ncols
        dirn[e] = F.one
        for i, bi in enumerate(tab.basis):
            if bi < ncols:
                dirn[bi] = -tab.T[i][e]
        ray = [F.zero] * n
        for k, (j, s) in enumerate(cols):
            if dirn[k]:
                ray[j] = ray[j] + dirn[k] * s
        return LPResult("unbounded", ray=ray, pivots=tab.pivots)

    vals = [F.zero] * ncols
    for i, bi in enumerate(tab.basis):
        if bi < ncols:
            vals[bi] = tab.rhs[i]
    x = recover(vals)
    y = [-tab.d[ncols + i] * flip[i] * sgn for i in range(m)]
    return LPResult("optimal", x=x, objective=_dot(c, x), dual=y, pivots=tab.pivots)


@dataclass
class StrictResult:
    feasible: bool
    witness: list | None = None
    row: int | None = None
    tried: list = field(default_factory=list)


def lp_feasible_strict(p: LinearProgram, strict_rows) -> StrictResult:
    """Point satisfying all rows of ``p`` with one of ``strict_rows`` strict.

    Each candidate row in turn gets an auxiliary slack ``0 <= s <= 1`` that is
    maximized; a positive optimum gives the witness.
    """
    if p.mode != "exact":
        raise ExactModeError("strict feasibility is decided in exact mode only")
    for row in p.A:
        for v in row:
            if not is_rational(v):
                raise ExactModeError("strict feasibility needs rational coefficients")
    tried = []
    for i in strict_rows:
        if p.rel[i] == "=":
            continue
        tried.append(i)
        A = [list(r) + [0] for r in p.A]
        A[i][-1] = -1 if p.rel[i] == ">=" else 1
        q = LinearProgram([0] * len(p.c) + [1], A, p.rel, p.b, "max",
                          list(p.bounds) + [(0, 1)], "exact")
        res = lp_solve(q)
        if res.status == "optimal" and scalar_sign(res.x[-1]) > 0:
            return StrictResult(True, res.x[:-1], i, tried)
    return StrictResult(False, None, None, tried)


# ---------------------------------------------------------------- exact linear algebra

def rref(M):
    """Reduced row echelon form over the rationals; returns (R, pivot columns)."""
    R = [[Fraction(v) for v in row] for row in M]
    piv = []
    r = 0
    ncols = len(R[0]) if R else 0
    for col in range(ncols):
        k = next((i for i in range(r, len(R)) if R[i][col] != 0), None)
        if k is None:
            continue
        R[r], R[k] = R[k], R[r]
        pv = R[r][col]
        R[r] = [v / pv for v in R[r]]
        for i in range(len(R)):
            if i != r and R[i][col] != 0:
                f = R[i][col]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        piv.append(col)
        r += 1
        if r == len(R):
            break
    return R, piv


def solve_rational(A, b, ncols: int | None = None):
    """All rational solutions of ``A x = b`` as ``(x0, basis)`` or None."""
    k = ncols if ncols is not None else (len(A[0]) if A else 0)
    if not A:
        return [Fraction(0)] * k, [[Fraction(int(i == j)) for i in range(k)] for j in range(k)]
    aug = [list(row) + [bi] for row, bi in zip(A, b)]
    R, piv = rref(aug)
    if k in piv:
        return None
    x0 = [Fraction(0)] * k
    for i, pc in enumerate(piv):
        x0[pc] = R[i][k]
    free = [j for j in range(k) if j not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * k
        v[f] = Fraction(1)
        for i, pc in enumerate(piv):
            v[pc] = -R[i][f]
        basis.append(v)
    return x0, basis


def nullspace_rational(A, ncols: int | None = None):
    k = ncols if ncols is not None else len(A[0])
    return solve_rational(A, [0] * len(A), k)[1]

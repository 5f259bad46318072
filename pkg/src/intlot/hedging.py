"""Super- and subhedging with real, rational and integer positions."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .arbitrage import DEFAULT_RADIUS, MP_DIGITS, _all_rational, _lp_mode, na_check, nia_check
from .errors import BudgetExceeded, InputError, ModelHasArbitrage, ModelHasIntegerArbitrage
from .lattice import dirichlet_simultaneous
from .linprog import LinearProgram, lp_solve
from .market import MarketModel, Strategy, discounted_claim, gain_matrix, gain_vectors
from .scalar import (is_rational, scalar_cmp, scalar_floor, scalar_max, scalar_min,
                     scalar_sign, to_mpf)

ENUM_BUDGET = 10**7


@dataclass
class HedgeResult:
    direction: str  # super | sub
    cls: str  # real | rational | integer
    price: object
    strategy: Strategy | None
    status: str  # certified-optimal | optimal-within-radius | epsilon-approximate(eps)
    meta: dict = field(default_factory=dict)


def _sense(direction):
    if direction not in ("super", "sub"):
        raise InputError(f"direction must be super or sub, not {direction!r}")
    return 1 if direction == "super" else -1


def _require_nia(m, radius=DEFAULT_RADIUS):
    rep = nia_check(m, radius)
    if rep.verdict == "fails":
        raise ModelHasIntegerArbitrage("the model admits an integer arbitrage")
    return rep


def _dot(row, x):
    acc = Fraction(0)
    for g, v in zip(row, x):
        if g and v:
            acc = acc + g * v
    return acc


def hedge_value(m: MarketModel, C, x, direction: str = "super"):
    """Cheapest V0 that makes positions x a super- (sub-)hedge:
    ``max_l (C_hat - G x)`` (``min`` for sub)."""
    G = gain_matrix(m)
    Ch = discounted_claim(m, C)
    vals = [Ch[l] - _dot(G[l], x) for l in range(m.n)]
    return scalar_max(vals) if _sense(direction) > 0 else scalar_min(vals)


def check_hedge(m: MarketModel, C, s: Strategy, direction: str = "super") -> bool:
    """Exact sign check of V_T against C in every state."""
    G = gain_matrix(m)
    Ch = discounted_claim(m, C)
    sg = _sense(direction)
    return all(sg * scalar_sign(s.V0 + _dot(G[l], s.vector()) - Ch[l]) >= 0 for l in range(m.n))


# ================================================================ real

def real_hedge(m: MarketModel, C, direction: str = "super", eps=None,
               check: bool = True) -> HedgeResult:
    sg = _sense(direction)
    if check:
        _require_nia(m)
    G = gain_matrix(m)
    Ch = discounted_claim(m, C)
    K = m.n_positions
    rows = [[1] + list(G[l]) for l in range(m.n)]
    rel = [">=" if sg > 0 else "<="] * m.n
    mode = _lp_mode(G)
    r = lp_solve(LinearProgram([1] + [0] * K, rows, rel, list(Ch),
                               "min" if sg > 0 else "max", [(None, None)] * (K + 1), **mode))
    if r.status != "optimal":
        raise ModelHasArbitrage(f"hedging LP is {r.status}")
    V0, x = r.x[0], r.x[1:]
    exact = mode["mode"] == "exact"
    if not exact:
        V0, x = float(V0), [float(v) for v in x]
    s = Strategy.from_vector(m, x, V0) if exact else None
    res = HedgeResult(direction, "real", V0, s, "certified-optimal",
                      {"positions": x, "exact": exact})
    if eps is None:
        return res
    return _rational_approx(m, C, direction, res, Fraction(eps))


def _rational_approx(m, C, direction, res, eps):
    """Rational positions within delta of the real ones; V0 recomputed
    exactly from the hedge condition, so the cost rises by < eps."""
    x = res.meta["positions"]
    if all(is_rational(v) for v in x):
        s = Strategy.from_vector(m, [Fraction(v) for v in x], res.price, "rational")
        return HedgeResult(direction, "rational", res.price, s, "certified-optimal", res.meta)
    G = gain_matrix(m)
    width = max(sum(abs(float(g)) for g in row) for row in G)
    delta = eps / (2 * (1 + Fraction(math.ceil(width))))
    with mpmath.workdps(MP_DIGITS):
        xr = [Fraction(str(mpmath.nstr(to_mpf(v), 40))).limit_denominator(
              max(2, math.ceil(1 / delta))) for v in x]
    V0 = hedge_value(m, C, xr, direction)
    s = Strategy.from_vector(m, xr, V0, "rational")
    return HedgeResult(direction, "rational", V0, s, f"epsilon-approximate({eps})",
                       {"positions": xr, "delta": delta, "real_price": res.price})


# ================================================================ integer

def _default_radius(m, C, direction):
    x = real_hedge(m, C, direction, check=False).meta["positions"]
    top = max((abs(float(v)) for v in x), default=0.0)
    return 2 * (math.ceil(top) + 1)


def integer_hedge(m: MarketModel, C, direction: str = "super", radius: int | None = None,
                  check: bool = True) -> HedgeResult:
    """Optimal integer positions in the box [-R, R]; ties go to the
    lexicographically smallest position vector."""
    sg = _sense(direction)
    if check:
        _require_nia(m)
    R = radius if radius is not None else _default_radius(m, C, direction)
    G = gain_matrix(m)
    if _all_rational(G):
        val, x = _branch_and_bound(m, C, sg, R)
        status = "certified-optimal"
    else:
        val, x = _enumerate(m, C, sg, R)
        status = "optimal-within-radius"
    s = Strategy.from_vector(m, [Fraction(v) for v in x], val, "integer")
    return HedgeResult(direction, "integer", val, s, status, {"radius": R})


def _enumerate(m, C, sg, R):
    G = gain_matrix(m)
    Ch = discounted_claim(m, C)
    K = m.n_positions
    if (2 * R + 1) ** K > ENUM_BUDGET:
        raise BudgetExceeded(f"{(2 * R + 1) ** K} integer points exceed the enumeration budget")
    Gf = np.array([[float(v) for v in row] for row in G])
    cf = np.array([float(v) for v in Ch])
    grid = np.arange(-R, R + 1)
    best, cands = math.inf, []
    head_k = max(K - 2, 0)
    tail = np.stack(np.meshgrid(*([grid] * (K - head_k)), indexing="ij"), -1).reshape(-1, K - head_k)
    tol = 1e-9 * max(1.0, float(np.abs(cf).max(initial=0)), float(np.abs(Gf).max(initial=0)) * R)
    for hd in itertools.product(grid, repeat=head_k):
        pts = np.hstack([np.tile(np.array(hd, dtype=float), (len(tail), 1)), tail]) if hd else tail.astype(float)
        vals = cf[None, :] - pts @ Gf.T
        f = sg * (vals.max(axis=1) if sg > 0 else vals.min(axis=1))
        lo = f.min()
        if lo <= best + tol:
            best = min(best, lo)
            cands = [c for c in cands if c[0] <= best + tol]
            cands += [(f[i], tuple(int(v) for v in pts[i])) for i in np.nonzero(f <= best + tol)[0]]
    # exact comparison among float near-ties
    exact = [(hedge_value(m, C, x, "super" if sg > 0 else "sub"), x) for _, x in cands]
    top = exact[0][0]
    for v, _ in exact[1:]:
        if sg * scalar_cmp(v, top) < 0:
            top = v
    x = min(x for v, x in exact if scalar_cmp(v, top) == 0)
    return top, x


def _relax(G, Ch, sg, lo, hi, cap=None):
    """LP relaxation in (V0, x) with box lo <= x <= hi; returns (V0, x) or None."""
    K = len(lo)
    rows = [[1] + list(r) for r in G]
    rel = [">=" if sg > 0 else "<="] * len(G)
    bnd = [(None, None)] + list(zip(lo, hi))
    A, b = list(rows), list(Ch)
    rel = list(rel)
    if cap is not None:
        A.append([1] + [0] * K)
        rel.append("<=" if sg > 0 else ">=")
        b.append(cap)
    r = lp_solve(LinearProgram([1] + [0] * K, A, rel, b, "min" if sg > 0 else "max", bnd))
    if r.status != "optimal":
        return None
    return r.x[0], r.x[1:]


def _is_int(v):
    return is_rational(v) and Fraction(v).denominator == 1


def _branch_and_bound(m, C, sg, R):
    G = gain_matrix(m)
    Ch = discounted_claim(m, C)
    K = m.n_positions
    direction = "super" if sg > 0 else "sub"
    # incumbent: the rounded real hedge
    root = _relax(G, Ch, sg, [-R] * K, [R] * K)
    x0 = [max(-R, min(R, scalar_floor(v + Fraction(1, 2)))) for v in root[1]]
    best = hedge_value(m, C, x0, direction)
    stack = [([-R] * K, [R] * K)]
    while stack:
        lo, hi = stack.pop()
        rel = _relax(G, Ch, sg, lo, hi)
        if rel is None:
            continue
        v, x = rel
        if sg * scalar_cmp(v, best) >= 0:
            continue
        j = next((i for i, xi in enumerate(x) if not _is_int(xi)), None)
        if j is None:
            xi = [int(t) for t in x]
            val = hedge_value(m, C, xi, direction)
            if sg * scalar_cmp(val, best) < 0:
                best = val
            continue
        f = scalar_floor(x[j])
        stack.append((lo, hi[:j] + [f] + hi[j + 1:]))
        stack.append((lo[:j] + [f + 1] + lo[j + 1:], hi))
    return best, _lex_smallest(G, Ch, sg, R, best)


def _lex_smallest(G, Ch, sg, R, best):
    """Lexicographically smallest integer x in the box attaining ``best``."""
    K = len(G[0])
    lo, hi = [-R] * K, [R] * K
    for j in range(K):
        # smallest feasible integer value of x_j with the remaining ones free
        a, b = lo[j], hi[j]
        while a < b:
            mid = (a + b) // 2
            h2 = hi[:j] + [mid] + hi[j + 1:]
            if _int_feasible(G, Ch, sg, lo, h2, best):
                b = mid
            else:
                a = mid + 1
        lo[j] = hi[j] = a
    return lo


def _int_feasible(G, Ch, sg, lo, hi, cap):
    """Is there an integer x in the box with hedge value at most (sub: at least) cap?"""
    stack = [(list(lo), list(hi))]
    while stack:
        l, h = stack.pop()
        rel = _relax(G, Ch, sg, l, h, cap)
        if rel is None:
            continue
        _, x = rel
        j = next((i for i, xi in enumerate(x) if not _is_int(xi)), None)
        if j is None:
            return True
        f = scalar_floor(x[j])
        stack.append((l, h[:j] + [f] + h[j + 1:]))
        stack.append((l[:j] + [f + 1] + l[j + 1:], h))
    return False


# ================================================================ bounds

def gap_bound(m: MarketModel):
    """Half root d times the largest summed per-period Euclidean gain norm."""
    GV = gain_vectors(m)
    sq = [[sum((g * g for g in GV[t][l]), Fraction(0)) if all(is_rational(g) for g in GV[t][l])
           else None for t in range(m.T)] for l in range(m.n)]
    roots = [[_rational_sqrt(v) for v in row] for row in sq]
    rd = _rational_sqrt(Fraction(m.d))
    if rd is not None and all(v is not None for row in roots for v in row):
        return rd / 2 * max(sum(row, Fraction(0)) for row in roots)
    with mpmath.workdps(MP_DIGITS):
        best = max(mpmath.fsum(mpmath.sqrt(mpmath.fsum(to_mpf(g) ** 2 for g in GV[t][l]))
                               for t in range(m.T)) for l in range(m.n))
        return float(mpmath.sqrt(m.d) / 2 * best)


def _rational_sqrt(v):
    if v is None:
        return None
    v = Fraction(v)
    a, b = math.isqrt(v.numerator), math.isqrt(v.denominator)
    return Fraction(a, b) if a * a == v.numerator and b * b == v.denominator else None


def copies_scaling(m: MarketModel, C, Ns, radius: int | None = None):
    """Rows ``(N, sigma_Z(N C)/N, per-copy gap)``."""
    _require_nia(m)
    sup = real_hedge(m, C, "super", check=False).price
    out = []
    for N in Ns:
        NC = tuple(N * c for c in C)
        h = integer_hedge(m, NC, "super", radius, check=False)
        per = h.price / N
        out.append((N, per, per - sup))
    return out


def rational_denominator_superhedge(m: MarketModel, C, N: int) -> HedgeResult:
    """Superhedge whose positions have denominators at most N."""
    if N < 2:
        raise InputError("N must be at least 2")
    if na_check(m).verdict != "holds":
        raise ModelHasArbitrage("the construction needs NA")
    real = real_hedge(m, C, "super", check=False)
    x = real.meta["positions"]
    k = m.n * m.d * (m.T + 1)
    den = 1
    if all(is_rational(v) for v in x):
        for v in x:
            den = math.lcm(den, Fraction(v).denominator)
    if den <= N and all(is_rational(v) for v in x):
        q, psi = den, [Fraction(v) for v in x]
    else:
        q, ps = dirichlet_simultaneous(x, N, dim=k)
        psi = [Fraction(p, q) for p in ps]
    b = N ** (-1.0 / k) * math.log(N)
    buffer = Fraction(math.ceil(b * 10**12), 10**12)
    S0 = [m.prices[j][0][0] for j in range(m.d)]
    phi1, psi1 = x[:m.d], psi[:m.d]
    V0 = real.price + buffer + sum(((a - c) * s for a, c, s in zip(psi1, phi1, S0)), Fraction(0))
    s = Strategy.from_vector(m, psi, V0, "rational")
    flag = None
    if not check_hedge(m, C, s, "super"):
        need = hedge_value(m, C, psi, "super")
        s = Strategy.from_vector(m, psi, need, "rational")
        V0, flag = need, "buffer-raised"
    meta = {"q": q, "buffer": buffer, "N": N}
    if flag:
        meta["flag"] = flag
    excess = float(V0 - real.price)
    return HedgeResult("super", "rational", V0, s, f"epsilon-approximate({excess:.6g})", meta)

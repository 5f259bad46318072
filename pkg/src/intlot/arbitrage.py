"""NA / NIA / NIFL detection, the support complement A, witnesses and
zero-gain strategy spaces."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import (BudgetExceeded, InvariantViolation, NonlinearError,
                     NotMartingaleMeasure)
from .linprog import LinearProgram, lp_feasible_strict, lp_solve, solve_rational
from .market import (MarketModel, Strategy, clear_denominators, gain_matrix,
                     gain_vectors, primitive, value_process, verify_arbitrage)
from .scalar import (FLOAT_TOL, NumericContext, components, is_rational,
                     scalar_sign, to_mpf)

DEFAULT_RADIUS = 50
SEARCH_BUDGET = 10**8
MP_DIGITS = 50
LOOSE_CAP = 2000


def _all_rational(rows) -> bool:
    return all(is_rational(v) for row in rows for v in row)


def _float_mode(rows) -> bool:
    return any(isinstance(v, float) for row in rows for v in row)


def _lp_mode(rows) -> dict:
    """LP settings able to carry coefficient matrix ``rows``."""
    if _all_rational(rows):
        return {"mode": "exact"}
    if _float_mode(rows):
        return {"mode": "float"}
    return {"mode": "float", "digits": MP_DIGITS}


# ================================================================ rational points

def _stack(rows, rhs):
    """Split ``rows . y = rhs`` into one rational system per constant."""
    A, b = [], []
    for row, h in zip(rows, rhs):
        keys = set(components(h))
        for v in row:
            keys |= set(components(v))
        for k in sorted(keys):
            A.append([components(v).get(k, Fraction(0)) for v in row])
            b.append(components(h).get(k, Fraction(0)))
    return A, b


def _implicit_rows(G, h):
    """Rows of ``G y >= h`` that hold with equality on the whole polyhedron.

    Returns ``(rows, feasible, certified)``.
    """
    m, k = len(G), len(G[0])
    if _all_rational(G):
        imp = []
        for i in range(m):
            p = LinearProgram(list(G[i]), G, [">="] * m, h, "max", [(None, None)] * k)
            r = lp_solve(p)
            if r.status == "infeasible":
                return [], False, True
            if r.status == "optimal" and scalar_sign(r.objective - h[i]) == 0:
                imp.append(i)
        return imp, True, True
    # homogenised: G z - h tau - t >= 0, tau >= 1, 0 <= t <= 1, maximise sum t
    A = [list(G[i]) + [-h[i]] + [-int(j == i) for j in range(m)] for i in range(m)]
    c = [0] * (k + 1) + [1] * m
    bounds = [(None, None)] * k + [(1, None)] + [(0, 1)] * m
    r = lp_solve(LinearProgram(c, A, [">="] * m, [0] * m, "max", bounds, **_lp_mode(G)))
    if r.status != "optimal":
        return [], False, False
    imp = [i for i in range(m) if r.x[k + 1 + i] < 0.5]
    return imp, True, _certify_implicit(G, h, imp)


def _certify_implicit(G, h, rows) -> bool:
    """Rational multipliers lam >= 0, lam_i >= 1 on ``rows``, with
    ``sum lam_i g_i = 0`` and ``sum lam_i h_i = 0`` prove the rows implicit."""
    if not rows:
        return True
    cols = [list(G[i]) + [h[i]] for i in rows]
    A, _ = _stack([[c[j] for c in cols] for j in range(len(cols[0]))],
                  [0] * len(cols[0]))
    if not A:
        return True
    p = LinearProgram([0] * len(rows), A, ["="] * len(A), [0] * len(A), "max",
                      [(1, None)] * len(rows))
    return lp_solve(p).status == "optimal"


def _rationalize(vals, denominators=(10**3, 10**6, 10**12, 10**24, 10**48)):
    for D in denominators:
        yield [Fraction(str(mpmath.nstr(to_mpf(v), 60, strip_zeros=False))).limit_denominator(D)
               if not isinstance(v, Fraction) else v for v in vals]


def _check_point(G, h, y) -> bool:
    """Exact: G y >= h everywhere, strictly somewhere."""
    strict = False
    for row, hi in zip(G, h):
        acc = -hi
        for g, v in zip(row, y):
            if v:
                acc = acc + g * v
        s = scalar_sign(acc)
        if s < 0:
            return False
        strict |= s > 0
    return strict


def _interior_point(G, h):
    """Rational y with G y > h on every row (the polyhedron has interior)."""
    m, k = len(G), len(G[0])
    A = [list(G[i]) + [-1] for i in range(m)]
    bounds = [(None, None)] * k + [(None, 1)]
    r = lp_solve(LinearProgram([0] * k + [1], A, [">="] * m, h, "max", bounds, **_lp_mode(G)))
    if r.status != "optimal":
        return None
    y = r.x[:k]
    if all(isinstance(v, Fraction) for v in y) and _check_point(G, h, y):
        return y
    for cand in _rationalize(y):
        if _check_point(G, h, cand):
            return cand
    return None


@dataclass
class RationalPoint:
    point: list | None
    exact: bool  # a None answer is proven when exact is True


def strict_rational_point(G, h) -> RationalPoint:
    """Rational y with ``G y >= h`` and at least one row strict.

    Implicit equalities are split into one rational system per constant,
    which pins down the rational points of the affine hull exactly; the
    search then recurses in the smaller space.
    """
    G = [list(r) for r in G]
    h = list(h)
    k = len(G[0]) if G else 0
    if not G:
        return RationalPoint(None, True)
    if k == 0:
        y: list = []
        return RationalPoint(y if _check_point(G, h, y) else None, True)
    imp, feasible, cert = _implicit_rows(G, h)
    if not feasible:
        return RationalPoint(None, cert)
    rest = [i for i in range(len(G)) if i not in imp]
    if not rest:
        return RationalPoint(None, cert)
    A, b = _stack([G[i] for i in imp], [h[i] for i in imp])
    sol = solve_rational(A, b, k)
    if sol is None:
        return RationalPoint(None, cert)
    y0, N = sol
    Gr, hr = [G[i] for i in rest], [h[i] for i in rest]
    if len(N) == k:
        y = _interior_point(Gr, hr)
        return RationalPoint(y, y is not None)
    if not N:
        return RationalPoint(y0 if _check_point(G, h, y0) else None, cert)
    G2 = [[sum((g * v[j] for j, g in enumerate(row) if v[j]), Fraction(0)) for v in N]
          for row in Gr]
    h2 = [hi - sum((g * y0[j] for j, g in enumerate(row) if y0[j]), Fraction(0))
          for row, hi in zip(Gr, hr)]
    sub = strict_rational_point(G2, h2)
    if sub.point is None:
        return RationalPoint(None, cert and sub.exact)
    y = [y0[j] + sum((w * v[j] for w, v in zip(sub.point, N)), Fraction(0)) for j in range(k)]
    if not _check_point(G, h, y):
        raise InvariantViolation("lifted rational point fails verification")
    return RationalPoint(y, True)


def cone_rational_point(M) -> RationalPoint:
    """Rational y with ``M y >= 0`` componentwise and ``M y != 0``."""
    M = [list(r) for r in M]
    res = strict_rational_point(M, [Fraction(0)] * len(M))
    if res.point is not None or res.exact:
        return res
    irr = [j for j in range(len(M[0])) if not _all_rational([[r[j] for r in M]])]
    if len(irr) != 1:
        return res
    # one irrational column: its coordinate is 0 or, after scaling, +-1
    j = irr[0]
    R = [[v for i, v in enumerate(r) if i != j] for r in M]

    def lift(y, xj):
        y = list(y)
        y.insert(j, Fraction(xj))
        return y

    if R[0]:
        sub = strict_rational_point(R, [Fraction(0)] * len(R))
        if sub.point is not None:
            return RationalPoint(lift(sub.point, 0), True)
    for sgn in (1, -1):
        h = [-sgn * r[j] for r in M]
        sub = strict_rational_point(R, h) if R[0] else RationalPoint(
            [] if _check_point([[]] * len(M), h, []) else None, True)
        if sub.point is not None:
            return RationalPoint(lift(sub.point, sgn), True)
        if not sub.exact:
            return res
    return RationalPoint(None, True)


def integer_direction(y) -> list[int]:
    """Primitive integer vector on the ray through rational ``y``."""
    L = 1
    for v in y:
        L = math.lcm(L, Fraction(v).denominator)
    z = [int(v * L) for v in y]
    g = 0
    for v in z:
        g = math.gcd(g, v)
    return [v // g for v in z] if g else z


# ================================================================ integer search

def _exact_nonneg(rows, phi):
    """Signs of rows . phi, exactly; None when some value is negative."""
    out = []
    for row in rows:
        acc = 0
        for g, p in zip(row, phi):
            if p:
                acc = acc + g * p
        s = scalar_sign(acc)
        if s < 0:
            return None
        out.append(s)
    return out


def integer_search_atom(rows, radius: int, budget: int = SEARCH_BUDGET):
    """Nonzero phi in ``[-radius, radius]^d`` with ``rows . phi >= 0`` and not
    identically zero, smallest sup-norm first (then lexicographic).

    A float screen proposes candidates; the final decision is exact.
    """
    d = len(rows[0])
    if (2 * radius + 1) ** d > budget:
        raise BudgetExceeded(f"{(2 * radius + 1) ** d} points exceed the search budget")
    M = np.array([[float(v) for v in row] for row in rows])
    scale = 1e-9 * max(1.0, float(np.abs(M).max(initial=0.0))) * max(1, radius)
    g = np.arange(-radius, radius + 1)
    heads = list(itertools.product(g, repeat=max(d - 2, 0)))
    tail_k = min(d, 2)
    tail = np.stack(np.meshgrid(*([g] * tail_k), indexing="ij"), -1).reshape(-1, tail_k)
    hits, loose = [], []
    for hd in heads:
        pts = np.hstack([np.tile(np.array(hd, dtype=float), (len(tail), 1)), tail]) if hd else tail.astype(float)
        vals = pts @ M.T
        nonneg = (vals.min(axis=1) >= -scale) & (np.abs(pts).max(axis=1) > 0)
        pos = vals.max(axis=1) > scale
        for i in np.nonzero(nonneg & pos)[0]:
            hits.append(tuple(int(v) for v in pts[i]))
        if len(loose) < LOOSE_CAP:
            for i in np.nonzero(nonneg & ~pos)[0][: LOOSE_CAP - len(loose)]:
                loose.append(tuple(int(v) for v in pts[i]))
    # values within float noise of zero get a capped number of exact checks
    key = lambda p: (max(abs(v) for v in p), p)
    for phi in sorted(hits, key=key) + sorted(loose, key=key):
        signs = _exact_nonneg(rows, phi)
        if signs is not None and any(signs):
            return phi
    return None


# ================================================================ NA

@dataclass
class SupportProfile:
    A: list  # state indices
    witness_measure: tuple | None
    max_mass: list
    exact: bool  # LP stage run in exact rational arithmetic
    measure_exact: bool = False


@dataclass
class NAResult:
    verdict: str  # holds | fails
    profile: SupportProfile
    witness: Strategy | None = None
    witness_float: bool = False


def _martingale_rows(m: MarketModel):
    """Equality rows (over Q) of the martingale polytope."""
    G = gain_matrix(m)
    rows = [[G[l][s] for l in range(m.n)] for s in range(m.n_positions)]
    rows.append([1] * m.n)
    rhs = [0] * m.n_positions + [1]
    return rows, rhs


def _rational_measures(m: MarketModel, A):
    """A rational martingale measure with support exactly Omega minus A, if
    the rational points of the polytope contain one."""
    rows, rhs = _martingale_rows(m)
    S, b = _stack(rows, rhs)
    keep = [l for l in range(m.n) if l not in A]
    if not keep:
        return None
    sols = []
    for l in keep:
        c = [int(i == l) for i in range(m.n)]
        bounds = [(0, 0) if i in A else (0, None) for i in range(m.n)]
        r = lp_solve(LinearProgram(c, S, ["="] * len(S), b, "max", bounds))
        if r.status != "optimal" or r.objective <= 0:
            return None
        sols.append(r.x)
    return tuple(sum(x[i] for x in sols) / len(sols) for i in range(m.n))


def na_check(m: MarketModel) -> NAResult:
    rows, rhs = _martingale_rows(m)
    mode = _lp_mode(rows)
    exact = mode["mode"] == "exact"
    K = m.n_positions
    maxima, sols, duals = [], [], []
    for l in range(m.n):
        c = [int(i == l) for i in range(m.n)]
        r = lp_solve(LinearProgram(c, rows, ["="] * len(rows), rhs, "max", **mode))
        if r.status == "infeasible":
            pos = list(r.farkas[:K])
            s = Strategy.from_vector(m, pos if exact else [float(v) for v in pos], 0 if exact else 0.0)
            s = _orient(m, s, exact)
            prof = SupportProfile(list(range(m.n)), None, [0] * m.n, exact)
            return NAResult("fails", prof, s, not exact)
        maxima.append(r.objective)
        sols.append(r.x)
        duals.append(r.dual)
    tol = None if exact else (FLOAT_TOL if m.mode == "float" else 1e-20)
    A = [l for l in range(m.n) if (maxima[l] == 0 if exact else maxima[l] < tol)]
    if exact:
        Q = tuple(sum(x[i] for x in sols) / m.n for i in range(m.n))
        mexact = True
    else:
        Q = _rational_measures(m, A) if m.mode == "exact" else None
        mexact = Q is not None
        if Q is None:
            Q = tuple(float(sum(x[i] for x in sols) / m.n) for i in range(m.n))
    prof = SupportProfile(A, Q, maxima if exact else [float(v) for v in maxima], exact, mexact)
    if not A:
        return NAResult("holds", prof)
    pos = [0] * K
    for l in A:
        pos = [a + b for a, b in zip(pos, duals[l][:K])]
    if not exact:
        pos = [float(v) for v in pos]
    s = Strategy.from_vector(m, pos, 0 if exact else 0.0)
    return NAResult("fails", prof, s, not exact)


def _orient(m, s, exact):
    """Farkas vectors are defined up to sign conventions; keep the profitable one."""
    mm = m if exact else m.to_float()
    if verify_arbitrage(mm, s).is_arbitrage:
        return s
    return s.scaled(-1)


def nifl_check(m: MarketModel) -> str:
    """NIFL is equivalent to NA on a finite state space."""
    return na_check(m).verdict


# ================================================================ rationalisation

def rationalize_arbitrage(m: MarketModel, witness: Strategy | None = None) -> Strategy:
    """Integer arbitrage for rational data: strict LP feasibility, then
    clearing denominators."""
    G = gain_matrix(m)
    if not _all_rational(G):
        raise InvariantViolation("rationalize_arbitrage needs rational gains")
    K = m.n_positions
    order = list(range(m.n))
    if witness is not None:
        # try the witness's profitable states first
        VT = [scalar_sign(v) for v in value_process(m, witness).terminal()]
        order.sort(key=lambda l: -VT[l])
    p = LinearProgram([0] * K, G, [">="] * m.n, [0] * m.n, "max", [(None, None)] * K)
    res = lp_feasible_strict(p, order)
    if not res.feasible:
        raise InvariantViolation("no rational arbitrage although NA fails")
    s = Strategy.from_vector(m, res.witness, Fraction(0), "rational")
    _, z = clear_denominators(s)
    z = primitive(z)
    if not verify_arbitrage(m, z).is_arbitrage:
        raise InvariantViolation("integer witness failed verification")
    return z


# ================================================================ NIA

@dataclass
class ArbitrageReport:
    property: str
    verdict: str  # holds | fails | no-witness-within-budget
    witness: Strategy | None = None
    radius: int | None = None
    A: list | None = None
    path: str = ""
    dependency_test: str | None = None  # per-atom rational-point test summary
    detail: dict = field(default_factory=dict)


def atoms(m: MarketModel):
    """(t, block index, state list, gain rows) for every one-period subproblem."""
    GV = gain_vectors(m)
    for t in range(1, m.T + 1):
        for b, block in enumerate(m.filtration[t - 1]):
            yield t, b, list(block), [GV[t - 1][l] for l in block]


def nia_check(m: MarketModel, radius: int = DEFAULT_RADIUS) -> ArbitrageReport:
    G = gain_matrix(m)
    if _all_rational(G):
        na = na_check(m)
        rep = ArbitrageReport("NIA", na.verdict, radius=None, A=na.profile.A, path="rational")
        if na.verdict == "fails":
            rep.witness = rationalize_arbitrage(m, na.witness if not na.witness_float else None)
        return rep
    ctx = m.context()
    if m.d == 1:
        for t, b, block, rows in atoms(m):
            signs = [scalar_sign(r[0], ctx) for r in rows]
            for phi in (1, -1):
                if all(phi * s >= 0 for s in signs) and any(s != 0 for s in signs):
                    w = Strategy.one_period(m, t, b, (Fraction(phi),), Fraction(0), "integer")
                    return ArbitrageReport("NIA", "fails", w, path="single-asset")
        return ArbitrageReport("NIA", "holds", A=na_check(m).profile.A, path="single-asset")
    if m.mode == "float":
        return _nia_float(m, radius)
    # general path: bounded search, then the exact rational-point test
    na = na_check(m)
    A = na.profile.A
    exact_all = True
    skipped = False
    for t, b, block, rows in atoms(m):
        try:
            phi = integer_search_atom(rows, radius)
        except BudgetExceeded:
            phi, skipped = None, True
        if phi is not None:
            w = Strategy.one_period(m, t, b, tuple(Fraction(v) for v in phi), Fraction(0), "integer")
            return ArbitrageReport("NIA", "fails", w, radius, A, path="search")
        rp = cone_rational_point(rows)
        if rp.point is not None:
            phi = integer_direction(rp.point)
            w = Strategy.one_period(m, t, b, tuple(Fraction(v) for v in phi), Fraction(0), "integer")
            if not verify_arbitrage(m, w).is_arbitrage:
                raise InvariantViolation("rational-point witness failed verification")
            return ArbitrageReport("NIA", "fails", w, radius, A, path="dependency-test",
                                   dependency_test="rational point found")
        exact_all &= rp.exact
    if exact_all:
        return ArbitrageReport("NIA", "holds", None, radius, A, path="dependency-test",
                               dependency_test="no rational point (exact)")
    cert = corollary_certificate(m, na)
    if cert:
        return ArbitrageReport("NIA", "holds", None, radius, A, path="zero-gain-certificate",
                               dependency_test="no rational point (numeric classification)",
                               detail={"measure": cert["measure"]})
    if skipped:
        raise BudgetExceeded("integer search skipped and the dependency test is inconclusive")
    return ArbitrageReport("NIA", "no-witness-within-budget", None, radius, A, path="search",
                           dependency_test="no rational point (numeric classification)")


def _nia_float(m: MarketModel, radius: int) -> ArbitrageReport:
    for t, b, block, rows in atoms(m):
        phi = integer_search_atom(rows, radius)
        if phi is not None:
            w = Strategy.one_period(m, t, b, tuple(float(v) for v in phi), 0.0, "integer")
            return ArbitrageReport("NIA", "fails", w, radius, path="search")
    return ArbitrageReport("NIA", "no-witness-within-budget", None, radius, path="search")


def corollary_certificate(m: MarketModel, na: NAResult | None = None):
    """NIA proof from an exact rational martingale measure whose zero-gain
    space has no rational point with nonzero gains."""
    na = na or na_check(m)
    if not na.profile.measure_exact or na.profile.witness_measure is None:
        return None
    Q = na.profile.witness_measure
    z = zero_gain_space(m, Q)
    if z.lattice_status == "only-trivial-integer":
        return {"A": na.profile.A, "measure": Q}
    return None


# ================================================================ zero gains

def is_martingale_measure(m: MarketModel, Q, tol: float = FLOAT_TOL) -> bool:
    if len(Q) != m.n:
        return False
    ctx = NumericContext("float", tol) if m.mode == "float" or any(isinstance(q, float) for q in Q) else None
    if any(scalar_sign(q, ctx) < 0 for q in Q):
        return False
    if scalar_sign(sum(Q) - 1, ctx) != 0:
        return False
    G = gain_matrix(m)
    for s in range(m.n_positions):
        try:
            acc = sum((Q[l] * G[l][s] for l in range(m.n) if Q[l] and G[l][s]), Fraction(0))
            if scalar_sign(acc, ctx) != 0:
                return False
        except NonlinearError:
            with mpmath.workdps(80):
                acc = sum(to_mpf(Q[l]) * to_mpf(G[l][s]) for l in range(m.n))
                if abs(acc) > mpmath.mpf(10) ** -60:
                    return False
    return True


@dataclass
class ZeroGainSpace:
    measure: tuple
    support: list
    basis: np.ndarray  # rows: real basis of the zero-gain space modulo null-gain strategies
    rational_basis: list | None
    lattice_status: str  # only-trivial-integer | nontrivial-integer-found | unknown-within-budget
    witness: Strategy | None = None


def zero_gain_space(m: MarketModel, Q, radius: int = 10) -> ZeroGainSpace:
    """Strategies with V0 = 0 and V_T = 0 on the support of Q.

    Strategies whose terminal value vanishes in every state are quotiented
    out: they are zero as claims and cannot carry an arbitrage.
    """
    if not is_martingale_measure(m, Q):
        raise NotMartingaleMeasure("Q is not a martingale measure for this model")
    ctx = NumericContext("float", FLOAT_TOL) if any(isinstance(q, float) for q in Q) else None
    supp = [l for l in range(m.n) if scalar_sign(Q[l], ctx) > 0]
    G_all = gain_matrix(m)
    G_s = [G_all[l] for l in supp]
    K = m.n_positions
    Fs = np.array([[float(v) for v in r] for r in G_s]).reshape(len(supp), K)
    Fa = np.array([[float(v) for v in r] for r in G_all]).reshape(m.n, K)
    basis = _real_zero_gain(Fs, Fa)
    if m.mode == "float":
        # no exact splitting available: bounded search for nonzero gains
        for phi in itertools.product(range(-radius, radius + 1), repeat=K):
            v = np.array(phi, dtype=float)
            if not v.any():
                continue
            if np.abs(Fs @ v).max(initial=0) <= 1e-9 and np.abs(Fa @ v).max() > 1e-9:
                w = Strategy.from_vector(m, [float(x) for x in phi], 0.0, "integer")
                return ZeroGainSpace(tuple(Q), supp, basis, None, "nontrivial-integer-found", w)
        status = "only-trivial-integer" if basis.shape[0] == 0 else "unknown-within-budget"
        return ZeroGainSpace(tuple(Q), supp, basis, None, status)
    A, _ = _stack(G_s, [0] * len(G_s))
    sol = solve_rational(A, [0] * len(A), K) if A else ([Fraction(0)] * K, [
        [Fraction(int(i == j)) for i in range(K)] for j in range(K)])
    rb = sol[1]
    for v in rb:
        gains = [sum((g * x for g, x in zip(row, v) if x), Fraction(0)) for row in G_all]
        if any(scalar_sign(x) != 0 for x in gains):
            z = integer_direction(v)
            w = Strategy.from_vector(m, [Fraction(x) for x in z], Fraction(0), "integer")
            return ZeroGainSpace(tuple(Q), supp, basis, rb, "nontrivial-integer-found", w)
    return ZeroGainSpace(tuple(Q), supp, basis, rb, "only-trivial-integer")


def _real_zero_gain(Fs: np.ndarray, Fa: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Basis of ker Fs intersected with the orthogonal complement of ker Fa."""
    K = Fa.shape[1]

    def kernel(M):
        if M.shape[0] == 0:
            return np.eye(K)
        _, s, vt = np.linalg.svd(M)
        r = int((s > rtol * max(1.0, s.max(initial=0))).sum())
        return vt[r:]

    ks = kernel(Fs)
    if ks.shape[0] == 0:
        return ks
    # project ker Fs onto the row space of Fa (= (ker Fa)^perp)
    ka = kernel(Fa)
    P = np.eye(K) - (ka.T @ ka if ka.shape[0] else 0)
    proj = ks @ P
    if not proj.size:
        return proj
    u, s, vt = np.linalg.svd(proj)
    r = int((s > rtol * max(1.0, s.max(initial=0))).sum())
    return vt[:r]


def qmax_membership(m: MarketModel, Q) -> bool:
    if not is_martingale_measure(m, Q):
        return False
    A = set(na_check(m).profile.A)
    ctx = NumericContext("float", FLOAT_TOL) if any(isinstance(q, float) for q in Q) else None
    supp = {l for l in range(m.n) if scalar_sign(Q[l], ctx) > 0}
    return supp == set(range(m.n)) - A

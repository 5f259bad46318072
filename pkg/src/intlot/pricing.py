"""Price intervals for claims and one-period membership tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .arbitrage import (DEFAULT_RADIUS, MP_DIGITS, ArbitrageReport, _lp_mode, _martingale_rows, _stack,
                        cone_rational_point, integer_direction, integer_search_atom,
                        na_check, nia_check)
from .errors import (BudgetExceeded, ExactModeError, InputError, ModelHasArbitrage,
                     ModelHasIntegerArbitrage, NotAdapted, NotOnePeriod, TerminalMismatch)
from .linprog import LinearProgram, lp_solve
from .market import MarketModel, discounted_claim, gain_vectors, payoff_of
from .scalar import scalar_sign, to_mpf


@dataclass
class PriceInterval:
    lo: object
    hi: object
    lo_open: object  # True | False | "unknown"
    hi_open: object
    empty: bool
    replicable: bool
    provenance: str  # classical | nia-envelope
    exact: bool = True
    flags: list = field(default_factory=list)

    def contains(self, p) -> object:
        if self.empty:
            return False
        a, b = scalar_sign(p - self.lo), scalar_sign(p - self.hi)
        if a > 0 > b:
            return True
        if a < 0 or b > 0:
            return False
        edge = self.lo_open if a == 0 else self.hi_open
        return "unknown" if edge == "unknown" else not edge


def _bounds_over_measures(m: MarketModel, C, A=()):
    """min and max of E_Q[C_hat] over martingale measures vanishing on A.

    Irrational gains force a high-precision float LP.  Its optimum is then
    compared with the same LP over rational measures; when both agree to
    far below float resolution the exact rational-measure value is kept.
    """
    rows, rhs = _martingale_rows(m)
    Ch = discounted_claim(m, C)
    mode = _lp_mode(rows)
    bounds = [(0, 0) if l in A else (0, None) for l in range(m.n)]
    out, exact = [], mode["mode"] == "exact"
    for sense in ("min", "max"):
        r = lp_solve(LinearProgram(list(Ch), rows, ["="] * len(rows), rhs, sense, bounds, **mode))
        if r.status != "optimal":
            return None
        if exact:
            out.append(r.objective)
            continue
        with mpmath.workdps(MP_DIGITS):
            val = mpmath.fsum(to_mpf(q) * to_mpf(c) for q, c in zip(r.x, Ch))
        out.append(_recover(m, Ch, A, sense, val))
    ok = all(not isinstance(v, float) for v in out)
    return out[0], out[1], ok


def _recover(m, Ch, A, sense, val):
    if m.mode == "float":
        return float(val)
    rows, rhs = _martingale_rows(m)
    S, b = _stack(rows, rhs)
    bounds = [(0, 0) if l in A else (0, None) for l in range(m.n)]
    try:
        r = lp_solve(LinearProgram(list(Ch), S, ["="] * len(S), b, sense, bounds))
    except ExactModeError:
        return float(val)
    if r.status == "optimal" and r.objective is not None:
        with mpmath.workdps(MP_DIGITS):
            if abs(to_mpf(r.objective) - val) < mpmath.mpf(10) ** -30:
                return r.objective
    return float(val)


def classical_price_bounds(m: MarketModel, C) -> PriceInterval:
    na = na_check(m)
    if na.verdict != "holds":
        raise ModelHasArbitrage("the model admits a real arbitrage")
    lo, hi, exact = _bounds_over_measures(m, C)
    single = scalar_sign(hi - lo, None if exact else m.context()) == 0
    return PriceInterval(lo, hi, not single, not single, False, single, "classical", exact)


def _envelope(m: MarketModel, C, A) -> PriceInterval:
    res = _bounds_over_measures(m, C, A)
    if res is None:
        return PriceInterval(None, None, "unknown", "unknown", True, False, "nia-envelope")
    lo, hi, exact = res
    single = scalar_sign(hi - lo, None if exact else m.context()) == 0
    return PriceInterval(lo, hi, "unknown", "unknown", False, single, "nia-envelope", exact)


def nia_price_interval(m: MarketModel, C, radius: int = DEFAULT_RADIUS) -> PriceInterval:
    rep = nia_check(m, radius)
    if rep.verdict == "fails":
        raise ModelHasIntegerArbitrage("the model admits an integer arbitrage")
    env = _envelope(m, C, rep.A or [])
    if rep.verdict != "holds":
        env.flags.append("nia-not-certified")
    if m.T == 1 and not env.empty and env.exact:
        lo_in = price_membership_T1(m, C, env.lo, radius, _env=env).verdict
        hi_in = lo_in if env.replicable else price_membership_T1(m, C, env.hi, radius, _env=env).verdict
        env.lo_open = _openness(lo_in)
        env.hi_open = _openness(hi_in)
        if env.replicable and lo_in == "not-member":
            env.empty = True
    return env


def _openness(verdict):
    return {"member": False, "not-member": True}.get(verdict, "unknown")


@dataclass
class Membership:
    verdict: str  # member | not-member | unknown-within-budget
    witness: tuple | None = None  # (bank, assets..., claim) with zero initial value
    exact: bool = True
    path: str = ""


def price_membership_T1(m: MarketModel, C, p, radius: int = DEFAULT_RADIUS,
                        _env: PriceInterval | None = None) -> Membership:
    """Is p an integer-arbitrage-free price for C in a one-period model?"""
    if m.T != 1:
        raise NotOnePeriod("membership is decided for one-period models only")
    if scalar_sign(p) < 0:
        raise InputError("price must be nonnegative")
    rep = nia_check(m, radius)
    if rep.verdict == "fails":
        return Membership("not-member", None, True, "base-model-arbitrage")
    env = _env or _envelope(m, C, rep.A or [])
    if not env.empty and not env.replicable:
        a, b = scalar_sign(p - env.lo), scalar_sign(p - env.hi)
        if a > 0 and b < 0:
            return Membership("member", None, env.exact, "interior")
    Ch = discounted_claim(m, C)
    GV = gain_vectors(m)[0]
    M = [list(GV[l]) + [Ch[l] - p] for l in range(m.n)]
    rp = cone_rational_point(M)
    if rp.point is not None:
        return Membership("not-member", _with_bank(m, integer_direction(rp.point), p), True,
                          "dependency-test")
    if rp.exact and rep.verdict == "holds":
        return Membership("member", None, True, "dependency-test")
    try:
        phi = integer_search_atom(M, radius)
    except BudgetExceeded:
        phi = None
    if phi is not None:
        return Membership("not-member", _with_bank(m, phi, p), True, "search")
    return Membership("unknown-within-budget", None, False, "search")


def _with_bank(m: MarketModel, phi, p) -> tuple:
    """Prepend the bank position that makes the initial value zero."""
    phi = list(phi)
    cost = sum((phi[j] * m.prices[j][0][0] for j in range(m.d)), Fraction(0)) + phi[-1] * p
    return (-cost, *phi)


def _check_extension(m: MarketModel, C, X):
    C = payoff_of(C)
    if len(X) != m.T + 1 or any(len(row) != m.n for row in X):
        raise InputError(f"price process needs {m.T + 1} rows of {m.n} values")
    ctx = m.context()
    for t, part in enumerate(m.filtration):
        for b in part:
            if any(scalar_sign(X[t][l] - X[t][b[0]], ctx) != 0 for l in b):
                raise NotAdapted(f"price process varies within a block at time {t}")
    if any(scalar_sign(X[m.T][l] - C[l], ctx) != 0 for l in range(m.n)):
        raise TerminalMismatch("terminal value of the price process differs from the claim")
    if any(scalar_sign(v, ctx) < 0 for row in X for v in row):
        raise InputError("price process must be nonnegative")


def extension_nia_check(m: MarketModel, C, X, radius: int = DEFAULT_RADIUS) -> ArbitrageReport:
    """NIA for the market extended by the claim traded along price path X."""
    _check_extension(m, C, X)
    return nia_check(m.with_asset("X", X), radius)
